use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::codegen::{Blocking, CodegenPlan};
use crate::runtime::Preset;
use crate::seismic::{critical_dt, Model, Problem, SeismicError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BlockMode {
    Off,
    Fixed,
    Autotune,
    #[default]
    BestGuess,
}

/// Everything one CLI invocation needs. Field names are the `--set` keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub physics: String,
    pub shape: Vec<usize>,
    pub h: f64,
    pub nbpml: usize,
    pub velocity: f64,
    pub anomaly: f64,
    /// Model file base path (`<base>.bin` + `<base>.json`); overrides
    /// `velocity` and `anomaly`.
    pub model_file: Option<PathBuf>,
    pub f0: f64,
    pub t0: Option<f64>,
    /// Source amplitude multiplier.
    pub amplitude: f64,
    pub nt: Option<usize>,
    /// Simulated time in ms; takes precedence over `nt`.
    pub tn: Option<f64>,
    pub dt: Option<f64>,
    pub space_order: usize,
    pub nrec: usize,
    pub save: bool,
    pub parallel: bool,
    pub simd: bool,
    pub first_touch: Option<bool>,
    pub block_mode: BlockMode,
    pub blocks: Vec<usize>,
    /// Candidate block sizes per blocked dimension for `bench`; the default
    /// set when empty.
    pub candidates: Vec<usize>,
    pub preset: Preset,
    pub threads: Option<usize>,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let p = Problem::default();
        ExperimentConfig {
            physics: "acoustic".into(),
            shape: p.shape,
            h: p.h,
            nbpml: p.nbpml,
            velocity: p.velocity,
            anomaly: 0.0,
            model_file: None,
            f0: p.f0,
            t0: None,
            amplitude: 1.0,
            nt: Some(p.nt),
            tn: None,
            dt: None,
            space_order: p.space_order,
            nrec: p.nrec,
            save: false,
            parallel: true,
            simd: true,
            first_touch: None,
            block_mode: BlockMode::BestGuess,
            blocks: Vec::new(),
            candidates: Vec::new(),
            preset: Preset::Generic,
            threads: None,
            seed: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {msg}")]
    Read { path: PathBuf, msg: String },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid override {0:?} (expected key=value)")]
    Override(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Seismic(#[from] SeismicError),
}

impl ExperimentConfig {
    /// Reads a TOML or JSON (by extension) config and applies `key=value`
    /// overrides on top.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| ConfigError::Read {
                    path: p.to_path_buf(),
                    msg: e.to_string(),
                })?;
                if p.extension().is_some_and(|e| e == "json") {
                    let json: serde_json::Value = serde_json::from_str(&text)
                        .map_err(|e| ConfigError::Parse(e.to_string()))?;
                    toml::Value::try_from(json).map_err(|e| ConfigError::Parse(e.to_string()))?
                } else {
                    toml::from_str::<toml::Value>(&text)
                        .map_err(|e| ConfigError::Parse(e.to_string()))?
                }
            }
            None => toml::Value::Table(Default::default()),
        };
        let map = table
            .as_table_mut()
            .ok_or_else(|| ConfigError::Parse("config must be a table".into()))?;
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| ConfigError::Override(o.clone()))?;
            let value = toml::from_str::<toml::Table>(&format!("v = {v}"))
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(v.to_string()));
            map.insert(k.trim().to_string(), value);
        }
        let cfg: ExperimentConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.physics != "acoustic" {
            return bad(format!("unknown physics {:?}", self.physics));
        }
        if !(2..=3).contains(&self.shape.len()) || self.shape.iter().any(|&n| n < 3) {
            return bad(format!(
                "shape {:?} must have 2 or 3 extents of at least 3",
                self.shape
            ));
        }
        if !(self.h > 0.0 && self.velocity > 0.0 && self.f0 > 0.0) {
            return bad("h, velocity and f0 must be positive".into());
        }
        if self.space_order < 2 || !self.space_order.is_multiple_of(2) || self.space_order > 16 {
            return bad(format!(
                "space_order {} must be even, 2..=16",
                self.space_order
            ));
        }
        if self.nt.is_none() && self.tn.is_none() {
            return bad("one of nt or tn is required".into());
        }
        if self.block_mode == BlockMode::Fixed && self.blocks.contains(&0) {
            return bad("blocks must be positive".into());
        }
        Ok(())
    }

    pub fn problem(&self) -> Problem {
        Problem {
            shape: self.shape.clone(),
            h: self.h,
            nbpml: self.nbpml,
            velocity: self.velocity,
            anomaly: self.anomaly,
            space_order: self.space_order,
            nt: self.nt.unwrap_or(0),
            dt: self.dt,
            f0: self.f0,
            t0: self.t0,
            nrec: self.nrec,
        }
    }

    pub fn model(&self) -> Result<Model, ConfigError> {
        Ok(match &self.model_file {
            Some(p) => {
                let m = Model::load(p)?;
                if m.shape != self.shape {
                    return Err(ConfigError::Invalid(format!(
                        "model file shape {:?} differs from {:?}",
                        m.shape, self.shape
                    )));
                }
                m
            }
            None => self.problem().model()?,
        })
    }

    /// Time step and number of steps, rejecting unstable steps up front.
    pub fn time_axis(&self, model: &Model) -> Result<(f64, usize), ConfigError> {
        let limit = critical_dt(model, self.space_order)?;
        let dt = self.dt.unwrap_or(limit);
        if !(dt > 0.0 && dt <= limit) {
            return Err(SeismicError::Cfl { dt, limit }.into());
        }
        let nt = match (self.tn, self.nt) {
            (Some(tn), _) => (tn / dt).ceil() as usize + 1,
            (None, Some(nt)) => nt,
            (None, None) => unreachable!("validated"),
        };
        Ok((dt, nt))
    }

    pub fn plan(&self) -> CodegenPlan {
        let blocking = match self.block_mode {
            BlockMode::Off => Blocking::Off,
            _ => Blocking::Runtime,
        };
        CodegenPlan {
            parallel: self.parallel,
            simd: self.simd,
            blocking,
            first_touch: self.first_touch.unwrap_or(self.parallel),
            ..CodegenPlan::full()
        }
    }
}
