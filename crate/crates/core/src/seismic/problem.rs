use serde::{Deserialize, Serialize};

use super::{critical_dt, ricker, time_axis, AcousticSolver, Model, SeismicError};

/// A single-shot acquisition over a homogeneous (optionally perturbed)
/// model: one source near the top, a line of receivers at the same depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Problem {
    /// Interior grid points; the last dimension is depth.
    pub shape: Vec<usize>,
    /// Grid spacing in metres.
    pub h: f64,
    pub nbpml: usize,
    /// Background velocity in km/s.
    pub velocity: f64,
    /// Relative velocity change at the centre of a Gaussian anomaly.
    pub anomaly: f64,
    pub space_order: usize,
    pub nt: usize,
    /// Time step in ms; the stability limit when absent.
    pub dt: Option<f64>,
    /// Peak frequency in kHz.
    pub f0: f64,
    /// Wavelet delay in ms; `1 / f0` when absent.
    pub t0: Option<f64>,
    pub nrec: usize,
}

impl Default for Problem {
    fn default() -> Self {
        Problem {
            shape: vec![65, 65],
            h: 15.0,
            nbpml: 10,
            velocity: 1.5,
            anomaly: 0.0,
            space_order: 4,
            nt: 300,
            dt: None,
            f0: 0.010,
            t0: None,
            nrec: 11,
        }
    }
}

impl Problem {
    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    /// Velocity with the Gaussian anomaly centred in the domain.
    pub fn velocity_field(&self, anomaly: f64) -> Vec<f64> {
        let n: usize = self.shape.iter().product();
        let mut out = Vec::with_capacity(n);
        let centre: Vec<f64> = self.shape.iter().map(|&s| (s - 1) as f64 / 2.0).collect();
        let width = self.shape.iter().copied().min().unwrap_or(1) as f64 / 8.0;
        super::model::for_each_index(&self.shape, |idx| {
            let r2: f64 = idx
                .iter()
                .zip(&centre)
                .map(|(&i, c)| (i as f64 - c).powi(2))
                .sum();
            out.push(self.velocity * (1.0 + anomaly * (-r2 / (2.0 * width * width)).exp()));
        });
        out
    }

    pub fn model(&self) -> Result<Model, SeismicError> {
        Model::from_velocity(
            &self.shape,
            self.h,
            self.nbpml,
            &self.velocity_field(self.anomaly),
        )
    }

    pub fn background(&self) -> Result<Model, SeismicError> {
        Model::homogeneous(&self.shape, self.h, self.nbpml, self.velocity)
    }

    /// Source and receiver coordinates in metres.
    pub fn geometry(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let ext: Vec<f64> = self
            .shape
            .iter()
            .map(|&n| (n - 1) as f64 * self.h)
            .collect();
        let nd = self.ndim();
        let depth = 0.2 * ext[nd - 1] + 0.3 * self.h;
        let mut src: Vec<f64> = ext[..nd - 1]
            .iter()
            .map(|e| 0.5 * e + 0.25 * self.h)
            .collect();
        src.push(depth);
        let nrec = self.nrec.max(1);
        let rec = (0..nrec)
            .map(|r| {
                let frac = if nrec == 1 {
                    0.5
                } else {
                    0.1 + 0.8 * r as f64 / (nrec - 1) as f64
                };
                let mut c = vec![frac * ext[0]];
                c.extend(ext[1..nd - 1].iter().map(|e| 0.5 * e));
                c.push(depth);
                c
            })
            .collect();
        (vec![src], rec)
    }

    pub fn dt_for(&self, model: &Model) -> Result<f64, SeismicError> {
        match self.dt {
            Some(dt) => Ok(dt),
            None => critical_dt(model, self.space_order),
        }
    }

    pub fn solver_for(&self, model: Model, dt: f64) -> Result<AcousticSolver, SeismicError> {
        let (src, rec) = self.geometry();
        AcousticSolver::new(model, self.space_order, self.nt, dt, &src, &rec)
    }

    /// Solver over the (possibly perturbed) model with the default backend.
    pub fn solver(&self) -> Result<AcousticSolver, SeismicError> {
        let model = self.model()?;
        let dt = self.dt_for(&model)?;
        self.solver_for(model, dt)
    }

    /// Ricker source trace, `nt x 1`.
    pub fn wavelet(&self, dt: f64) -> Vec<f64> {
        let t0 = self.t0.unwrap_or(1.0 / self.f0);
        ricker(self.f0, t0, &time_axis(self.nt, dt))
    }
}
