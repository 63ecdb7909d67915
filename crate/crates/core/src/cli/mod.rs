//! Command-line driver: code generation, forward runs, verification suites
//! and block-size benchmarks.

mod config;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::codegen::{generate, CodegenPlan};
use crate::runtime::{
    autotune, best_guess_block, block_geometry, compile_and_load, default_candidates,
    detect_cache_size, tuning_nt, working_set_bytes, write_dump, DumpMeta, Kernel, Workspace,
};
use crate::seismic::{AcousticSolver, Backend, BlockPolicy, Problem};
use crate::verify::{
    adjoint_test, default_steps, roofline_report, taylor_test, write_jsonl, write_roofline_csv,
};

pub use config::{BlockMode, ConfigError, ExperimentConfig};

const ADJOINT_TOL: f64 = 1e-10;
const EQUIVALENCE_TOL: f64 = 1e-10;

#[derive(Parser, Debug)]
#[command(
    name = "fdjit",
    version,
    about = "Finite-difference stencil compiler and acoustic wave solver"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(clap::Args, Debug, Clone)]
pub struct Common {
    /// TOML or JSON experiment config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set space_order=8`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = "fdjit-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KernelKind {
    Forward,
    Adjoint,
    Gradient,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Suite {
    Adjoint,
    Taylor,
    Equivalence,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print (or write with --write) the generated C source.
    Codegen {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "forward")]
        kernel: KernelKind,
        /// Write `<out>/<kernel>.c` instead of printing.
        #[arg(long)]
        write: bool,
    },
    /// Forward modelling; dumps the wavefield, receiver record and stats.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Run a verification suite; exit status 0 iff it passes.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[command(flatten)]
        common: Common,
    },
    /// Time block-size candidates and emit roofline rows.
    Bench {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Seismic(#[from] crate::seismic::SeismicError),
    #[error(transparent)]
    Runtime(#[from] crate::runtime::RuntimeError),
    #[error(transparent)]
    Codegen(#[from] crate::codegen::CodegenError),
    #[error(transparent)]
    Verify(#[from] crate::verify::VerifyError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Outcome of one command: pass/fail plus the JSON summary written to
/// `<out>/summary.json`.
#[derive(Debug)]
pub struct Outcome {
    pub pass: bool,
    pub summary: Value,
}

pub fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    let (out, name) = match &cli.command {
        Command::Codegen { common, .. } => (common.out.clone(), "codegen"),
        Command::Run { common } => (common.out.clone(), "run"),
        Command::Verify { common, .. } => (common.out.clone(), "verify"),
        Command::Bench { common } => (common.out.clone(), "bench"),
    };
    let result = execute(&cli.command);
    let (pass, summary) = match result {
        Ok(o) => (o.pass, o.summary),
        Err(e) => {
            eprintln!("error: {e}");
            (
                false,
                json!({ "command": name, "pass": false, "error": e.to_string() }),
            )
        }
    };
    if std::fs::create_dir_all(&out).is_ok() {
        let _ = std::fs::write(
            out.join("summary.json"),
            serde_json::to_string_pretty(&summary).unwrap(),
        );
    }
    if !matches!(cli.command, Command::Codegen { write: false, .. }) {
        println!("{}", serde_json::to_string_pretty(&summary).unwrap());
    }
    if pass {
        std::process::ExitCode::SUCCESS
    } else {
        std::process::ExitCode::FAILURE
    }
}

pub fn execute(cmd: &Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::Codegen {
            common,
            kernel,
            write,
        } => cmd_codegen(&load(common)?, *kernel, write.then_some(&common.out)),
        Command::Run { common } => cmd_run(&load(common)?, &common.out),
        Command::Verify { suite, common } => cmd_verify(&load(common)?, *suite, &common.out),
        Command::Bench { common } => cmd_bench(&load(common)?, &common.out),
    }
}

fn load(common: &Common) -> Result<ExperimentConfig, ConfigError> {
    ExperimentConfig::load(common.config.as_deref(), &common.overrides)
}

fn blocks_policy(cfg: &ExperimentConfig) -> BlockPolicy {
    match cfg.block_mode {
        BlockMode::Fixed => BlockPolicy::Fixed(cfg.blocks.clone()),
        BlockMode::Autotune => BlockPolicy::Autotune,
        BlockMode::Off | BlockMode::BestGuess => BlockPolicy::BestGuess,
    }
}

/// Builds the solver; instability is rejected here, before compilation.
pub fn solver(cfg: &ExperimentConfig) -> Result<AcousticSolver, CliError> {
    if let Some(n) = cfg.threads {
        std::env::set_var("FDJIT_NUM_THREADS", n.to_string());
    }
    let model = cfg.model()?;
    let (dt, nt) = cfg.time_axis(&model)?;
    let problem = Problem {
        nt,
        ..cfg.problem()
    };
    let s = problem.solver_for(model, dt)?;
    Ok(s.with_backend(Backend::Jit {
        preset: cfg.preset,
        plan: cfg.plan(),
        blocks: blocks_policy(cfg),
    }))
}

fn source_trace(cfg: &ExperimentConfig, s: &AcousticSolver) -> Vec<f64> {
    let p = Problem {
        nt: s.nt,
        ..cfg.problem()
    };
    p.wavelet(s.dt)
        .into_iter()
        .map(|v| v * cfg.amplitude)
        .collect()
}

pub fn cmd_codegen(
    cfg: &ExperimentConfig,
    kernel: KernelKind,
    out: Option<&PathBuf>,
) -> Result<Outcome, CliError> {
    let s = solver(cfg)?;
    let ir = match kernel {
        KernelKind::Forward => s.forward_ir(cfg.save)?,
        KernelKind::Adjoint => s.adjoint_ir()?,
        KernelKind::Gradient => s.gradient_ir()?,
    };
    let src = generate(&ir, &cfg.plan())?;
    let mut summary = json!({
        "command": "codegen",
        "pass": true,
        "kernel": src.entry,
        "flops_per_point": src.flops_per_point,
        "bytes_per_point": src.bytes_per_point,
        "signature": src.signature,
    });
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(format!("{}.c", src.entry));
            std::fs::write(&path, &src.source)?;
            summary["source"] = json!(path);
        }
        None => print!("{}", src.source),
    }
    Ok(Outcome {
        pass: true,
        summary,
    })
}

pub fn cmd_run(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    let s = solver(cfg)?;
    let q = source_trace(cfg, &s);
    let fwd = s.forward(&q, cfg.save)?;
    std::fs::create_dir_all(out)?;
    let halo = s.halo();
    let slots = fwd.u.shape()[0];
    write_dump(
        &out.join("u"),
        fwd.u.as_slice(),
        &DumpMeta::new(fwd.u.shape(), halo, Some(slots)),
    )?;
    fwd.record.save(&out.join("rec"))?;
    let finite = fwd.u.as_slice().iter().all(|v| v.is_finite())
        && fwd.record.data.iter().all(|v| v.is_finite());
    let summary = json!({
        "command": "run",
        "pass": finite,
        "shape": cfg.shape,
        "padded_shape": s.padded_shape(),
        "nt": s.nt,
        "dt": s.dt,
        "space_order": s.space_order,
        "finite": finite,
        "max_abs_u": fwd.u.as_slice().iter().fold(0.0f64, |a, v| a.max(v.abs())),
        "stats": fwd.stats,
        "tuning": s.last_tuning(),
    });
    std::fs::write(
        out.join("stats.json"),
        serde_json::to_string_pretty(&summary).unwrap(),
    )?;
    Ok(Outcome {
        pass: finite,
        summary,
    })
}

pub fn cmd_verify(cfg: &ExperimentConfig, suite: Suite, out: &Path) -> Result<Outcome, CliError> {
    std::fs::create_dir_all(out)?;
    match suite {
        Suite::Adjoint => {
            let s = solver(cfg)?;
            let r = adjoint_test(&s, cfg.f0, cfg.seed)?;
            write_jsonl(std::fs::File::create(out.join("adjoint.jsonl"))?, &[&r])?;
            let pass = r.relative < ADJOINT_TOL;
            Ok(Outcome {
                pass,
                summary: json!({ "command": "verify", "suite": "adjoint", "pass": pass, "tolerance": ADJOINT_TOL, "report": r }),
            })
        }
        Suite::Taylor => {
            let cfg = ExperimentConfig {
                anomaly: if cfg.anomaly == 0.0 { 0.1 } else { cfg.anomaly },
                ..cfg.clone()
            };
            let truth = solver(&cfg)?;
            let q = source_trace(&cfg, &truth);
            let observed = truth.forward(&q, false)?.record;
            let base = truth.with_model(cfg.problem().background()?)?;
            let dm: Vec<f64> = truth
                .model
                .m
                .iter()
                .zip(&base.model.m)
                .map(|(a, b)| a - b)
                .collect();
            let r = taylor_test(&base, &q, &observed, &dm, &default_steps())?;
            write_jsonl(std::fs::File::create(out.join("taylor.jsonl"))?, &[&r])?;
            let mut csv = String::from("h,zeroth,first\n");
            for ((h, a), b) in r.steps.iter().zip(&r.zeroth).zip(&r.first) {
                let f = |v: &Option<f64>| v.map_or(String::from("nan"), |x| x.to_string());
                csv.push_str(&format!("{h},{},{}\n", f(a), f(b)));
            }
            std::fs::write(out.join("taylor.csv"), csv)?;
            let pass = (r.zeroth_slope - 1.0).abs() <= 0.1 && (r.first_slope - 2.0).abs() <= 0.2;
            Ok(Outcome {
                pass,
                summary: json!({ "command": "verify", "suite": "taylor", "pass": pass, "report": r }),
            })
        }
        Suite::Equivalence => {
            let s = solver(cfg)?;
            let ir = s.forward_ir(cfg.save)?;
            let rows = equivalence(&s, &ir, &source_trace(cfg, &s), cfg.preset)?;
            write_jsonl(std::fs::File::create(out.join("equivalence.jsonl"))?, &rows)?;
            let pass = rows.iter().all(|r| r["pass"] == json!(true));
            Ok(Outcome {
                pass,
                summary: json!({ "command": "verify", "suite": "equivalence", "pass": pass, "tolerance": EQUIVALENCE_TOL, "plans": rows }),
            })
        }
    }
}

/// Largest per-point relative difference.
pub fn max_relative(got: &[f64], want: &[f64]) -> f64 {
    got.iter()
        .zip(want)
        .map(|(a, b)| {
            if a == b {
                0.0
            } else {
                (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
            }
        })
        .fold(0.0, f64::max)
}

/// Runs `ir` under every plan variant and compares with the interpreter.
pub fn equivalence(
    s: &AcousticSolver,
    ir: &crate::lowering::KernelIR,
    q: &[f64],
    preset: crate::runtime::Preset,
) -> Result<Vec<Value>, CliError> {
    let save = matches!(
        ir.grid("u").and_then(|g| g.time),
        Some(crate::lowering::TimeStorage::Full(_))
    );
    let want = s
        .clone_with_backend(Backend::Interpreter)
        .forward(q, save)?;
    let (extents, ..) = block_geometry(ir);
    let mut rows = Vec::new();
    for plan in CodegenPlan::variants() {
        let blocks = extents.iter().map(|&e| e.div_ceil(3).max(1)).collect();
        let run = s.clone_with_backend(Backend::Jit {
            preset,
            plan: plan.clone(),
            blocks: BlockPolicy::Fixed(blocks),
        });
        let got = run.forward(q, save)?;
        let du = max_relative(got.u.as_slice(), want.u.as_slice());
        let dr = max_relative(&got.record.data, &want.record.data);
        let identical =
            got.u.as_slice() == want.u.as_slice() && got.record.data == want.record.data;
        rows.push(json!({
            "plan": plan.label(),
            "max_relative_u": du,
            "max_relative_rec": dr,
            "bit_identical": identical,
            "pass": du <= EQUIVALENCE_TOL && dr <= EQUIVALENCE_TOL,
        }));
    }
    Ok(rows)
}

pub fn cmd_bench(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    std::fs::create_dir_all(out)?;
    let s = solver(cfg)?;
    let ir = s.forward_ir(cfg.save)?;
    let plan = CodegenPlan {
        blocking: crate::codegen::Blocking::Runtime,
        ..cfg.plan()
    };
    let (extents, inner, ngrids) = block_geometry(&ir);
    let cache = detect_cache_size();
    let guess = best_guess_block(ir.halo, &extents, inner, ngrids, cache);
    let ws_bytes = working_set_bytes(&guess, ir.halo, inner, ngrids);
    let guess_fits = ws_bytes <= cache || guess.iter().all(|&b| b == 1);

    let candidates = if cfg.candidates.is_empty() {
        default_candidates(&extents)
    } else {
        let mut c = vec![Vec::new()];
        for _ in &extents {
            c = c
                .into_iter()
                .flat_map(|p: Vec<usize>| {
                    cfg.candidates.iter().map(move |&b| {
                        let mut v = p.clone();
                        v.push(b);
                        v
                    })
                })
                .collect();
        }
        c
    };

    // Tuning runs on a truncated kernel over scratch buffers.
    let short = ir.truncated(tuning_nt(&ir));
    let short_src = generate(&short, &plan)?;
    let tuner = compile_and_load(&short_src, cfg.preset)?;
    let mut ws = Workspace::for_ir(&short)?;
    ws.grid_mut("m")?.copy_from(&s.model.padded_m(s.halo()))?;
    let tuning = autotune(&tuner, &ws, &candidates)?;
    let argmin_ok = tuning
        .tried
        .iter()
        .filter_map(|t| t.seconds)
        .fold(f64::INFINITY, f64::min)
        == tuning
            .tried
            .iter()
            .find(|t| t.blocks == tuning.chosen)
            .and_then(|t| t.seconds)
            .unwrap_or(f64::NAN);

    let mut rows = Vec::new();
    for t in &tuning.tried {
        if let Some(sec) = t.seconds {
            let stats = crate::runtime::RunStats {
                wall_seconds: sec,
                gflops: tuner.flops_per_point() as f64
                    * short.interior_points() as f64
                    * short.timesteps() as f64
                    / sec
                    / 1e9,
                points: short.interior_points(),
                timesteps: short.timesteps(),
            };
            rows.push(roofline_report(
                &stats,
                &short_src,
                &plan.label(),
                &t.blocks,
            ));
        }
    }
    // Full-length runs with the chosen and the best-guess blocks.
    let full_src = generate(&ir, &plan)?;
    let kernel = compile_and_load(&full_src, cfg.preset)?;
    let mut full_ws = Workspace::for_ir(&ir)?;
    full_ws
        .grid_mut("m")?
        .copy_from(&s.model.padded_m(s.halo()))?;
    for blocks in [&tuning.chosen, &guess] {
        let stats = kernel.run(&mut full_ws, blocks)?;
        rows.push(roofline_report(
            &stats,
            &full_src,
            &format!("{} full-nt", plan.label()),
            blocks,
        ));
    }
    write_jsonl(std::fs::File::create(out.join("roofline.jsonl"))?, &rows)?;
    write_roofline_csv(std::fs::File::create(out.join("roofline.csv"))?, &rows)?;
    write_jsonl(std::fs::File::create(out.join("tuning.jsonl"))?, &[&tuning])?;
    let pass = argmin_ok && guess_fits;
    Ok(Outcome {
        pass,
        summary: json!({
            "command": "bench",
            "pass": pass,
            "tuning": tuning,
            "argmin_ok": argmin_ok,
            "best_guess": { "blocks": guess, "working_set_bytes": ws_bytes, "cache_bytes": cache, "fits": guess_fits },
            "rows": rows.len(),
        }),
    })
}
