use serde::Serialize;

use crate::seismic::{objective, AcousticSolver, Model, SeismicError, ShotRecord};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaylorTestReport {
    pub steps: Vec<f64>,
    /// `|Phi(m + h dm) - Phi(m)|`, `None` where the perturbed run failed.
    pub zeroth: Vec<Option<f64>>,
    /// `|Phi(m + h dm) - Phi(m) - h <g, dm>|`.
    pub first: Vec<Option<f64>>,
    pub zeroth_slope: f64,
    pub first_slope: f64,
    pub phi: f64,
    /// `<g, dm>`.
    pub directional: f64,
    /// Steps left out of the fits (failed runs or below the noise floor).
    pub excluded: Vec<f64>,
}

/// Least-squares slope of `log10 y` against `log10 x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.log10()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.log10()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// `1, 0.1, ..., 1e-4`.
pub fn default_steps() -> Vec<f64> {
    (0..5).map(|k| 10f64.powi(-k)).collect()
}

fn phi(
    solver: &AcousticSolver,
    q: &[f64],
    observed: &ShotRecord,
) -> Result<(f64, ShotRecord), SeismicError> {
    let fwd = solver.forward(q, false)?;
    objective(&fwd.record, observed)
}

/// Gradient test around the solver's model along `dm` (interior squared
/// slowness), with source `q` and observed data `observed`.
pub fn taylor_test(
    solver: &AcousticSolver,
    q: &[f64],
    observed: &ShotRecord,
    dm: &[f64],
    steps: &[f64],
) -> Result<TaylorTestReport, SeismicError> {
    let fwd = solver.forward(q, true)?;
    let (phi0, residual) = objective(&fwd.record, observed)?;
    let mut u = fwd.u;
    let grad = solver.gradient(&residual, &mut u)?.gradient;
    drop(u);
    let directional: f64 = grad.iter().zip(dm).map(|(g, d)| g * d).sum();

    let floor = 1e2 * f64::EPSILON * phi0.abs();
    let mut zeroth = Vec::with_capacity(steps.len());
    let mut first = Vec::with_capacity(steps.len());
    let mut excluded = Vec::new();
    let (mut fx, mut f0y, mut f1y) = (Vec::new(), Vec::new(), Vec::new());
    for &h in steps {
        let m: Vec<f64> = solver
            .model
            .m
            .iter()
            .zip(dm)
            .map(|(m, d)| m + h * d)
            .collect();
        let run = Model::new(&solver.model.shape, solver.model.h, solver.model.nbpml, m)
            .and_then(|model| solver.with_model(model))
            .and_then(|s| phi(&s, q, observed));
        match run {
            Ok((p, _)) => {
                let e0 = (p - phi0).abs();
                let e1 = (p - phi0 - h * directional).abs();
                zeroth.push(Some(e0));
                first.push(Some(e1));
                if e0 > floor && e1 > floor {
                    fx.push(h);
                    f0y.push(e0);
                    f1y.push(e1);
                } else {
                    excluded.push(h);
                }
            }
            Err(_) => {
                zeroth.push(None);
                first.push(None);
                excluded.push(h);
            }
        }
    }
    let (zeroth_slope, first_slope) = if fx.len() >= 2 {
        (loglog_slope(&fx, &f0y), loglog_slope(&fx, &f1y))
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(TaylorTestReport {
        steps: steps.to_vec(),
        zeroth,
        first,
        zeroth_slope,
        first_slope,
        phi: phi0,
        directional,
        excluded,
    })
}
