use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::seismic::{ricker, time_axis, AcousticSolver, SeismicError, ShotRecord};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjointTestReport {
    /// `<F x, y>`
    pub forward_inner: f64,
    /// `<x, F* y>`
    pub adjoint_inner: f64,
    pub absolute: f64,
    pub relative: f64,
    pub ndim: usize,
    pub space_order: usize,
    pub nt: usize,
}

impl AdjointTestReport {
    pub fn new(
        forward_inner: f64,
        adjoint_inner: f64,
        ndim: usize,
        space_order: usize,
        nt: usize,
    ) -> Self {
        let absolute = (forward_inner - adjoint_inner).abs();
        let relative = absolute / forward_inner.abs().max(f64::MIN_POSITIVE);
        AdjointTestReport {
            forward_inner,
            adjoint_inner,
            absolute,
            relative,
            ndim,
            space_order,
            nt,
        }
    }
}

/// `nt x npoints` white noise convolved in time with a Ricker wavelet.
pub fn band_limited_noise(
    rng: &mut ChaCha8Rng,
    nt: usize,
    npoints: usize,
    dt: f64,
    f0: f64,
) -> Vec<f64> {
    let half = (1.5 / f0 / dt).ceil() as usize;
    let taps = ricker(f0, half as f64 * dt, &time_axis(2 * half + 1, dt));
    let mut out = vec![0.0; nt * npoints];
    for p in 0..npoints {
        let noise: Vec<f64> = (0..nt).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for t in 0..nt {
            let mut acc = 0.0;
            for (k, w) in taps.iter().enumerate() {
                let s = t as i64 + k as i64 - half as i64;
                if (0..nt as i64).contains(&s) {
                    acc += w * noise[s as usize];
                }
            }
            out[t * npoints + p] = acc;
        }
    }
    out
}

/// Dot-product test `<F x, y> = <x, F* y>` of the forward modelling
/// operator `F` (source series to receiver records), with band-limited
/// random `x` and `y` drawn from `seed`.
pub fn adjoint_test(
    solver: &AcousticSolver,
    f0: f64,
    seed: u64,
) -> Result<AdjointTestReport, SeismicError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = band_limited_noise(&mut rng, solver.nt, solver.src.len(), solver.dt, f0);
    let y = band_limited_noise(&mut rng, solver.nt, solver.rec.len(), solver.dt, f0);
    adjoint_test_with(solver, &x, &y)
}

/// Dot-product test for given `x` (`nt x nsrc`) and `y` (`nt x nrec`).
pub fn adjoint_test_with(
    solver: &AcousticSolver,
    x: &[f64],
    y: &[f64],
) -> Result<AdjointTestReport, SeismicError> {
    let fwd = solver.forward(x, false)?;
    let y = ShotRecord::new(&solver.rec.coords, solver.nt, solver.dt, y.to_vec())?;
    let adj = solver.adjoint(&y)?;
    let forward_inner = fwd.record.dot(&y);
    let adjoint_inner: f64 = x.iter().zip(&adj.source.data).map(|(a, b)| a * b).sum();
    Ok(AdjointTestReport::new(
        forward_inner,
        adjoint_inner,
        solver.model.ndim(),
        solver.space_order,
        solver.nt,
    ))
}
