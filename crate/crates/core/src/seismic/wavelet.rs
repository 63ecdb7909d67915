use std::f64::consts::PI;

/// Ricker wavelet with peak frequency `f0` centred at `t0`.
///
/// `f0` and the times must use reciprocal units (kHz with ms here).
pub fn ricker(f0: f64, t0: f64, times: &[f64]) -> Vec<f64> {
    times
        .iter()
        .map(|&t| {
            let a = (PI * f0 * (t - t0)).powi(2);
            (1.0 - 2.0 * a) * (-a).exp()
        })
        .collect()
}

/// `nt` samples `0, dt, 2 dt, ...`.
pub fn time_axis(nt: usize, dt: f64) -> Vec<f64> {
    (0..nt).map(|i| i as f64 * dt).collect()
}
