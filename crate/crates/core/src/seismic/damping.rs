use std::f64::consts::PI;

use super::model::for_each_index;

/// Reflection-coefficient constant of the taper, `1.5 ln(1000)`.
pub fn damping_constant() -> f64 {
    1.5 * 1000f64.ln()
}

/// Taper value `C (xi - sin(2 pi xi) / (2 pi))` at distance `d` points from
/// the outer edge of a layer `nbpml` points wide.
pub fn taper(d: f64, nbpml: usize, h: f64) -> f64 {
    if nbpml == 0 {
        return 0.0;
    }
    let c = damping_constant() / (nbpml as f64 * h);
    let xi = ((nbpml as f64 - d) / nbpml as f64).clamp(0.0, 1.0);
    c * (xi - (2.0 * PI * xi).sin() / (2.0 * PI))
}

/// Damping coefficients on the padded grid: zero in the interior, rising
/// through the absorbing layer toward the outer edge. The halo takes the
/// outermost value and corners take the largest per-dimension value.
pub fn build_damping(padded_shape: &[usize], nbpml: usize, halo: usize, h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(padded_shape.iter().product());
    for_each_index(padded_shape, |idx| {
        let v = idx
            .iter()
            .zip(padded_shape)
            .map(|(&p, &n)| {
                let lo = p as f64 - halo as f64;
                let hi = (n - 1 - halo) as f64 - p as f64;
                taper(lo.min(hi), nbpml, h)
            })
            .fold(0.0, f64::max);
        out.push(v);
    });
    out
}
