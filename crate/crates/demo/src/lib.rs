//! Browser bindings: stencil weights, generated C source and a small 2D
//! acoustic simulation run by the interpreter backend.

use fdjit::codegen::{generate, Blocking, CodegenPlan};
use fdjit::lowering::fd_coefficients;
use fdjit::seismic::{Backend, Problem};
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Centred weights of the `deriv`-th derivative at accuracy `order`, one
/// `offset weight` pair per line with the weight as an exact fraction.
#[wasm_bindgen]
pub fn coefficients(deriv: usize, order: usize) -> Result<String, JsError> {
    let taps = fd_coefficients(deriv, order).map_err(js_err)?;
    Ok(taps
        .iter()
        .map(|t| format!("{:+} {}", t.offset, t.weight))
        .collect::<Vec<_>>()
        .join("\n"))
}

/// C source of the forward wave kernel for a small 2D or 3D problem.
#[wasm_bindgen]
pub fn forward_source(
    ndim: usize,
    order: usize,
    parallel: bool,
    simd: bool,
    blocking: bool,
) -> Result<String, JsError> {
    let shape = if ndim == 3 {
        vec![33, 33, 33]
    } else {
        vec![65, 65]
    };
    let p = Problem {
        shape,
        space_order: order,
        ..Problem::default()
    };
    let ir = p
        .solver()
        .map_err(js_err)?
        .forward_ir(false)
        .map_err(js_err)?;
    let plan = CodegenPlan {
        parallel,
        simd,
        blocking: if blocking {
            Blocking::Runtime
        } else {
            Blocking::Off
        },
        ..CodegenPlan::full()
    };
    Ok(generate(&ir, &plan).map_err(js_err)?.source)
}

/// Wavefield snapshots of a 2D shot, interior only, row-major by depth.
#[wasm_bindgen]
pub struct Simulation {
    n: usize,
    frames: Vec<Vec<f64>>,
    trace_len: usize,
    record: Vec<f64>,
    nrec: usize,
}

#[wasm_bindgen]
impl Simulation {
    /// Runs `nt` steps on an `n x n` grid with a Gaussian anomaly of
    /// relative strength `anomaly`, keeping every `stride`-th step.
    #[wasm_bindgen(constructor)]
    pub fn new(
        n: usize,
        order: usize,
        nt: usize,
        anomaly: f64,
        stride: usize,
    ) -> Result<Simulation, JsError> {
        let p = Problem {
            shape: vec![n, n],
            space_order: order,
            nt,
            anomaly,
            nrec: n / 2,
            ..Problem::default()
        };
        let solver = p
            .solver()
            .map_err(js_err)?
            .with_backend(Backend::Interpreter);
        let fwd = solver
            .forward(&p.wavelet(solver.dt), true)
            .map_err(js_err)?;
        let halo = solver.halo();
        let off = solver.model.offset(halo);
        let pn = solver.padded_shape()[1];
        let frames = (0..nt)
            .step_by(stride.max(1))
            .map(|t| {
                let slab = fwd.u.slab(t);
                (0..n)
                    .flat_map(|z| (0..n).map(move |x| slab[(x + off) * pn + z + off]))
                    .collect()
            })
            .collect();
        let nrec = fwd.record.npoints();
        Ok(Simulation {
            n,
            frames,
            trace_len: nt,
            record: fwd.record.data,
            nrec,
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn frame(&self, k: usize) -> Vec<f64> {
        self.frames.get(k).cloned().unwrap_or_default()
    }

    /// Receiver data, `nt x nrec` row-major.
    pub fn record(&self) -> Vec<f64> {
        self.record.clone()
    }

    pub fn receivers(&self) -> usize {
        self.nrec
    }

    pub fn steps(&self) -> usize {
        self.trace_len
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_derivative_weights() {
        assert_eq!(coefficients(2, 2).ok().unwrap(), "-1 1\n+0 -2\n+1 1");
    }

    #[test]
    fn source_has_the_pragma_only_when_asked() {
        assert!(forward_source(2, 4, false, true, false)
            .ok()
            .unwrap()
            .contains("omp simd"));
        assert!(!forward_source(2, 4, false, false, false)
            .ok()
            .unwrap()
            .contains("#pragma"));
    }

    #[test]
    fn simulation_frames_are_interior_sized() {
        let s = Simulation::new(30, 2, 80, 0.0, 20).ok().unwrap();
        assert_eq!(s.frame_count(), 4);
        assert_eq!(s.frame(3).len(), 900);
        assert!(s.frame(3).iter().any(|&v| v != 0.0));
        assert_eq!(s.record().len(), 80 * s.receivers());
    }
}
