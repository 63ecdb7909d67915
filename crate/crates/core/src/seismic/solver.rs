use std::cell::RefCell;

use super::damping::build_damping;
use super::{Model, SeismicError, ShotRecord, SparsePointSet};
use crate::lowering::{fd_coefficients, InjectScale, KernelBuilder, KernelIR, Spacing, SparseSpec};
use crate::optimizer::optimize;
use crate::runtime::{Backing, GridBuffer, Kernel, RunStats, TuningResult, Workspace};
use crate::symbolic::{rational_to_f64, solve_for, Equation, GridFunction};
use crate::verify::Interpreter;

const SRC: &str = "src";
const REC: &str = "rec";
const SAFETY: f64 = 0.9;

/// Largest stable time step: `0.9 * 2h * sqrt(m_min / (ndim * sum|w|))`
/// with `w` the second-derivative taps at `space_order`.
pub fn critical_dt(model: &Model, space_order: usize) -> Result<f64, SeismicError> {
    let taps = fd_coefficients(2, space_order)?;
    let sum: f64 = taps.iter().map(|t| rational_to_f64(&t.weight).abs()).sum();
    Ok(SAFETY * 2.0 * model.h * (model.m_min() / (model.ndim() as f64 * sum)).sqrt())
}

/// How block sizes are chosen for compiled kernels.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum BlockPolicy {
    #[default]
    BestGuess,
    Fixed(Vec<usize>),
    Autotune,
}

/// Where kernels run.
#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    Interpreter,
    #[cfg(feature = "jit")]
    Jit {
        preset: crate::runtime::Preset,
        plan: crate::codegen::CodegenPlan,
        blocks: BlockPolicy,
    },
}

impl Default for Backend {
    #[cfg(feature = "jit")]
    fn default() -> Self {
        Backend::Jit {
            preset: crate::runtime::Preset::Generic,
            plan: crate::codegen::CodegenPlan::full(),
            blocks: BlockPolicy::BestGuess,
        }
    }

    #[cfg(not(feature = "jit"))]
    fn default() -> Self {
        Backend::Interpreter
    }
}

/// Spilling policy of the saved forward wavefield.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Spill {
    /// File-backed only when the history would not fit in memory.
    #[default]
    Auto,
    Never,
    #[cfg(feature = "jit")]
    Always,
}

#[derive(Debug)]
pub struct ForwardResult {
    pub record: ShotRecord,
    /// Wavefield: all `nt` slots when saved, the rolling slots otherwise.
    pub u: GridBuffer,
    pub stats: RunStats,
}

#[derive(Debug)]
pub struct AdjointResult {
    pub v: GridBuffer,
    /// Adjoint field sampled at the source positions, `nt x nsrc`.
    pub source: ShotRecord,
    pub stats: RunStats,
}

#[derive(Debug)]
pub struct GradientResult {
    /// Gradient with respect to the interior squared slowness.
    pub gradient: Vec<f64>,
    pub stats: RunStats,
}

/// Acoustic forward, adjoint and gradient operators for one acquisition.
#[derive(Debug)]
pub struct AcousticSolver {
    pub model: Model,
    pub space_order: usize,
    pub nt: usize,
    pub dt: f64,
    pub src: SparsePointSet,
    pub rec: SparsePointSet,
    pub backend: Backend,
    pub spill: Spill,
    last_tuning: RefCell<Option<TuningResult>>,
}

impl AcousticSolver {
    pub fn new(
        model: Model,
        space_order: usize,
        nt: usize,
        dt: f64,
        src: &[Vec<f64>],
        rec: &[Vec<f64>],
    ) -> Result<Self, SeismicError> {
        let limit = critical_dt(&model, space_order)?;
        if !(dt > 0.0 && dt <= limit) {
            return Err(SeismicError::Cfl { dt, limit });
        }
        if nt < 4 {
            return Err(SeismicError::ShapeMismatch(format!(
                "nt = {nt} is too short"
            )));
        }
        let halo = space_order / 2;
        let src = SparsePointSet::locate(src, &model, halo)?;
        let rec = SparsePointSet::locate(rec, &model, halo)?;
        Ok(AcousticSolver {
            model,
            space_order,
            nt,
            dt,
            src,
            rec,
            backend: Backend::default(),
            spill: Spill::default(),
            last_tuning: RefCell::new(None),
        })
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    /// Copy of this solver running on `backend`.
    pub fn clone_with_backend(&self, backend: Backend) -> Self {
        AcousticSolver {
            model: self.model.clone(),
            space_order: self.space_order,
            nt: self.nt,
            dt: self.dt,
            src: self.src.clone(),
            rec: self.rec.clone(),
            backend,
            spill: self.spill,
            last_tuning: RefCell::new(None),
        }
    }

    /// Same acquisition on a different model of the same geometry.
    pub fn with_model(&self, model: Model) -> Result<Self, SeismicError> {
        if model.shape != self.model.shape
            || model.h != self.model.h
            || model.nbpml != self.model.nbpml
        {
            return Err(SeismicError::ShapeMismatch("model geometry differs".into()));
        }
        let src: Vec<Vec<f64>> = self.src.coords.clone();
        let rec: Vec<Vec<f64>> = self.rec.coords.clone();
        let mut s = AcousticSolver::new(model, self.space_order, self.nt, self.dt, &src, &rec)?;
        s.backend = self.backend.clone();
        s.spill = self.spill;
        Ok(s)
    }

    pub fn halo(&self) -> usize {
        self.space_order / 2
    }

    pub fn padded_shape(&self) -> Vec<usize> {
        self.model.padded_shape(self.halo())
    }

    /// Tuning result of the most recent autotuned run.
    pub fn last_tuning(&self) -> Option<TuningResult> {
        self.last_tuning.borrow().clone()
    }

    fn wave(&self, name: &str, save: bool) -> Result<GridFunction, SeismicError> {
        Ok(GridFunction::builder(name, &self.padded_shape())
            .space_order(self.space_order)
            .time_varying(true)
            .time_order(2)
            .save(save, self.nt)
            .build()?)
    }

    fn dense(&self, name: &str) -> Result<GridFunction, SeismicError> {
        Ok(GridFunction::builder(name, &self.padded_shape())
            .space_order(self.space_order)
            .build()?)
    }

    fn spacing(&self) -> Spacing {
        Spacing::new(self.model.h, self.dt)
    }

    fn scale(&self) -> InjectScale {
        InjectScale::OverGrid {
            numerator: self.dt * self.dt,
            grid: "m".into(),
        }
    }

    fn spec(&self, name: &str, set: &SparsePointSet) -> SparseSpec {
        SparseSpec {
            name: name.into(),
            npoints: set.len(),
        }
    }

    /// `m u_tt - lap(u) + damp u_t = q`, stepping forward.
    pub fn forward_ir(&self, save: bool) -> Result<KernelIR, SeismicError> {
        let u = self.wave("u", save)?;
        let m = self.dense("m")?;
        let damp = self.dense("damp")?;
        let pde = Equation::zero(m.at() * u.dt2() - u.laplace() + damp.at() * u.dt());
        let stencil = solve_for(&pde, &u.forward())?;
        let mut ir = KernelBuilder::new("forward")
            .spacing(self.spacing())
            .nt(self.nt)
            .zero_initial(&u)
            .update(vec![Equation::new(u.forward(), stencil)])
            .inject(u.forward(), self.spec(SRC, &self.src), 0, self.scale())
            .sample(u.forward(), self.spec(REC, &self.rec), 1)
            .build()?;
        optimize(&mut ir);
        Ok(ir)
    }

    /// `m v_tt - lap(v) - damp v_t = P_r^T y`, stepping backward.
    pub fn adjoint_ir(&self) -> Result<KernelIR, SeismicError> {
        let v = self.wave("v", false)?;
        let m = self.dense("m")?;
        let damp = self.dense("damp")?;
        let pde = Equation::zero(m.at() * v.dt2() - v.laplace() - damp.at() * v.dt());
        let stencil = solve_for(&pde, &v.backward())?;
        let mut ir = KernelBuilder::new("adjoint")
            .spacing(self.spacing())
            .nt(self.nt)
            .zero_initial(&v)
            .update(vec![Equation::new(v.backward(), stencil)])
            .inject(v.backward(), self.spec(REC, &self.rec), -1, self.scale())
            .sample(v.backward(), self.spec(SRC, &self.src), -2)
            .build()?;
        optimize(&mut ir);
        Ok(ir)
    }

    /// Adjoint propagation with `grad -= u v_tt` accumulated every step.
    pub fn gradient_ir(&self) -> Result<KernelIR, SeismicError> {
        let v = self.wave("v", false)?;
        let u = self.wave("u", true)?;
        let m = self.dense("m")?;
        let damp = self.dense("damp")?;
        let grad = self.dense("grad")?;
        let pde = Equation::zero(m.at() * v.dt2() - v.laplace() - damp.at() * v.dt());
        let stencil = solve_for(&pde, &v.backward())?;
        let accumulate = Equation::new(grad.at(), grad.at() - u.backward() * v.dt2());
        let mut ir = KernelBuilder::new("gradient")
            .spacing(self.spacing())
            .nt(self.nt)
            .zero_initial(&v)
            .zero_initial(&grad)
            .update(vec![Equation::new(v.backward(), stencil)])
            .inject(v.backward(), self.spec(REC, &self.rec), -1, self.scale())
            .update(vec![accumulate])
            .build()?;
        optimize(&mut ir);
        Ok(ir)
    }

    fn workspace(&self, ir: &KernelIR) -> Result<Workspace, SeismicError> {
        let mut ws = Workspace::new();
        for g in &ir.grids {
            let shape = ir.grid_shape(&g.name).unwrap();
            let backing = match (&g.time, self.spill) {
                (Some(crate::lowering::TimeStorage::Full(_)), Spill::Auto) => Backing::Auto,
                #[cfg(feature = "jit")]
                (Some(crate::lowering::TimeStorage::Full(_)), Spill::Always) => Backing::File(None),
                _ => Backing::Heap,
            };
            ws.insert_grid(
                &g.name,
                GridBuffer::allocate(&shape, crate::runtime::DEFAULT_ALIGNMENT, backing)?,
            );
        }
        let halo = self.halo();
        if ws.grids.contains_key("m") {
            ws.grid_mut("m")?.copy_from(&self.model.padded_m(halo))?;
        }
        if ws.grids.contains_key("damp") {
            let damp = build_damping(&self.padded_shape(), self.model.nbpml, halo, self.model.h);
            ws.grid_mut("damp")?.copy_from(&damp)?;
        }
        for sp in &ir.sparse {
            let set = if sp.name == SRC { &self.src } else { &self.rec };
            let mut buf =
                crate::runtime::SparseBuffers::new(sp.rows, sp.npoints, sp.ncorners, ir.ndim)?;
            buf.indices.copy_from_slice(&set.indices);
            buf.weights.copy_from_slice(&set.weights);
            ws.sparse.insert(sp.name.clone(), buf);
        }
        Ok(ws)
    }

    fn execute(&self, ir: &KernelIR, ws: &mut Workspace) -> Result<RunStats, SeismicError> {
        match &self.backend {
            Backend::Interpreter => Ok(Interpreter::new(ir)?.run(ws, &[])?),
            #[cfg(feature = "jit")]
            Backend::Jit {
                preset,
                plan,
                blocks,
            } => {
                use crate::runtime::{
                    autotune, best_guess_block, block_geometry, compile_and_load,
                    default_candidates, detect_cache_size, tuning_nt,
                };
                let src = crate::codegen::generate(ir, plan)?;
                let kernel = compile_and_load(&src, *preset)?;
                let n = kernel.block_count();
                let (extents, inner, ngrids) = block_geometry(ir);
                let chosen = match blocks {
                    _ if n == 0 => Vec::new(),
                    BlockPolicy::Fixed(b) => b.clone(),
                    BlockPolicy::BestGuess => {
                        best_guess_block(ir.halo, &extents, inner, ngrids, detect_cache_size())
                    }
                    BlockPolicy::Autotune => {
                        let short = ir.truncated(tuning_nt(ir));
                        let tuner =
                            compile_and_load(&crate::codegen::generate(&short, plan)?, *preset)?;
                        let result = autotune(&tuner, ws, &default_candidates(&extents))?;
                        let chosen = result.chosen.clone();
                        *self.last_tuning.borrow_mut() = Some(result);
                        chosen
                    }
                };
                Ok(kernel.run(ws, &chosen)?)
            }
        }
    }

    fn check_source(&self, q: &[f64], what: &str, npts: usize) -> Result<(), SeismicError> {
        if q.len() != self.nt * npts {
            return Err(SeismicError::ShapeMismatch(format!(
                "{what}: {} samples for {} steps x {npts} points",
                q.len(),
                self.nt
            )));
        }
        Ok(())
    }

    /// Forward modelling of the source time series `q` (`nt x nsrc`).
    pub fn forward(&self, q: &[f64], save: bool) -> Result<ForwardResult, SeismicError> {
        self.check_source(q, "source", self.src.len())?;
        let ir = self.forward_ir(save)?;
        let mut ws = self.workspace(&ir)?;
        ws.sparse_mut(SRC)?.data.copy_from(q)?;
        let stats = self.execute(&ir, &mut ws)?;
        let rec = ws.sparse.remove(REC).unwrap();
        let u = ws.grids.remove("u").unwrap();
        ensure_finite("u", u.as_slice())?;
        let record = ShotRecord::new(
            &self.rec.coords,
            self.nt,
            self.dt,
            rec.data.as_slice().to_vec(),
        )?;
        Ok(ForwardResult { record, u, stats })
    }

    /// Adjoint modelling of the receiver-side series `residual`.
    pub fn adjoint(&self, residual: &ShotRecord) -> Result<AdjointResult, SeismicError> {
        self.check_source(&residual.data, "residual", self.rec.len())?;
        let ir = self.adjoint_ir()?;
        let mut ws = self.workspace(&ir)?;
        ws.sparse_mut(REC)?.data.copy_from(&residual.data)?;
        let stats = self.execute(&ir, &mut ws)?;
        let src = ws.sparse.remove(SRC).unwrap();
        let v = ws.grids.remove("v").unwrap();
        ensure_finite("v", v.as_slice())?;
        let source = ShotRecord::new(
            &self.src.coords,
            self.nt,
            self.dt,
            src.data.as_slice().to_vec(),
        )?;
        Ok(AdjointResult { v, source, stats })
    }

    /// Gradient of `1/2 |P_r u - d|^2` with respect to the interior squared
    /// slowness, from the data residual and the saved forward wavefield.
    pub fn gradient(
        &self,
        residual: &ShotRecord,
        history: &mut GridBuffer,
    ) -> Result<GradientResult, SeismicError> {
        self.check_source(&residual.data, "residual", self.rec.len())?;
        let ir = self.gradient_ir()?;
        let expected = ir.grid_shape("u").unwrap();
        if history.shape() != expected.as_slice() {
            return Err(SeismicError::MissingHistory {
                expected,
                found: history.shape().to_vec(),
            });
        }
        let mut ws = self.workspace(&ir)?;
        ws.sparse_mut(REC)?.data.copy_from(&residual.data)?;
        // Borrow the caller's history for the duration of the run.
        let placeholder = GridBuffer::new(&[1])?;
        ws.insert_grid("u", std::mem::replace(history, placeholder));
        let result = self.execute(&ir, &mut ws);
        *history = ws.grids.remove("u").unwrap();
        let stats = result?;
        let padded = ws.grid("grad")?.as_slice();
        ensure_finite("grad", padded)?;
        Ok(GradientResult {
            gradient: self.model.fold_padded(self.halo(), padded),
            stats,
        })
    }
}

fn ensure_finite(name: &str, data: &[f64]) -> Result<(), SeismicError> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(SeismicError::NonFinite(format!("{name} at flat index {i}"))),
        None => Ok(()),
    }
}
