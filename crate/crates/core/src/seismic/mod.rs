//! Acoustic wave modelling: velocity models, absorbing layer, sources and
//! receivers, forward, adjoint and gradient operators.

mod damping;
mod model;
mod problem;
mod record;
mod solver;
mod sparse;
mod wavelet;

use thiserror::Error;

pub use damping::{build_damping, damping_constant, taper};
pub use model::Model;
pub use problem::Problem;
pub use record::{objective, ShotRecord};
pub use solver::{
    critical_dt, AcousticSolver, AdjointResult, Backend, BlockPolicy, ForwardResult,
    GradientResult, Spill,
};
pub use sparse::{inject, interp_weights, sample, SparsePointSet};
pub use wavelet::{ricker, time_axis};

#[derive(Debug, Error)]
pub enum SeismicError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("point {0:?} lies outside the physical domain")]
    OutsideDomain(Vec<f64>),
    #[error("time step {dt} exceeds the stability limit {limit}")]
    Cfl { dt: f64, limit: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("saved wavefield of shape {expected:?} required, found {found:?}")]
    MissingHistory {
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Symbolic(#[from] crate::symbolic::SymbolicError),
    #[error(transparent)]
    Lowering(#[from] crate::lowering::LoweringError),
    #[error(transparent)]
    Codegen(#[from] crate::codegen::CodegenError),
    #[error(transparent)]
    Runtime(#[from] crate::runtime::RuntimeError),
    #[error(transparent)]
    Verify(#[from] crate::verify::VerifyError),
}
