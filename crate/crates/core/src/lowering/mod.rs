//! From symbolic equations to the kernel IR: stencil weights, index
//! lowering and time-buffer policy.

mod coefficients;
mod index;
mod ir;

use thiserror::Error;

pub use coefficients::{fd_coefficients, StencilTap};
pub use index::{index_lower, index_lower_exact, to_float, Spacing};
pub use ir::{
    build_kernel_ir, validate, Assignment, GridArg, InjectScale, InjectStage, KernelBuilder,
    KernelIR, Layout, SampleStage, SparseArg, SparseSpec, Stage, TimeLoop, TimeStorage,
    UpdateStage,
};

use crate::symbolic::SymbolicError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoweringError {
    #[error("only first and second derivatives are supported, got order {0}")]
    UnsupportedDerivative(usize),
    #[error("accuracy order must be even and at least 2, got {0}")]
    InvalidAccuracy(usize),
    #[error("stencil weights for accuracy {0} overflow 128-bit rationals")]
    CoefficientOverflow(usize),
    #[error("offset {arg} of {function} is not an integer multiple of the spacing")]
    NonMultipleOffset { function: String, arg: String },
    #[error("no value for spacing symbol {0}")]
    UnboundSpacing(String),
    #[error("free symbol {0} left after lowering")]
    UnboundSymbol(String),
    #[error("grid {0} has a shape or time options that conflict with the other operands")]
    ConflictingShape(String),
    #[error("shape {shape:?} has no interior points with halo {halo}")]
    NoInterior { shape: Vec<usize>, halo: usize },
    #[error("left-hand side {0} is not a single access at the evaluation point")]
    NonIndexedLhs(String),
    #[error("time offset {offset} of {grid} is not addressable over the time loop")]
    TimeOutOfRange { grid: String, offset: i64 },
    #[error("access to {0} reaches beyond the halo")]
    HaloExceeded(String),
    #[error("stage reads {0} at a neighbouring point while writing it")]
    Race(String),
    #[error("time-varying kernel needs nt greater than the time order")]
    MissingNt,
    #[error("unknown grid {0}")]
    UnknownGrid(String),
    #[error("kernel has no stages")]
    EmptyKernel,
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
}
