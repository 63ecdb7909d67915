//! Symbolic finite-difference stencils compiled to native kernels.

#[cfg(feature = "jit")]
pub mod cli;
pub mod codegen;
pub mod lowering;
pub mod optimizer;
pub mod runtime;
pub mod seismic;
pub mod symbolic;
pub mod verify;
