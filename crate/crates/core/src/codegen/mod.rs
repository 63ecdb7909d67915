//! C code generation from the kernel IR: loop nests, blocking with
//! remainder nests, OpenMP parallel and SIMD annotations, first-touch
//! initialization and sparse-point loops.

pub mod ast;
mod cexpr;
mod emit;
mod plan;
mod ranges;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cexpr::float_literal;
pub use emit::{blocked_dims, generate};
pub use plan::{Blocking, CodegenPlan};
pub use ranges::{
    block_nests, enumerate_nests, render_remainder_decomposition, role_indices, Decomposition,
    DimRole,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodegenError {
    #[error("SIMD requested but the innermost dimension is not contiguous in storage")]
    NonContiguous,
    #[error("alignment {0} is not a power of two")]
    Alignment(usize),
    #[error("invalid fixed block sizes {0:?}")]
    BlockSizes(Vec<usize>),
    #[error("invalid kernel name {0:?}")]
    InvalidName(String),
}

/// One kernel argument, in call order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArgKind {
    /// Flat row-major `double` buffer; time slots lead the shape.
    Grid { name: String, shape: Vec<usize> },
    /// `rows x npoints` samples.
    SparseData {
        name: String,
        rows: usize,
        npoints: usize,
    },
    /// `npoints x ncorners x ndim` signed 64-bit grid indices.
    SparseIndices {
        name: String,
        npoints: usize,
        ncorners: usize,
        ndim: usize,
    },
    /// `npoints x ncorners` interpolation weights.
    SparseWeights {
        name: String,
        npoints: usize,
        ncorners: usize,
    },
    /// Block size of blocked dimension `dim`, passed as `long`.
    Block { dim: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub args: Vec<ArgKind>,
}

impl Signature {
    pub fn buffers(&self) -> impl Iterator<Item = &ArgKind> {
        self.args
            .iter()
            .filter(|a| !matches!(a, ArgKind::Block { .. }))
    }

    pub fn block_count(&self) -> usize {
        self.args
            .iter()
            .filter(|a| matches!(a, ArgKind::Block { .. }))
            .count()
    }
}

/// Emitted kernel plus the metadata the runtime needs to call it.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedSource {
    pub source: String,
    pub entry: String,
    /// `int <entry>_packed(void **args, const long *blocks, long nthreads)`.
    pub packed_entry: String,
    pub signature: Signature,
    pub flops_per_point: usize,
    pub bytes_per_point: usize,
    /// Number of runtime or fixed block parameters (0 when blocking is off).
    pub blocked_dims: usize,
    pub unit: ast::TranslationUnit,
    /// The IR the source was generated from.
    pub ir: crate::lowering::KernelIR,
}

impl GeneratedSource {
    pub fn kernel(&self) -> &ast::Function {
        &self.unit.functions[0]
    }

    pub fn operational_intensity(&self) -> f64 {
        self.flops_per_point as f64 / self.bytes_per_point.max(1) as f64
    }
}
