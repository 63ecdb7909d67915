//! Grid memory, kernel execution, host-compiler JIT and block-size tuning.

mod buffer;
#[cfg(feature = "jit")]
mod compile;
mod dump;
mod kernel;
mod tune;
mod workspace;

use thiserror::Error;

pub use buffer::{available_memory, Backing, GridBuffer, DEFAULT_ALIGNMENT};
#[cfg(feature = "jit")]
pub use compile::{cache_dir, compile_and_load, CompiledKernel, Preset};
pub use dump::{read_blob, read_dump, write_blob, write_dump, DumpMeta};
pub use kernel::{Kernel, RunStats};
pub use tune::{
    autotune, best_guess_block, block_geometry, default_candidates, detect_cache_size, tuning_nt,
    working_set_bytes, BlockChoice, Trial, TuningResult,
};
pub use workspace::{SparseBuffers, Workspace};

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("buffer shape is empty or has a zero extent")]
    EmptyShape,
    #[error("alignment {0} is not a power of two of at least 8 bytes")]
    Alignment(usize),
    #[error("buffer size overflows")]
    TooLarge,
    #[error("allocation of {0} bytes failed")]
    OutOfMemory(usize),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("buffer {name:?}: expected shape {expected:?}, found {found:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("missing buffer {0:?}")]
    MissingBuffer(String),
    #[error("expected {expected} block sizes, got {found}")]
    BlockCount { expected: usize, found: usize },
    #[error("block sizes must be at least 1: {0:?}")]
    InvalidBlock(Vec<usize>),
    #[error("kernel returned {0}")]
    KernelFailed(i32),
    #[error("C compiler {0:?} not found")]
    CompilerMissing(String),
    #[error("compilation failed:\n{0}")]
    CompileFailed(String),
    #[error("symbol {0:?} not found in shared object")]
    SymbolNotFound(String),
    #[error("failed to load shared object: {0}")]
    Load(String),
    #[error("no tuning candidates")]
    NoCandidates,
    #[error("every tuning candidate failed")]
    AllCandidatesFailed,
    #[error("malformed dump: {0}")]
    Dump(String),
}
