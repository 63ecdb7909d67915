//! Reference interpreter, adjoint and gradient tests, roofline reporting.

mod adjoint;
mod interp;
mod roofline;
mod taylor;

use thiserror::Error;

pub use adjoint::{adjoint_test, adjoint_test_with, band_limited_noise, AdjointTestReport};
pub use interp::{reference_interpret, Interpreter};
pub use roofline::{roofline_report, write_jsonl, write_roofline_csv, RooflineReport};
pub use taylor::{default_steps, loglog_slope, taylor_test, TaylorTestReport};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("unknown grid {0:?}")]
    UnknownGrid(String),
    #[error("unbound symbol {0:?}")]
    UnboundSymbol(String),
    #[error(transparent)]
    Runtime(#[from] crate::runtime::RuntimeError),
}
