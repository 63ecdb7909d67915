//! Expression-level optimization: common sub-expression elimination and
//! operation counting.

mod count;
mod cse;

pub use count::{op_count, OpCount};
pub use cse::{cse, inline_temps, optimize, statements_op_count, CseResult};
