//! Symbolic layer: expressions, grid functions, finite-difference shorthand
//! and equation solving.

mod derivative;
mod eval;
mod expr;
mod grid;
mod print;
mod solve;
mod subst;

use thiserror::Error;

pub use derivative::{derivative, laplace, shift, time_shift, TimeDirection};
pub use eval::{evaluate, evaluate_exact, Env};
pub use expr::{
    canonical_cmp, expand, float_powi, Access, Application, Expr, Node, Rational, Symbol, TimeIndex,
};
pub use grid::{Dim, GridFunction, GridFunctionBuilder, TimeOptions, SPACING_SPACE, SPACING_TIME};
pub use solve::{solve_for, Equation};
pub use subst::substitute;

pub(crate) use expr::{is_negative_term, rational_to_f64, split_coeff, Num};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymbolicError {
    #[error("invalid function name {0:?}")]
    InvalidName(String),
    #[error("shape must be non-empty with positive extents")]
    EmptyShape,
    #[error("{0}-dimensional grids are not supported (use 2 or 3)")]
    UnsupportedDims(usize),
    #[error("space order must be even and at least 2, got {0}")]
    InvalidSpaceOrder(usize),
    #[error("time order must be positive, got {0}")]
    InvalidTimeOrder(usize),
    #[error("saved history of {nt} steps is too short for time order {time_order}")]
    InvalidTimeExtent { nt: usize, time_order: usize },
    #[error("time options given for static function {0:?}")]
    TimeOptionsOnStatic(String),
    #[error("only first and second derivatives are supported, got order {0}")]
    UnsupportedDerivative(usize),
    #[error("no function in the expression varies along {0}")]
    MissingDim(&'static str),
    #[error("stencil: {0}")]
    Stencil(String),
    #[error("expression has no time-varying function")]
    NotTimeVarying,
    #[error("target {0} does not appear in the equation")]
    TargetAbsent(String),
    #[error("equation is not linear in {0}")]
    NonLinear(String),
    #[error("no value bound for {0}")]
    UnboundSymbol(String),
    #[error("float literal {0} in exact evaluation")]
    Inexact(f64),
    #[error("division by zero")]
    DivisionByZero,
}
