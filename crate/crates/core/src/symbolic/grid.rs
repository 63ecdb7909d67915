use std::fmt;
use std::sync::Arc;

use super::derivative::{derivative, laplace, time_shift, TimeDirection};
use super::expr::{Expr, Symbol};
use super::SymbolicError;

/// A discretized dimension. The spatial dimensions present are inferred from
/// the length of a grid function's shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dim {
    Time,
    X,
    Y,
    Z,
}

impl Dim {
    pub fn spatial(ndim: usize) -> &'static [Dim] {
        match ndim {
            1 => &[Dim::X],
            2 => &[Dim::X, Dim::Y],
            _ => &[Dim::X, Dim::Y, Dim::Z],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Dim::Time => "t",
            Dim::X => "x",
            Dim::Y => "y",
            Dim::Z => "z",
        }
    }

    pub fn symbol(self) -> Symbol {
        Symbol::new(self.name())
    }

    /// Spacing symbol: `s` for time, `h` for every spatial dimension.
    pub fn spacing(self) -> Symbol {
        match self {
            Dim::Time => Symbol::new(SPACING_TIME),
            _ => Symbol::new(SPACING_SPACE),
        }
    }

    pub fn is_time(self) -> bool {
        self == Dim::Time
    }
}

pub const SPACING_SPACE: &str = "h";
pub const SPACING_TIME: &str = "s";

/// Time discretization of a time-varying function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeOptions {
    pub time_order: usize,
    /// Keep the whole history (`nt` slots) instead of a rolling buffer.
    pub save: bool,
    pub nt: usize,
}

impl TimeOptions {
    /// Number of addressable time slots.
    pub fn slots(&self) -> usize {
        if self.save {
            self.nt
        } else {
            self.time_order + 1
        }
    }
}

#[derive(Debug)]
struct Inner {
    name: String,
    shape: Vec<usize>,
    space_order: usize,
    time: Option<TimeOptions>,
}

/// A named dense field bound to a grid. Acts as a function symbol inside
/// expressions; equality and hashing go by name.
#[derive(Clone)]
pub struct GridFunction(Arc<Inner>);

impl GridFunction {
    pub fn builder(name: &str, shape: &[usize]) -> GridFunctionBuilder {
        GridFunctionBuilder {
            name: name.to_string(),
            shape: shape.to_vec(),
            space_order: 2,
            time_varying: false,
            time_order: None,
            save: None,
        }
    }

    /// Spatial function with default order 2.
    pub fn dense(name: &str, shape: &[usize]) -> Result<Self, SymbolicError> {
        Self::builder(name, shape).build()
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn shape(&self) -> &[usize] {
        &self.0.shape
    }

    pub fn ndim(&self) -> usize {
        self.0.shape.len()
    }

    pub fn space_order(&self) -> usize {
        self.0.space_order
    }

    pub fn time(&self) -> Option<TimeOptions> {
        self.0.time
    }

    pub fn is_time_varying(&self) -> bool {
        self.0.time.is_some()
    }

    /// Dimensions in argument order: time first when present.
    pub fn dims(&self) -> Vec<Dim> {
        let mut d = Vec::with_capacity(4);
        if self.is_time_varying() {
            d.push(Dim::Time);
        }
        d.extend_from_slice(Dim::spatial(self.ndim()));
        d
    }

    pub fn has_dim(&self, dim: Dim) -> bool {
        self.dims().contains(&dim)
    }

    pub fn order_along(&self, dim: Dim) -> usize {
        match (dim, self.0.time) {
            (Dim::Time, Some(t)) => t.time_order,
            _ => self.0.space_order,
        }
    }

    /// Application at the evaluation point, e.g. `u(t, x, y)`.
    pub fn at(&self) -> Expr {
        let args = self
            .dims()
            .into_iter()
            .map(|d| Expr::from_symbol(d.symbol()))
            .collect();
        Expr::apply(self.clone(), args)
    }

    pub fn dx(&self) -> Expr {
        self.deriv(Dim::X, 1)
    }

    pub fn dy(&self) -> Expr {
        self.deriv(Dim::Y, 1)
    }

    pub fn dz(&self) -> Expr {
        self.deriv(Dim::Z, 1)
    }

    pub fn dx2(&self) -> Expr {
        self.deriv(Dim::X, 2)
    }

    pub fn dy2(&self) -> Expr {
        self.deriv(Dim::Y, 2)
    }

    pub fn dz2(&self) -> Expr {
        self.deriv(Dim::Z, 2)
    }

    pub fn dt(&self) -> Expr {
        self.deriv(Dim::Time, 1)
    }

    pub fn dt2(&self) -> Expr {
        self.deriv(Dim::Time, 2)
    }

    pub fn laplace(&self) -> Expr {
        laplace(&self.at()).expect("grid function has spatial dims")
    }

    /// `u(t + s, ...)`; panics on a function without a time dimension.
    pub fn forward(&self) -> Expr {
        time_shift(&self.at(), TimeDirection::Forward).expect("time-varying function")
    }

    /// `u(t - s, ...)`; panics on a function without a time dimension.
    pub fn backward(&self) -> Expr {
        time_shift(&self.at(), TimeDirection::Backward).expect("time-varying function")
    }

    fn deriv(&self, dim: Dim, order: usize) -> Expr {
        derivative(&self.at(), dim, order)
            .unwrap_or_else(|e| panic!("{}.d{}{}: {}", self.name(), dim.name(), order, e))
    }
}

impl PartialEq for GridFunction {
    fn eq(&self, other: &Self) -> bool {
        self.0.name == other.0.name
    }
}

impl Eq for GridFunction {}

impl fmt::Debug for GridFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridFunction")
            .field("name", &self.0.name)
            .field("shape", &self.0.shape)
            .field("space_order", &self.0.space_order)
            .field("time", &self.0.time)
            .finish()
    }
}

pub struct GridFunctionBuilder {
    name: String,
    shape: Vec<usize>,
    space_order: usize,
    time_varying: bool,
    time_order: Option<usize>,
    save: Option<(bool, usize)>,
}

impl GridFunctionBuilder {
    pub fn space_order(mut self, order: usize) -> Self {
        self.space_order = order;
        self
    }

    pub fn time_varying(mut self, yes: bool) -> Self {
        self.time_varying = yes;
        self
    }

    pub fn time_order(mut self, order: usize) -> Self {
        self.time_order = Some(order);
        self
    }

    /// History policy: `save = true` keeps all `nt` slots.
    pub fn save(mut self, save: bool, nt: usize) -> Self {
        self.save = Some((save, nt));
        self
    }

    pub fn build(self) -> Result<GridFunction, SymbolicError> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_')
        {
            return Err(SymbolicError::InvalidName(self.name));
        }
        if self.shape.is_empty() {
            return Err(SymbolicError::EmptyShape);
        }
        if !(2..=3).contains(&self.shape.len()) {
            return Err(SymbolicError::UnsupportedDims(self.shape.len()));
        }
        if self.shape.contains(&0) {
            return Err(SymbolicError::EmptyShape);
        }
        if self.space_order < 2 || !self.space_order.is_multiple_of(2) {
            return Err(SymbolicError::InvalidSpaceOrder(self.space_order));
        }
        let time = if self.time_varying {
            let time_order = self.time_order.unwrap_or(2);
            if time_order == 0 {
                return Err(SymbolicError::InvalidTimeOrder(time_order));
            }
            let (save, nt) = self.save.unwrap_or((false, time_order + 1));
            if save && nt <= time_order {
                return Err(SymbolicError::InvalidTimeExtent { nt, time_order });
            }
            Some(TimeOptions {
                time_order,
                save,
                nt,
            })
        } else {
            if self.time_order.is_some() || self.save.is_some() {
                return Err(SymbolicError::TimeOptionsOnStatic(self.name));
            }
            None
        };
        Ok(GridFunction(Arc::new(Inner {
            name: self.name,
            shape: self.shape,
            space_order: self.space_order,
            time,
        })))
    }
}
