use super::expr::{expand, Expr, Node};
use super::SymbolicError;

/// `lhs = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Equation {
    pub lhs: Expr,
    pub rhs: Expr,
}

impl Equation {
    pub fn new(lhs: Expr, rhs: Expr) -> Self {
        Equation { lhs, rhs }
    }

    /// `expr = 0`.
    pub fn zero(expr: Expr) -> Self {
        Equation {
            lhs: expr,
            rhs: Expr::zero(),
        }
    }

    /// `lhs - rhs`.
    pub fn residual(&self) -> Expr {
        &self.lhs - &self.rhs
    }
}

/// Solves an equation that is affine in `target` for `target`.
///
/// Collect-and-divide: after expanding `lhs - rhs` into a sum, every term
/// must contain `target` at most once as a plain factor. The result is
/// `-(rest) / (coefficient)` with exact rational arithmetic.
pub fn solve_for(eqn: &Equation, target: &Expr) -> Result<Expr, SymbolicError> {
    let e = expand(&eqn.residual());
    let terms = match e.node() {
        Node::Add(t) => t.clone(),
        _ => vec![e.clone()],
    };

    let mut coeff = Vec::new();
    let mut rest = Vec::new();
    for term in terms {
        let factors = match term.node() {
            Node::Mul(f) => f.clone(),
            _ => vec![term.clone()],
        };
        let mut hits = 0;
        let mut others = Vec::with_capacity(factors.len());
        for f in factors {
            if &f == target {
                hits += 1;
            } else if f.contains(target) {
                return Err(SymbolicError::NonLinear(target.to_string()));
            } else {
                others.push(f);
            }
        }
        match hits {
            0 => rest.push(term),
            1 => coeff.push(Expr::mul(others)),
            _ => return Err(SymbolicError::NonLinear(target.to_string())),
        }
    }

    let a = Expr::add(coeff);
    if a.is_zero() {
        return Err(SymbolicError::TargetAbsent(target.to_string()));
    }
    let b = Expr::add(rest);
    Ok(Expr::mul(vec![Expr::int(-1), b, Expr::pow(a, -1)]))
}
