use std::collections::HashMap;

use super::expr::{float_powi, rational_to_f64, Access, Expr, Node, Rational, Symbol};
use super::SymbolicError;

/// Values for the leaves of an expression.
pub trait Env {
    fn symbol(&self, sym: &Symbol) -> Option<f64>;
    fn access(&self, _access: &Access) -> Option<f64> {
        None
    }
}

impl Env for HashMap<Symbol, f64> {
    fn symbol(&self, sym: &Symbol) -> Option<f64> {
        self.get(sym).copied()
    }
}

/// Floating-point evaluation with the pipeline's operation order: sums and
/// products fold left to right, integer powers go through [`float_powi`].
pub fn evaluate(expr: &Expr, env: &dyn Env) -> Result<f64, SymbolicError> {
    Ok(match expr.node() {
        Node::Rational(r) => rational_to_f64(r),
        Node::Float(x) => *x,
        Node::Symbol(s) => env
            .symbol(s)
            .ok_or_else(|| SymbolicError::UnboundSymbol(s.to_string()))?,
        Node::Indexed(a) => env
            .access(a)
            .ok_or_else(|| SymbolicError::UnboundSymbol(a.name.to_string()))?,
        Node::Apply(app) => return Err(SymbolicError::UnboundSymbol(app.func.name().to_string())),
        Node::Add(terms) => {
            let mut acc = evaluate(&terms[0], env)?;
            for t in &terms[1..] {
                acc += evaluate(t, env)?;
            }
            acc
        }
        Node::Mul(factors) => {
            let mut acc = evaluate(&factors[0], env)?;
            for f in &factors[1..] {
                acc *= evaluate(f, env)?;
            }
            acc
        }
        Node::Pow(b, k) => float_powi(evaluate(b, env)?, *k),
    })
}

/// Exact evaluation of a float-free expression over rational symbol values.
pub fn evaluate_exact(
    expr: &Expr,
    env: &HashMap<Symbol, Rational>,
) -> Result<Rational, SymbolicError> {
    Ok(match expr.node() {
        Node::Rational(r) => *r,
        Node::Float(x) => return Err(SymbolicError::Inexact(*x)),
        Node::Symbol(s) => *env
            .get(s)
            .ok_or_else(|| SymbolicError::UnboundSymbol(s.to_string()))?,
        Node::Indexed(a) => return Err(SymbolicError::UnboundSymbol(a.name.to_string())),
        Node::Apply(app) => return Err(SymbolicError::UnboundSymbol(app.func.name().to_string())),
        Node::Add(terms) => {
            let mut acc = Rational::from_integer(0);
            for t in terms {
                acc += evaluate_exact(t, env)?;
            }
            acc
        }
        Node::Mul(factors) => {
            let mut acc = Rational::from_integer(1);
            for f in factors {
                acc *= evaluate_exact(f, env)?;
            }
            acc
        }
        Node::Pow(b, k) => {
            let v = evaluate_exact(b, env)?;
            if *k < 0 && v == Rational::from_integer(0) {
                return Err(SymbolicError::DivisionByZero);
            }
            num_traits::pow::Pow::pow(v, *k)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_and_exact_agree_on_simple_input() {
        let x = Expr::symbol("x");
        let e = Expr::pow(&x + 1, 2) / 3 - &x;
        let mut fe = HashMap::new();
        fe.insert(Symbol::new("x"), 2.0);
        let mut re = HashMap::new();
        re.insert(Symbol::new("x"), Rational::from_integer(2));
        assert_eq!(evaluate_exact(&e, &re).unwrap(), Rational::from_integer(1));
        assert!((evaluate(&e, &fe).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unbound_symbol_errors() {
        let e = Expr::symbol("q");
        assert!(matches!(
            evaluate(&e, &HashMap::<Symbol, f64>::new()),
            Err(SymbolicError::UnboundSymbol(_))
        ));
    }
}
