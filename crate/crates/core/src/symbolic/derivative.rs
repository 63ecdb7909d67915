//! Finite-difference shorthand: derivatives, Laplacian and time shifts.

use num_integer::Integer;

use super::expr::{Expr, Node, Rational};
use super::grid::Dim;
use super::SymbolicError;
use crate::lowering::fd_coefficients;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeDirection {
    Forward,
    Backward,
}

/// Shifts every application that has `dim` by `k` grid spacings along it.
pub fn shift(expr: &Expr, dim: Dim, k: i64) -> Expr {
    if k == 0 {
        return expr.clone();
    }
    let step = Expr::mul(vec![Expr::int(k), Expr::from_symbol(dim.spacing())]);
    expr.transform(&mut |e| {
        let Node::Apply(app) = e.node() else {
            return None;
        };
        let pos = app.func.dims().iter().position(|&d| d == dim)?;
        let mut args = app.args.clone();
        args[pos] = Expr::add(vec![args[pos].clone(), step.clone()]);
        Some(Expr::apply(app.func.clone(), args))
    })
}

/// Centered finite-difference derivative of `expr` along `dim`.
///
/// The accuracy order comes from the functions in `expr` that vary along
/// `dim` (their space order, or time order for the time dimension). The
/// result keeps exact rational weights and the spacing symbol:
/// `(w_0 f(x - p h) + ... + w_2p f(x + p h)) / (den * h**order)`.
pub fn derivative(expr: &Expr, dim: Dim, order: usize) -> Result<Expr, SymbolicError> {
    if !(1..=2).contains(&order) {
        return Err(SymbolicError::UnsupportedDerivative(order));
    }
    let funcs: Vec<_> = expr
        .functions()
        .into_iter()
        .filter(|f| f.has_dim(dim))
        .collect();
    if funcs.is_empty() {
        return Err(SymbolicError::MissingDim(dim.name()));
    }
    let accuracy = funcs.iter().map(|f| f.order_along(dim)).max().unwrap();
    let taps =
        fd_coefficients(order, accuracy).map_err(|e| SymbolicError::Stencil(e.to_string()))?;

    let den = taps.iter().fold(1i128, |acc, t| acc.lcm(t.weight.denom()));
    let terms = taps
        .iter()
        .map(|t| {
            let w = t.weight * Rational::from_integer(den);
            Expr::mul(vec![Expr::rational(w), shift(expr, dim, t.offset)])
        })
        .collect();
    Ok(Expr::mul(vec![
        Expr::rational(Rational::new(1, den)),
        Expr::pow(Expr::from_symbol(dim.spacing()), -(order as i32)),
        Expr::add(terms),
    ]))
}

/// Sum of second derivatives over the spatial dimensions of `expr`.
pub fn laplace(expr: &Expr) -> Result<Expr, SymbolicError> {
    let ndim = expr
        .functions()
        .iter()
        .map(|f| f.ndim())
        .max()
        .ok_or(SymbolicError::MissingDim("x"))?;
    let parts = Dim::spatial(ndim)
        .iter()
        .map(|&d| derivative(expr, d, 2))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Expr::add(parts))
}

/// `u(t + s)` for [`TimeDirection::Forward`], `u(t - s)` for backward.
pub fn time_shift(expr: &Expr, direction: TimeDirection) -> Result<Expr, SymbolicError> {
    if !expr.functions().iter().any(|f| f.is_time_varying()) {
        return Err(SymbolicError::NotTimeVarying);
    }
    let k = match direction {
        TimeDirection::Forward => 1,
        TimeDirection::Backward => -1,
    };
    Ok(shift(expr, Dim::Time, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::GridFunction;

    fn f2(order: usize) -> GridFunction {
        GridFunction::builder("f", &[10, 10])
            .space_order(order)
            .build()
            .unwrap()
    }

    fn u2() -> GridFunction {
        GridFunction::builder("u", &[10, 10])
            .time_varying(true)
            .time_order(2)
            .build()
            .unwrap()
    }

    #[test]
    fn second_derivative_order_two_prints_like_the_shorthand() {
        assert_eq!(
            f2(2).dx2().to_string(),
            "(-2*f(x, y) + f(x - h, y) + f(x + h, y)) / h**2"
        );
    }

    #[test]
    fn second_time_derivative() {
        assert_eq!(
            u2().dt2().to_string(),
            "(-2*u(t, x, y) + u(t - s, x, y) + u(t + s, x, y)) / s**2"
        );
    }

    #[test]
    fn fourth_order_second_derivative() {
        let d = f2(4).dx2().to_string();
        assert_eq!(
            d,
            "(-30*f(x, y) - f(x - 2*h, y) + 16*f(x - h, y) + 16*f(x + h, y) - f(x + 2*h, y)) / (12*h**2)"
        );
    }

    #[test]
    fn first_derivative_is_centered() {
        assert_eq!(
            f2(2).dx().to_string(),
            "(-f(x - h, y) + f(x + h, y)) / (2*h)"
        );
    }

    #[test]
    fn laplace_has_one_group_per_dimension() {
        let f = f2(2);
        let lap = f.laplace();
        match lap.node() {
            Node::Add(groups) => assert_eq!(groups.len(), 2),
            _ => panic!("laplace should be a sum"),
        }
        assert_eq!(lap, f.dx2() + f.dy2());

        let g = GridFunction::dense("g", &[6, 6, 6]).unwrap();
        match g.laplace().node() {
            Node::Add(groups) => assert_eq!(groups.len(), 3),
            _ => panic!("laplace should be a sum"),
        }
    }

    #[test]
    fn forward_and_backward_cancel() {
        let u = u2();
        let there_and_back = time_shift(&u.forward(), TimeDirection::Backward).unwrap();
        assert_eq!(there_and_back, u.at());
        assert_eq!(u.forward().to_string(), "u(t + s, x, y)");
        assert_eq!(u.backward().to_string(), "u(t - s, x, y)");
    }

    #[test]
    fn errors() {
        let f = f2(2);
        assert!(matches!(
            derivative(&f.at(), Dim::X, 3),
            Err(SymbolicError::UnsupportedDerivative(3))
        ));
        assert!(matches!(
            derivative(&f.at(), Dim::Z, 2),
            Err(SymbolicError::MissingDim("z"))
        ));
        assert!(matches!(
            derivative(&f.at(), Dim::Time, 2),
            Err(SymbolicError::MissingDim("t"))
        ));
        assert!(matches!(
            time_shift(&f.at(), TimeDirection::Forward),
            Err(SymbolicError::NotTimeVarying)
        ));
    }

    #[test]
    fn cross_derivative_composition_commutes() {
        let f = f2(4);
        let xy = derivative(&derivative(&f.at(), Dim::X, 1).unwrap(), Dim::Y, 1).unwrap();
        let yx = derivative(&derivative(&f.at(), Dim::Y, 1).unwrap(), Dim::X, 1).unwrap();
        assert_eq!(crate::symbolic::expand(&xy), crate::symbolic::expand(&yx));
    }
}
