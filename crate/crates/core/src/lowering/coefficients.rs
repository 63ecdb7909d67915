use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::LoweringError;
use crate::symbolic::Rational;

/// One stencil point: `weight * f[x + offset]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StencilTap {
    pub offset: i64,
    pub weight: Rational,
}

/// Centered finite-difference weights for the `deriv_order`-th derivative
/// with the given (even) accuracy order, on the nodes `-p..=p` with
/// `p = accuracy / 2`. Taps with zero weight are omitted.
///
/// Weights are computed with Fornberg's recurrence in arbitrary precision
/// rationals, so they are exact. Division by `h^deriv_order` is left to the
/// caller.
pub fn fd_coefficients(
    deriv_order: usize,
    accuracy: usize,
) -> Result<Vec<StencilTap>, LoweringError> {
    if !(1..=2).contains(&deriv_order) {
        return Err(LoweringError::UnsupportedDerivative(deriv_order));
    }
    if accuracy < 2 || !accuracy.is_multiple_of(2) {
        return Err(LoweringError::InvalidAccuracy(accuracy));
    }
    let p = (accuracy / 2) as i64;
    let nodes: Vec<i64> = (-p..=p).collect();
    let weights = fornberg(&nodes, deriv_order);

    let mut taps = Vec::with_capacity(nodes.len());
    for (&offset, w) in nodes.iter().zip(weights) {
        if w.is_zero() {
            continue;
        }
        let (n, d) = (w.numer().to_i128(), w.denom().to_i128());
        let (Some(n), Some(d)) = (n, d) else {
            return Err(LoweringError::CoefficientOverflow(accuracy));
        };
        taps.push(StencilTap {
            offset,
            weight: Rational::new(n, d),
        });
    }
    Ok(taps)
}

/// Weights of the `m`-th derivative at 0 on integer `nodes`.
fn fornberg(nodes: &[i64], m: usize) -> Vec<BigRational> {
    let n = nodes.len();
    let x: Vec<BigRational> = nodes
        .iter()
        .map(|&v| BigRational::from_integer(BigInt::from(v)))
        .collect();
    let zero = BigRational::zero();
    // c[j][k]: weight of node j for derivative k, updated as nodes are added.
    let mut c = vec![vec![zero.clone(); m + 1]; n];
    c[0][0] = BigRational::from_integer(1.into());
    let mut c1 = BigRational::from_integer(1.into());
    let mut c4 = x[0].clone();
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = BigRational::from_integer(1.into());
        let c5 = c4.clone();
        c4 = x[i].clone();
        for j in 0..i {
            let c3 = &x[i] - &x[j];
            c2 = &c2 * &c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    let kk = BigRational::from_integer(BigInt::from(k));
                    c[i][k] = &c1 * (&kk * &c[i - 1][k - 1] - &c5 * &c[i - 1][k]) / &c2;
                }
                c[i][0] = -&c1 * &c5 * &c[i - 1][0] / &c2;
            }
            for k in (1..=mn).rev() {
                let kk = BigRational::from_integer(BigInt::from(k));
                c[j][k] = (&c4 * &c[j][k] - &kk * &c[j][k - 1]) / &c3;
            }
            c[j][0] = &c4 * &c[j][0] / &c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taps(list: &[(i64, i128, i128)]) -> Vec<StencilTap> {
        list.iter()
            .map(|&(o, n, d)| StencilTap {
                offset: o,
                weight: Rational::new(n, d),
            })
            .collect()
    }

    #[test]
    fn second_derivative_order_two() {
        assert_eq!(
            fd_coefficients(2, 2).unwrap(),
            taps(&[(-1, 1, 1), (0, -2, 1), (1, 1, 1)])
        );
    }

    #[test]
    fn first_derivative_order_two() {
        assert_eq!(
            fd_coefficients(1, 2).unwrap(),
            taps(&[(-1, -1, 2), (1, 1, 2)])
        );
    }

    #[test]
    fn second_derivative_order_four() {
        assert_eq!(
            fd_coefficients(2, 4).unwrap(),
            taps(&[(-2, -1, 12), (-1, 4, 3), (0, -5, 2), (1, 4, 3), (2, -1, 12)])
        );
    }

    #[test]
    fn rejects_bad_requests() {
        assert!(matches!(
            fd_coefficients(3, 2),
            Err(LoweringError::UnsupportedDerivative(3))
        ));
        assert!(matches!(
            fd_coefficients(2, 3),
            Err(LoweringError::InvalidAccuracy(3))
        ));
        assert!(matches!(
            fd_coefficients(1, 0),
            Err(LoweringError::InvalidAccuracy(0))
        ));
    }
}
