//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use fdjit::lowering::{fd_coefficients, StencilTap};
use fdjit::symbolic::Rational;

/// Stencil weights from the moment conditions `sum_k w_k k^j = j! [j == d]`,
/// `j = 0..=2p`, solved by Gauss-Jordan elimination in big rationals.
pub fn vandermonde_weights(deriv: usize, accuracy: usize) -> Vec<(i64, BigRational)> {
    let p = (accuracy / 2) as i64;
    let nodes: Vec<i64> = (-p..=p).collect();
    let n = nodes.len();
    let mut a: Vec<Vec<BigRational>> = (0..n)
        .map(|j| {
            let mut row: Vec<BigRational> = nodes
                .iter()
                .map(|&k| BigRational::from_integer(BigInt::from(k).pow(j as u32)))
                .collect();
            let rhs = if j == deriv {
                (1..=deriv).fold(BigInt::one(), |f, i| f * i)
            } else {
                BigInt::zero()
            };
            row.push(BigRational::from_integer(rhs));
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .expect("singular system");
        a.swap(col, piv);
        let inv = a[col][col].recip();
        for v in a[col].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot_row = a[col].clone();
                for (v, pv) in a[r].iter_mut().zip(&pivot_row) {
                    *v = &*v - &f * pv;
                }
            }
        }
    }
    nodes
        .iter()
        .zip(&a)
        .map(|(&k, row)| (k, row[n].clone()))
        .filter(|(_, w)| !w.is_zero())
        .collect()
}

pub fn tap_to_big(t: &StencilTap) -> (i64, BigRational) {
    let r: Rational = t.weight;
    (
        t.offset,
        BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom())),
    )
}

/// Exact agreement of `fd_coefficients` with the oracle.
pub fn coefficients_match(deriv: usize, accuracy: usize) -> bool {
    let got: Vec<_> = fd_coefficients(deriv, accuracy)
        .unwrap()
        .iter()
        .map(tap_to_big)
        .collect();
    got == vandermonde_weights(deriv, accuracy)
}

pub fn max_relative(got: &[f64], want: &[f64]) -> f64 {
    got.iter()
        .zip(want)
        .map(|(a, b)| (a - b).abs() / b.abs().max(1e-30))
        .fold(0.0, f64::max)
}

/// Point-wise relative error scaled by the largest reference magnitude, so
/// that near-zero entries do not dominate.
pub fn max_scaled(got: &[f64], want: &[f64]) -> f64 {
    let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    got.iter()
        .zip(want)
        .map(|(a, b)| (a - b).abs() / scale)
        .fold(0.0, f64::max)
}

use std::collections::HashMap as Map;

use fdjit::lowering::Assignment;
use fdjit::symbolic::{evaluate, Access, Env, Expr, Symbol, TimeIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random indexed statements shaped like lowered stencil updates: positive
/// constants, grid loads around the evaluation point, sums, products and
/// small powers, with earlier subtrees reused so that CSE has work to do.
pub fn random_statements(seed: u64) -> Vec<Assignment> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<Expr> = Vec::new();
    let n = rng.gen_range(1..=3);
    (0..n)
        .map(|i| Assignment {
            lhs: Access {
                name: Symbol::new(&format!("out{i}")),
                time: None,
                offsets: vec![0, 0],
            },
            rhs: random_expr(&mut rng, 4, &mut pool),
        })
        .collect()
}

fn random_leaf(rng: &mut ChaCha8Rng) -> Expr {
    match rng.gen_range(0..4) {
        0 => Expr::float(rng.gen_range(0.1..4.0)),
        1 => Expr::indexed(
            "u",
            Some(TimeIndex {
                offset: -rng.gen_range(1..3),
                modulo: Some(3),
            }),
            vec![rng.gen_range(-2..3), rng.gen_range(-2..3)],
        ),
        2 => Expr::indexed("m", None, vec![0, 0]),
        _ => Expr::indexed("damp", None, vec![rng.gen_range(-1..2), 0]),
    }
}

fn random_expr(rng: &mut ChaCha8Rng, depth: usize, pool: &mut Vec<Expr>) -> Expr {
    if depth == 0 || rng.gen_bool(0.2) {
        return random_leaf(rng);
    }
    if !pool.is_empty() && rng.gen_bool(0.3) {
        return pool[rng.gen_range(0..pool.len())].clone();
    }
    let e = match rng.gen_range(0..5) {
        0 | 1 => Expr::add(
            (0..rng.gen_range(2..5))
                .map(|_| random_expr(rng, depth - 1, pool))
                .collect(),
        ),
        2 | 3 => Expr::mul(
            (0..rng.gen_range(2..4))
                .map(|_| random_expr(rng, depth - 1, pool))
                .collect(),
        ),
        _ => Expr::pow(
            random_expr(rng, depth - 1, pool),
            [-1, 2, 3][rng.gen_range(0..3)],
        ),
    };
    pool.push(e.clone());
    e
}

/// Grid loads with a value fixed by the seed and the access itself, plus
/// bound temporaries.
pub struct SampledFields {
    seed: u64,
    pub temps: Map<Symbol, f64>,
}

impl SampledFields {
    pub fn new(seed: u64) -> Self {
        SampledFields {
            seed,
            temps: Map::new(),
        }
    }
}

impl Env for SampledFields {
    fn symbol(&self, sym: &Symbol) -> Option<f64> {
        self.temps.get(sym).copied()
    }

    fn access(&self, a: &Access) -> Option<f64> {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        (self.seed, format!("{a:?}")).hash(&mut h);
        Some(0.5 + 1.5 * (h.finish() >> 11) as f64 / (1u64 << 53) as f64)
    }
}

/// Evaluates statements after computing temporaries in order.
pub fn evaluate_statements(
    temps: &[(Symbol, Expr)],
    stmts: &[Assignment],
    env: &mut SampledFields,
) -> Vec<f64> {
    for (s, e) in temps {
        let v = evaluate(e, env).unwrap();
        env.temps.insert(s.clone(), v);
    }
    stmts
        .iter()
        .map(|a| evaluate(&a.rhs, env).unwrap())
        .collect()
}

/// Worst relative disagreement and whether the op count grew, for one seed.
pub fn cse_check(seed: u64) -> (f64, bool) {
    let stmts = random_statements(seed);
    let r = fdjit::optimizer::cse(&stmts, 0);
    let want = evaluate_statements(&[], &stmts, &mut SampledFields::new(seed));
    let got = evaluate_statements(&r.temps, &r.assignments, &mut SampledFields::new(seed));
    (
        max_relative(&got, &want),
        r.after.total() > r.before.total(),
    )
}
