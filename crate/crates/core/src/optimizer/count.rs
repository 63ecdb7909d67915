use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::symbolic::{Expr, Node};

/// Arithmetic operation counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCount {
    pub adds: usize,
    pub muls: usize,
    pub divs: usize,
}

impl OpCount {
    pub fn total(&self) -> usize {
        self.adds + self.muls + self.divs
    }
}

impl Add for OpCount {
    type Output = OpCount;
    fn add(self, o: OpCount) -> OpCount {
        OpCount {
            adds: self.adds + o.adds,
            muls: self.muls + o.muls,
            divs: self.divs + o.divs,
        }
    }
}

impl AddAssign for OpCount {
    fn add_assign(&mut self, o: OpCount) {
        *self = *self + o;
    }
}

fn is_unit_coeff(e: &Expr) -> bool {
    e.as_f64().is_some_and(|v| v == 1.0 || v == -1.0)
}

/// Counts the operations of `e` as emitted: an `n`-ary sum costs `n - 1`
/// adds, a product `n - 1` muls (a leading `±1` factor is a free sign),
/// `x**k` costs `k - 1` muls for `2 <= k <= 4` and one call otherwise, and
/// a negative power adds one division.
pub fn op_count(e: &Expr) -> OpCount {
    let mut c = OpCount::default();
    count_into(e, &mut c);
    c
}

fn count_into(e: &Expr, c: &mut OpCount) {
    match e.node() {
        Node::Add(terms) => {
            c.adds += terms.len() - 1;
            terms.iter().for_each(|t| count_into(t, c));
        }
        Node::Mul(factors) => {
            let n = factors.len() - usize::from(is_unit_coeff(&factors[0]));
            c.muls += n.saturating_sub(1);
            factors.iter().for_each(|f| count_into(f, c));
        }
        Node::Pow(b, k) => {
            let n = k.unsigned_abs() as usize;
            c.muls += if n <= 4 { n - 1 } else { 1 };
            if *k < 0 {
                c.divs += 1;
            }
            count_into(b, c);
        }
        Node::Apply(a) => a.args.iter().for_each(|x| count_into(x, c)),
        _ => {}
    }
}
