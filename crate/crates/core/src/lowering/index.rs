//! Continuous-offset applications to integer-indexed accesses.

use std::collections::HashMap;

use super::LoweringError;
use crate::symbolic::{
    rational_to_f64, split_coeff, substitute, Access, Dim, Expr, Node, Num, Rational, Symbol,
    TimeIndex, SPACING_SPACE, SPACING_TIME,
};

/// Numeric values for the spacing symbols `h` (space) and `s` (time).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Spacing {
    pub h: Option<f64>,
    pub s: Option<f64>,
}

impl Spacing {
    pub fn new(h: f64, s: f64) -> Self {
        Spacing {
            h: Some(h),
            s: Some(s),
        }
    }

    pub fn space(h: f64) -> Self {
        Spacing {
            h: Some(h),
            s: None,
        }
    }

    fn get(&self, dim: Dim) -> Option<f64> {
        if dim.is_time() {
            self.s
        } else {
            self.h
        }
    }
}

/// Lowers every application to an indexed access and substitutes the spacing
/// values, folding all constants to floats.
///
/// `f(x - h, y)` becomes `f[x - 1, y]`; `u(t + s, ...)` becomes `u[t + 1, ...]`,
/// reduced modulo `time_order + 1` when the function keeps a rolling buffer.
pub fn index_lower(expr: &Expr, spacing: &Spacing) -> Result<Expr, LoweringError> {
    let lowered = lower_accesses(expr, &|d| spacing.get(d).map(Num::Flt))?;
    let bindings = bindings(spacing.h.map(Expr::float), spacing.s.map(Expr::float));
    let out = to_float(&substitute(&lowered, &bindings));
    check_spacing_bound(&out)?;
    Ok(out)
}

/// Like [`index_lower`] but keeps rational arithmetic, for exact comparisons.
pub fn index_lower_exact(
    expr: &Expr,
    h: Option<Rational>,
    s: Option<Rational>,
) -> Result<Expr, LoweringError> {
    let lowered = lower_accesses(expr, &|d| if d.is_time() { s } else { h }.map(Num::Rat))?;
    let out = substitute(
        &lowered,
        &bindings(h.map(Expr::rational), s.map(Expr::rational)),
    );
    check_spacing_bound(&out)?;
    Ok(out)
}

fn bindings(h: Option<Expr>, s: Option<Expr>) -> HashMap<Symbol, Expr> {
    let mut b = HashMap::new();
    if let Some(h) = h {
        b.insert(Symbol::new(SPACING_SPACE), h);
    }
    if let Some(s) = s {
        b.insert(Symbol::new(SPACING_TIME), s);
    }
    b
}

fn check_spacing_bound(e: &Expr) -> Result<(), LoweringError> {
    for sym in e.free_symbols() {
        if sym.name() == SPACING_SPACE || sym.name() == SPACING_TIME {
            return Err(LoweringError::UnboundSpacing(sym.to_string()));
        }
    }
    Ok(())
}

/// Replaces rational constants by their double values, re-folding on the way up.
pub fn to_float(e: &Expr) -> Expr {
    e.transform(&mut |n| match n.node() {
        Node::Rational(r) => Some(Expr::float(rational_to_f64(r))),
        _ => None,
    })
}

fn lower_accesses(
    expr: &Expr,
    spacing: &dyn Fn(Dim) -> Option<Num>,
) -> Result<Expr, LoweringError> {
    let mut err = None;
    let out = expr.transform(&mut |e| {
        let Node::Apply(app) = e.node() else {
            return None;
        };
        if err.is_some() {
            return Some(e.clone());
        }
        let mut time = None;
        let mut offsets = Vec::with_capacity(app.args.len());
        for (arg, dim) in app.args.iter().zip(app.func.dims()) {
            match integer_offset(arg, dim, spacing) {
                Ok(k) if dim.is_time() => {
                    let modulo = app
                        .func
                        .time()
                        .filter(|t| !t.save)
                        .map(|t| (t.time_order + 1) as u32);
                    time = Some(TimeIndex { offset: k, modulo });
                }
                Ok(k) => offsets.push(k),
                Err(kind) => {
                    err = Some(match kind {
                        OffsetError::NotMultiple => LoweringError::NonMultipleOffset {
                            function: app.func.name().to_string(),
                            arg: arg.to_string(),
                        },
                        OffsetError::Unbound => {
                            LoweringError::UnboundSpacing(dim.spacing().to_string())
                        }
                    });
                    return Some(e.clone());
                }
            }
        }
        Some(Expr::from_access(Access {
            name: Symbol::new(app.func.name()),
            time,
            offsets,
        }))
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

enum OffsetError {
    NotMultiple,
    Unbound,
}

/// `arg = dim + k * spacing` with integer `k`.
fn integer_offset(
    arg: &Expr,
    dim: Dim,
    spacing: &dyn Fn(Dim) -> Option<Num>,
) -> Result<i64, OffsetError> {
    let rest = arg - Expr::from_symbol(dim.symbol());
    if rest.is_zero() {
        return Ok(0);
    }
    if let Some(n) = rest.as_num() {
        // Offset already substituted numerically: divide by the spacing value.
        let value = spacing(dim).ok_or(OffsetError::Unbound)?;
        return match (n, value) {
            (Num::Rat(a), Num::Rat(b)) => {
                let q = a / b;
                if q.is_integer() {
                    i64::try_from(*q.numer()).map_err(|_| OffsetError::NotMultiple)
                } else {
                    Err(OffsetError::NotMultiple)
                }
            }
            (a, b) => {
                let q = a.to_f64() / b.to_f64();
                let k = q.round();
                if (q - k).abs() <= 1e-9 {
                    Ok(k as i64)
                } else {
                    Err(OffsetError::NotMultiple)
                }
            }
        };
    }
    let (c, base) = split_coeff(&rest);
    if base.as_symbol() != Some(&dim.spacing()) {
        return Err(OffsetError::NotMultiple);
    }
    match c {
        Num::Rat(r) if r.is_integer() => {
            i64::try_from(*r.numer()).map_err(|_| OffsetError::NotMultiple)
        }
        _ => Err(OffsetError::NotMultiple),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::GridFunction;

    #[test]
    fn laplacian_term_lowers_to_integer_offsets() {
        let f = GridFunction::dense("f", &[10, 10]).unwrap();
        let lowered = index_lower(&f.dx2(), &Spacing::space(1.0)).unwrap();
        let expect = Expr::add(vec![
            Expr::mul(vec![
                Expr::float(-2.0),
                Expr::indexed("f", None, vec![0, 0]),
            ]),
            Expr::indexed("f", None, vec![-1, 0]),
            Expr::indexed("f", None, vec![1, 0]),
        ]);
        assert_eq!(lowered, expect);
    }

    #[test]
    fn rolling_time_index_is_modular() {
        let u = GridFunction::builder("u", &[10, 10])
            .time_varying(true)
            .time_order(2)
            .build()
            .unwrap();
        let lowered = index_lower(&u.forward(), &Spacing::new(1.0, 0.5)).unwrap();
        let acc = lowered.as_access().unwrap();
        assert_eq!(
            acc.time,
            Some(TimeIndex {
                offset: 1,
                modulo: Some(3)
            })
        );
        assert_eq!(lowered.to_string(), "u[(t + 1) % 3, x, y]");
    }

    #[test]
    fn saved_time_index_is_plain() {
        let u = GridFunction::builder("u", &[10, 10])
            .time_varying(true)
            .save(true, 20)
            .build()
            .unwrap();
        let lowered = index_lower(&u.backward(), &Spacing::new(1.0, 0.5)).unwrap();
        assert_eq!(lowered.to_string(), "u[t - 1, x, y]");
    }

    #[test]
    fn half_spacing_offset_is_rejected() {
        let f = GridFunction::dense("f", &[10, 10]).unwrap();
        let x = Expr::symbol("x") - Expr::ratio(1, 2) * Expr::symbol("h");
        let e = Expr::apply(f, vec![x, Expr::symbol("y")]);
        assert!(matches!(
            index_lower(&e, &Spacing::space(0.1)),
            Err(LoweringError::NonMultipleOffset { .. })
        ));
    }

    #[test]
    fn numeric_offsets_are_divided_by_spacing() {
        let f = GridFunction::dense("f", &[10, 10]).unwrap();
        let e = Expr::apply(
            f.clone(),
            vec![Expr::symbol("x") - Expr::float(0.2), Expr::symbol("y")],
        );
        let lowered = index_lower(&e, &Spacing::space(0.1)).unwrap();
        assert_eq!(lowered, Expr::indexed("f", None, vec![-2, 0]));
    }

    #[test]
    fn unbound_spacing_is_an_error() {
        let f = GridFunction::dense("f", &[10, 10]).unwrap();
        assert!(matches!(
            index_lower(&f.dx2(), &Spacing::default()),
            Err(LoweringError::UnboundSpacing(_))
        ));
    }
}
