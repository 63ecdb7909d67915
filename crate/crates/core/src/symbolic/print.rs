//! Human-readable rendering in the notation of the high-level API, e.g.
//! `(-2*f(x, y) + f(x - h, y) + f(x + h, y)) / h**2`.

use std::fmt;

use num_traits::{One, Signed};

use super::expr::{is_negative_term, split_coeff, Access, Expr, Node, Num};
use super::grid::Dim;

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_POW: u8 = 3;

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self, 0))
    }
}

fn paren(s: String, inner: u8, outer: u8) -> String {
    if inner < outer {
        format!("({s})")
    } else {
        s
    }
}

fn render_num(n: Num) -> String {
    match n {
        Num::Rat(r) if r.is_integer() => r.numer().to_string(),
        Num::Rat(r) => format!("{}/{}", r.numer(), r.denom()),
        Num::Flt(x) => format!("{x:?}"),
    }
}

fn render(e: &Expr, outer: u8) -> String {
    match e.node() {
        Node::Rational(r) => {
            let s = render_num(Num::Rat(*r));
            if r.is_integer() && !r.is_negative() {
                s
            } else {
                paren(s, PREC_MUL, outer)
            }
        }
        Node::Float(x) => {
            let s = render_num(Num::Flt(*x));
            if *x < 0.0 {
                paren(s, PREC_ADD, outer)
            } else {
                s
            }
        }
        Node::Symbol(s) => s.to_string(),
        Node::Apply(app) => {
            let dims = app.func.dims();
            let args: Vec<String> = app
                .args
                .iter()
                .zip(&dims)
                .map(|(a, d)| render_arg(a, *d))
                .collect();
            format!("{}({})", app.func.name(), args.join(", "))
        }
        Node::Indexed(a) => render_access(a),
        Node::Add(terms) => paren(render_sum(terms), PREC_ADD, outer),
        Node::Mul(_) | Node::Pow(..) => render_product(e, outer),
    }
}

/// Renders an application argument with the dimension symbol first.
fn render_arg(arg: &Expr, dim: Dim) -> String {
    if let Node::Add(terms) = arg.node() {
        let sym = dim.symbol();
        if let Some(pos) = terms.iter().position(|t| t.as_symbol() == Some(&sym)) {
            let mut ordered = vec![terms[pos].clone()];
            ordered.extend(
                terms
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != pos)
                    .map(|(_, t)| t.clone()),
            );
            return render_sum(&ordered);
        }
    }
    render(arg, 0)
}

fn render_sum(terms: &[Expr]) -> String {
    let mut out = String::new();
    for (i, t) in terms.iter().enumerate() {
        if i == 0 {
            out.push_str(&render(t, PREC_ADD));
        } else if is_negative_term(t) {
            out.push_str(" - ");
            out.push_str(&render(&t.neg(), PREC_ADD));
        } else {
            out.push_str(" + ");
            out.push_str(&render(t, PREC_ADD));
        }
    }
    out
}

fn render_product(e: &Expr, outer: u8) -> String {
    let (coeff, rest) = split_coeff(e);
    let factors = match rest.node() {
        Node::Mul(f) => f.clone(),
        _ => vec![rest.clone()],
    };
    let mut num_parts = Vec::new();
    let mut den_parts = Vec::new();
    let (negative, c_num, c_den) = match coeff {
        Num::Rat(r) => {
            let a = r.abs();
            let n = if a.numer().is_one() {
                None
            } else {
                Some(a.numer().to_string())
            };
            let d = if a.denom().is_one() {
                None
            } else {
                Some(a.denom().to_string())
            };
            (r.is_negative(), n, d)
        }
        Num::Flt(x) => (
            x < 0.0,
            if x.abs() == 1.0 {
                None
            } else {
                Some(render_num(Num::Flt(x.abs())))
            },
            None,
        ),
    };
    num_parts.extend(c_num);
    den_parts.extend(c_den);
    for f in &factors {
        match f.node() {
            Node::Pow(b, k) if *k < 0 => den_parts.push(render_power(b, -*k)),
            Node::Pow(b, k) => num_parts.push(render_power(b, *k)),
            _ => num_parts.push(render(f, PREC_MUL)),
        }
    }
    let numer = if num_parts.is_empty() {
        "1".to_string()
    } else {
        num_parts.join("*")
    };
    let body = if den_parts.is_empty() {
        numer
    } else {
        let den = if den_parts.len() == 1 {
            den_parts.remove(0)
        } else {
            format!("({})", den_parts.join("*"))
        };
        format!("{numer} / {den}")
    };
    if negative {
        paren(format!("-{body}"), PREC_ADD, outer)
    } else if body.contains(" / ") {
        paren(body, PREC_MUL + 1, outer)
    } else {
        paren(body, PREC_MUL, outer)
    }
}

fn render_power(base: &Expr, k: i32) -> String {
    let b = render(base, PREC_POW + 1);
    if k == 1 {
        b
    } else {
        format!("{b}**{k}")
    }
}

fn render_offset(var: &str, off: i64) -> String {
    match off {
        0 => var.to_string(),
        o if o > 0 => format!("{var} + {o}"),
        o => format!("{var} - {}", -o),
    }
}

fn render_access(a: &Access) -> String {
    let mut idx = Vec::with_capacity(a.offsets.len() + 1);
    if let Some(t) = a.time {
        let base = render_offset("t", t.offset);
        idx.push(match t.modulo {
            Some(m) if t.offset != 0 => format!("({base}) % {m}"),
            Some(m) => format!("{base} % {m}"),
            None => base,
        });
    }
    for (d, &off) in Dim::spatial(a.offsets.len()).iter().zip(&a.offsets) {
        idx.push(render_offset(d.name(), off));
    }
    format!("{}[{}]", a.name, idx.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::TimeIndex;

    #[test]
    fn indexed_rendering() {
        let e = Expr::indexed(
            "u",
            Some(TimeIndex {
                offset: 1,
                modulo: Some(3),
            }),
            vec![-1, 0],
        );
        assert_eq!(e.to_string(), "u[(t + 1) % 3, x - 1, y]");
        let f = Expr::indexed("f", None, vec![0, 2]);
        assert_eq!(f.to_string(), "f[x, y + 2]");
    }

    #[test]
    fn products_and_quotients() {
        let x = Expr::symbol("x");
        let y = Expr::symbol("y");
        assert_eq!((&x * &y).to_string(), "x*y");
        assert_eq!((&x / &y).to_string(), "x / y");
        assert_eq!((Expr::int(2) * &x - &y).to_string(), "2*x - y");
        assert_eq!((Expr::pow(&x + &y, 2)).to_string(), "(x + y)**2");
        assert_eq!((x.clone() / 2).to_string(), "x / 2");
        assert_eq!(Expr::ratio(-1, 2).to_string(), "-1/2");
    }
}
