//! C rendering of lowered expressions.
//!
//! The text mirrors the evaluation order of the reference interpreter
//! exactly: sums and products fold left to right, a negative coefficient is
//! printed as a subtraction or a unary minus (both exact), small integer
//! powers are unrolled into products and negative powers become `1.0/(...)`.

use crate::lowering::Layout;
use crate::symbolic::{is_negative_term, rational_to_f64, Access, Expr, Node, TimeIndex};

/// How accesses are spelled: grid names, slot variables, loop variables.
pub trait AccessNamer {
    fn time(&self, t: TimeIndex) -> String;
    fn layout(&self) -> Layout;
}

pub fn float_literal(x: f64) -> String {
    assert!(x.is_finite(), "non-finite constant in kernel");
    let s = format!("{x:?}");
    if s.contains('.') || s.contains('e') {
        s
    } else {
        format!("{s}.0")
    }
}

pub fn offset_index(var: &str, off: i64) -> String {
    match off {
        0 => var.to_string(),
        o if o > 0 => format!("{var} + {o}"),
        o => format!("{var} - {}", -o),
    }
}

/// `name[slot][i]...` with spatial indices in storage order.
pub fn render_indexed(
    name: &str,
    slot: Option<String>,
    spatial: Vec<String>,
    layout: Layout,
) -> String {
    let mut s = String::from(name);
    if let Some(t) = slot {
        s.push('[');
        s.push_str(&t);
        s.push(']');
    }
    let ordered: Vec<String> = match layout {
        Layout::RowMajor => spatial,
        Layout::ColumnMajor => spatial.into_iter().rev().collect(),
    };
    for i in ordered {
        s.push('[');
        s.push_str(&i);
        s.push(']');
    }
    s
}

pub fn render_access(a: &Access, namer: &dyn AccessNamer) -> String {
    let spatial = a
        .offsets
        .iter()
        .enumerate()
        .map(|(d, &o)| offset_index(&format!("i{}", d + 1), o))
        .collect();
    render_indexed(
        a.name.name(),
        a.time.map(|t| namer.time(t)),
        spatial,
        namer.layout(),
    )
}

fn num_value(e: &Expr) -> Option<f64> {
    match e.node() {
        Node::Float(x) => Some(*x),
        Node::Rational(r) => Some(rational_to_f64(r)),
        _ => None,
    }
}

/// Renders `e` as a C expression.
pub fn render(e: &Expr, namer: &dyn AccessNamer) -> String {
    match e.node() {
        Node::Float(_) | Node::Rational(_) => {
            let v = num_value(e).unwrap();
            if v < 0.0 || (v == 0.0 && v.is_sign_negative()) {
                format!("({})", float_literal(v))
            } else {
                float_literal(v)
            }
        }
        Node::Symbol(s) => s.to_string(),
        Node::Indexed(a) => render_access(a, namer),
        Node::Apply(a) => panic!("unlowered application of {} in kernel", a.func.name()),
        Node::Add(terms) => {
            let mut s = String::new();
            for (i, t) in terms.iter().enumerate() {
                if i == 0 {
                    s.push_str(&render_term(t, namer, true));
                } else if is_negative_term(t) {
                    s.push_str(" - ");
                    s.push_str(&render_term(t, namer, false));
                } else {
                    s.push_str(" + ");
                    s.push_str(&render_term(t, namer, false));
                }
            }
            format!("({s})")
        }
        Node::Mul(_) => render_product(e, namer, false),
        Node::Pow(b, k) => render_pow(b, *k, namer),
    }
}

/// A sum term. Non-leading negative terms are printed by magnitude after
/// the ` - ` the caller wrote; a leading negative keeps its sign.
fn render_term(t: &Expr, namer: &dyn AccessNamer, leading: bool) -> String {
    let negative = is_negative_term(t);
    match t.node() {
        Node::Float(_) | Node::Rational(_) => {
            let v = num_value(t).unwrap();
            if negative && !leading {
                float_literal(-v)
            } else {
                float_literal(v)
            }
        }
        Node::Mul(_) => render_product(t, namer, negative && !leading),
        _ => render(t, namer),
    }
}

/// Product `c*f1*f2...`. With `magnitude` the sign of a negative leading
/// coefficient is dropped (the caller printed a subtraction).
fn render_product(e: &Expr, namer: &dyn AccessNamer, magnitude: bool) -> String {
    let Node::Mul(factors) = e.node() else {
        unreachable!()
    };
    let mut parts = Vec::with_capacity(factors.len());
    let mut rest = &factors[..];
    if let Some(c) = num_value(&factors[0]) {
        let c = if magnitude { -c } else { c };
        rest = &factors[1..];
        if c == 1.0 {
            // Unit factor: nothing to print.
        } else if c == -1.0 {
            parts.push(String::from("-"));
        } else {
            parts.push(float_literal(c));
        }
    }
    let mut s = String::new();
    let mut first = true;
    for p in &parts {
        if p == "-" {
            s.push('-');
        } else {
            s.push_str(p);
            first = false;
        }
    }
    for f in rest {
        if !first {
            s.push('*');
        }
        first = false;
        s.push_str(&render_factor(f, namer));
    }
    s
}

fn render_factor(f: &Expr, namer: &dyn AccessNamer) -> String {
    match f.node() {
        Node::Mul(_) => format!("({})", render_product(f, namer, false)),
        _ => render(f, namer),
    }
}

fn render_pow(b: &Expr, k: i32, namer: &dyn AccessNamer) -> String {
    let base = render_factor(b, namer);
    let n = k.unsigned_abs();
    let pos = if n <= 4 {
        let v = vec![base.as_str(); n as usize];
        format!("({})", v.join("*"))
    } else {
        format!("pow({base}, {})", float_literal(n as f64))
    };
    if k < 0 {
        format!("(1.0/{pos})")
    } else {
        pos
    }
}
