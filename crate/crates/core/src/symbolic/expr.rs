//! Immutable expression trees with canonical construction.
//!
//! Every constructor in this module returns a canonical tree: sums and
//! products are flattened, numeric terms are folded, like terms (sums) and
//! equal bases (products) are merged, and children are sorted with
//! [`canonical_cmp`]. Two canonical trees are structurally equal iff they
//! compare equal with `==`, which is what hashing and CSE rely on.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::ops;
use std::sync::Arc;

use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::grid::GridFunction;

/// Exact rational constant.
pub type Rational = Ratio<i128>;

/// A free symbol such as `x`, `h` or `temp3`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol(Arc::from(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for Symbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Time index of a lowered access: `t + offset`, optionally reduced modulo
/// the number of rolling buffer slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TimeIndex {
    pub offset: i64,
    pub modulo: Option<u32>,
}

impl TimeIndex {
    pub fn shifted(self, by: i64) -> Self {
        TimeIndex {
            offset: self.offset + by,
            modulo: self.modulo,
        }
    }

    /// Concrete buffer slot for loop counter `t`.
    pub fn slot(self, t: i64) -> i64 {
        let raw = t + self.offset;
        match self.modulo {
            Some(m) => raw.rem_euclid(m as i64),
            None => raw,
        }
    }
}

/// Grid-function application in continuous-offset form, e.g. `u(t + s, x - h, y)`.
#[derive(Debug, Clone)]
pub struct Application {
    pub func: GridFunction,
    pub args: Vec<Expr>,
}

/// Integer-indexed access in lowered form, e.g. `u[t + 1][x - 1][y]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Access {
    pub name: Symbol,
    pub time: Option<TimeIndex>,
    pub offsets: Vec<i64>,
}

#[derive(Debug, Clone)]
pub enum Node {
    Rational(Rational),
    Float(f64),
    Symbol(Symbol),
    Apply(Application),
    Indexed(Access),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, i32),
}

/// Shared, immutable expression handle.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl std::fmt::Debug for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self)
    }
}

/// Numeric value used while folding constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Num {
    Rat(Rational),
    Flt(f64),
}

impl Num {
    fn one() -> Self {
        Num::Rat(Rational::one())
    }

    fn zero() -> Self {
        Num::Rat(Rational::zero())
    }

    pub(crate) fn to_f64(self) -> f64 {
        match self {
            Num::Rat(r) => rational_to_f64(&r),
            Num::Flt(f) => f,
        }
    }

    fn add(self, other: Num) -> Num {
        match (self, other) {
            (Num::Rat(a), Num::Rat(b)) => Num::Rat(a + b),
            (a, b) => Num::Flt(a.to_f64() + b.to_f64()),
        }
    }

    fn mul(self, other: Num) -> Num {
        match (self, other) {
            (Num::Rat(a), Num::Rat(b)) => Num::Rat(a * b),
            (a, b) => Num::Flt(a.to_f64() * b.to_f64()),
        }
    }

    fn is_zero(self) -> bool {
        match self {
            Num::Rat(r) => r.is_zero(),
            Num::Flt(f) => f == 0.0,
        }
    }

    fn is_one(self) -> bool {
        match self {
            Num::Rat(r) => r.is_one(),
            Num::Flt(f) => f == 1.0,
        }
    }

    fn into_expr(self) -> Expr {
        match self {
            Num::Rat(r) => Expr::raw(Node::Rational(r)),
            Num::Flt(f) => Expr::raw(Node::Float(f)),
        }
    }
}

pub(crate) fn rational_to_f64(r: &Rational) -> f64 {
    // Exact for the small numerators and denominators stencil weights use.
    let n = r.numer().to_f64().unwrap_or(f64::NAN);
    let d = r.denom().to_f64().unwrap_or(f64::NAN);
    n / d
}

/// Integer power with the evaluation semantics shared by the whole pipeline:
/// exponents up to 4 in magnitude are expanded into left-folded products, a
/// negative exponent takes the reciprocal of the positive power, and larger
/// exponents call `pow`.
pub fn float_powi(x: f64, k: i32) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let n = k.unsigned_abs();
    let positive = if n <= 4 {
        let mut acc = x;
        for _ in 1..n {
            acc *= x;
        }
        acc
    } else {
        x.powf(n as f64)
    };
    if k < 0 {
        1.0 / positive
    } else {
        positive
    }
}

impl Expr {
    /// Wraps a node as is, skipping canonicalization. Used for statement
    /// trees whose shape must be kept, such as CSE output.
    pub fn raw(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn zero() -> Expr {
        Expr::rational(Rational::zero())
    }

    pub fn one() -> Expr {
        Expr::rational(Rational::one())
    }

    pub fn int(v: i64) -> Expr {
        Expr::rational(Rational::from_integer(v as i128))
    }

    pub fn rational(r: Rational) -> Expr {
        Expr::raw(Node::Rational(r))
    }

    pub fn ratio(n: i64, d: i64) -> Expr {
        Expr::rational(Rational::new(n as i128, d as i128))
    }

    pub fn float(v: f64) -> Expr {
        Expr::raw(Node::Float(v))
    }

    pub fn symbol(name: &str) -> Expr {
        Expr::raw(Node::Symbol(Symbol::new(name)))
    }

    pub fn from_symbol(sym: Symbol) -> Expr {
        Expr::raw(Node::Symbol(sym))
    }

    pub fn apply(func: GridFunction, args: Vec<Expr>) -> Expr {
        Expr::raw(Node::Apply(Application { func, args }))
    }

    pub fn indexed(name: &str, time: Option<TimeIndex>, offsets: Vec<i64>) -> Expr {
        Expr::raw(Node::Indexed(Access {
            name: Symbol::new(name),
            time,
            offsets,
        }))
    }

    pub fn from_access(access: Access) -> Expr {
        Expr::raw(Node::Indexed(access))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.as_num(), Some(n) if n.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self.as_num(), Some(n) if n.is_one())
    }

    pub fn is_number(&self) -> bool {
        self.as_num().is_some()
    }

    pub(crate) fn as_num(&self) -> Option<Num> {
        match self.node() {
            Node::Rational(r) => Some(Num::Rat(*r)),
            Node::Float(f) => Some(Num::Flt(*f)),
            _ => None,
        }
    }

    pub fn as_rational(&self) -> Option<Rational> {
        match self.node() {
            Node::Rational(r) => Some(*r),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        self.as_num().map(Num::to_f64)
    }

    pub fn as_symbol(&self) -> Option<&Symbol> {
        match self.node() {
            Node::Symbol(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_access(&self) -> Option<&Access> {
        match self.node() {
            Node::Indexed(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_application(&self) -> Option<&Application> {
        match self.node() {
            Node::Apply(a) => Some(a),
            _ => None,
        }
    }

    /// Direct children in evaluation order.
    pub fn children(&self) -> Vec<Expr> {
        match self.node() {
            Node::Add(c) | Node::Mul(c) => c.clone(),
            Node::Pow(b, _) => vec![b.clone()],
            Node::Apply(a) => a.args.clone(),
            _ => Vec::new(),
        }
    }

    pub fn is_leaf(&self) -> bool {
        !matches!(self.node(), Node::Add(_) | Node::Mul(_) | Node::Pow(..))
    }

    /// Canonical sum.
    pub fn add(terms: Vec<Expr>) -> Expr {
        let mut flat = Vec::with_capacity(terms.len());
        for t in terms {
            match t.node() {
                Node::Add(children) => flat.extend(children.iter().cloned()),
                _ => flat.push(t),
            }
        }

        let mut constant = Num::zero();
        let mut saw_constant = false;
        let mut order: Vec<(Expr, Num)> = Vec::new();
        let mut index: HashMap<Expr, usize> = HashMap::new();
        for t in flat {
            if let Some(n) = t.as_num() {
                constant = constant.add(n);
                saw_constant = true;
                continue;
            }
            let (coeff, rest) = split_coeff(&t);
            match index.get(&rest) {
                Some(&i) => order[i].1 = order[i].1.add(coeff),
                None => {
                    index.insert(rest.clone(), order.len());
                    order.push((rest, coeff));
                }
            }
        }

        let mut out: Vec<Expr> = order
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(rest, c)| with_coeff(c, rest))
            .collect();
        if saw_constant && !constant.is_zero() {
            out.push(constant.into_expr());
        }
        match out.len() {
            0 => {
                if let Num::Flt(_) = constant {
                    Expr::float(0.0)
                } else {
                    Expr::zero()
                }
            }
            1 => out.pop().unwrap(),
            _ => {
                out.sort_by(canonical_cmp);
                Expr::raw(Node::Add(out))
            }
        }
    }

    /// Canonical product.
    pub fn mul(factors: Vec<Expr>) -> Expr {
        let mut flat = Vec::with_capacity(factors.len());
        for f in factors {
            match f.node() {
                Node::Mul(children) => flat.extend(children.iter().cloned()),
                _ => flat.push(f),
            }
        }

        let mut coeff = Num::one();
        let mut order: Vec<(Expr, i32)> = Vec::new();
        let mut index: HashMap<Expr, usize> = HashMap::new();
        for f in flat {
            if let Some(n) = f.as_num() {
                coeff = coeff.mul(n);
                continue;
            }
            let (base, exp) = match f.node() {
                Node::Pow(b, e) => (b.clone(), *e),
                _ => (f.clone(), 1),
            };
            match index.get(&base) {
                Some(&i) => order[i].1 += exp,
                None => {
                    index.insert(base.clone(), order.len());
                    order.push((base, exp));
                }
            }
        }
        if coeff.is_zero() {
            return match coeff {
                Num::Flt(_) => Expr::float(0.0),
                Num::Rat(_) => Expr::zero(),
            };
        }

        let mut out = Vec::with_capacity(order.len() + 1);
        for (base, exp) in order {
            if exp == 0 {
                continue;
            }
            let p = Expr::pow(base, exp);
            match p.as_num() {
                Some(n) => coeff = coeff.mul(n),
                None => out.push(p),
            }
        }

        if out.is_empty() {
            return coeff.into_expr();
        }
        if coeff.is_one() && out.len() == 1 {
            return out.pop().unwrap();
        }
        // A numeric factor times a single sum distributes over the sum.
        if out.len() == 1 {
            if let Node::Add(terms) = out[0].node() {
                let c = coeff.into_expr();
                return Expr::add(
                    terms
                        .iter()
                        .map(|t| Expr::mul(vec![c.clone(), t.clone()]))
                        .collect(),
                );
            }
        }
        out.sort_by(canonical_cmp);
        if !coeff.is_one() {
            out.insert(0, coeff.into_expr());
        }
        Expr::raw(Node::Mul(out))
    }

    /// Canonical integer power.
    pub fn pow(base: Expr, exp: i32) -> Expr {
        if exp == 0 {
            return Expr::one();
        }
        if exp == 1 {
            return base;
        }
        match base.node() {
            Node::Rational(r) => {
                if r.is_zero() && exp < 0 {
                    Expr::float(f64::INFINITY)
                } else {
                    Expr::rational(r.pow(exp))
                }
            }
            Node::Float(f) => Expr::float(float_powi(*f, exp)),
            Node::Pow(b, e) => Expr::pow(b.clone(), e * exp),
            Node::Mul(children) => {
                Expr::mul(children.iter().map(|c| Expr::pow(c.clone(), exp)).collect())
            }
            _ => Expr::raw(Node::Pow(base, exp)),
        }
    }

    pub fn neg(&self) -> Expr {
        Expr::mul(vec![Expr::int(-1), self.clone()])
    }

    pub fn recip(&self) -> Expr {
        Expr::pow(self.clone(), -1)
    }

    /// Rebuilds this node with new children through the canonical constructors.
    pub fn with_children(&self, children: Vec<Expr>) -> Expr {
        match self.node() {
            Node::Add(_) => Expr::add(children),
            Node::Mul(_) => Expr::mul(children),
            Node::Pow(_, e) => Expr::pow(children.into_iter().next().expect("pow base"), *e),
            Node::Apply(a) => Expr::apply(a.func.clone(), children),
            _ => self.clone(),
        }
    }

    /// Bottom-up rewrite. `f` sees every node after its children were rewritten.
    pub fn transform(&self, f: &mut impl FnMut(&Expr) -> Option<Expr>) -> Expr {
        if let Some(replaced) = f(self) {
            return replaced;
        }
        if self.is_leaf() && !matches!(self.node(), Node::Apply(_)) {
            return self.clone();
        }
        let kids: Vec<Expr> = self.children().iter().map(|c| c.transform(f)).collect();
        self.with_children(kids)
    }

    /// Structural replacement of every occurrence of `from` by `to`.
    pub fn replace(&self, from: &Expr, to: &Expr) -> Expr {
        self.transform(&mut |e| if e == from { Some(to.clone()) } else { None })
    }

    pub fn contains(&self, needle: &Expr) -> bool {
        if self == needle {
            return true;
        }
        self.children().iter().any(|c| c.contains(needle))
    }

    pub fn contains_symbol(&self, sym: &Symbol) -> bool {
        match self.node() {
            Node::Symbol(s) => s == sym,
            _ => self.children().iter().any(|c| c.contains_symbol(sym)),
        }
    }

    /// Pre-order visit of every node.
    pub fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    pub fn free_symbols(&self) -> Vec<Symbol> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Node::Symbol(s) = e.node() {
                if !out.contains(s) {
                    out.push(s.clone());
                }
            }
        });
        out.sort();
        out
    }

    /// Distinct grid functions applied anywhere in the tree, in first-seen order.
    pub fn functions(&self) -> Vec<GridFunction> {
        let mut out: Vec<GridFunction> = Vec::new();
        self.visit(&mut |e| {
            if let Node::Apply(a) = e.node() {
                if !out.iter().any(|f| f == &a.func) {
                    out.push(a.func.clone());
                }
            }
        });
        out
    }

    /// Distinct indexed accesses in first-seen order.
    pub fn accesses(&self) -> Vec<Access> {
        let mut out: Vec<Access> = Vec::new();
        self.visit(&mut |e| {
            if let Node::Indexed(a) = e.node() {
                if !out.contains(a) {
                    out.push(a.clone());
                }
            }
        });
        out
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(Expr::size).sum::<usize>()
    }

    fn kind_rank(&self) -> u8 {
        match self.node() {
            Node::Rational(_) | Node::Float(_) => 0,
            Node::Symbol(_) => 1,
            Node::Indexed(_) => 2,
            Node::Apply(_) => 3,
            Node::Pow(..) => 4,
            Node::Mul(_) => 5,
            Node::Add(_) => 6,
        }
    }
}

/// Splits a term into its numeric coefficient and the remaining factor.
pub(crate) fn split_coeff(e: &Expr) -> (Num, Expr) {
    if let Some(n) = e.as_num() {
        return (n, Expr::one());
    }
    if let Node::Mul(children) = e.node() {
        if let Some(n) = children[0].as_num() {
            let rest = &children[1..];
            let rest = if rest.len() == 1 {
                rest[0].clone()
            } else {
                Expr::raw(Node::Mul(rest.to_vec()))
            };
            return (n, rest);
        }
    }
    (Num::one(), e.clone())
}

fn with_coeff(c: Num, rest: Expr) -> Expr {
    if c.is_one() {
        return rest;
    }
    let mut factors = vec![c.into_expr()];
    match rest.node() {
        Node::Mul(children) => factors.extend(children.iter().cloned()),
        _ => factors.push(rest),
    }
    Expr::raw(Node::Mul(factors))
}

fn cmp_num(a: Num, b: Num) -> Ordering {
    match (a, b) {
        (Num::Rat(x), Num::Rat(y)) => x.cmp(&y),
        (Num::Flt(x), Num::Flt(y)) => x.total_cmp(&y),
        (Num::Rat(_), Num::Flt(_)) => a.to_f64().total_cmp(&b.to_f64()).then(Ordering::Less),
        (Num::Flt(_), Num::Rat(_)) => a.to_f64().total_cmp(&b.to_f64()).then(Ordering::Greater),
    }
}

/// Canonical ordering: terms compare by their non-numeric part first (kind
/// rank, then name, then offsets or children), and by numeric coefficient
/// last. This puts `x - h` before `x + h` and `f(x, y)` before `f(x - h, y)`.
pub fn canonical_cmp(a: &Expr, b: &Expr) -> Ordering {
    if let (Some(x), Some(y)) = (a.as_num(), b.as_num()) {
        return cmp_num(x, y);
    }
    let (ca, ra) = split_coeff(a);
    let (cb, rb) = split_coeff(b);
    structural_cmp(&ra, &rb).then_with(|| cmp_num(ca, cb))
}

fn cmp_lists(a: &[Expr], b: &[Expr]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = canonical_cmp(x, y);
        if o != Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

fn structural_cmp(a: &Expr, b: &Expr) -> Ordering {
    let rank = a.kind_rank().cmp(&b.kind_rank());
    if rank != Ordering::Equal {
        return rank;
    }
    match (a.node(), b.node()) {
        (Node::Rational(_) | Node::Float(_), _) => {
            cmp_num(a.as_num().unwrap(), b.as_num().unwrap())
        }
        (Node::Symbol(x), Node::Symbol(y)) => x.cmp(y),
        (Node::Indexed(x), Node::Indexed(y)) => x
            .name
            .cmp(&y.name)
            .then_with(|| x.time.cmp(&y.time))
            .then_with(|| x.offsets.cmp(&y.offsets)),
        (Node::Apply(x), Node::Apply(y)) => x
            .func
            .name()
            .cmp(y.func.name())
            .then_with(|| cmp_lists(&x.args, &y.args)),
        (Node::Pow(bx, ex), Node::Pow(by, ey)) => canonical_cmp(bx, by).then(ex.cmp(ey)),
        (Node::Mul(x), Node::Mul(y)) | (Node::Add(x), Node::Add(y)) => cmp_lists(x, y),
        _ => unreachable!("equal kind ranks"),
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        match (self.node(), other.node()) {
            (Node::Rational(a), Node::Rational(b)) => a == b,
            (Node::Float(a), Node::Float(b)) => a.to_bits() == b.to_bits(),
            (Node::Symbol(a), Node::Symbol(b)) => a == b,
            (Node::Indexed(a), Node::Indexed(b)) => a == b,
            (Node::Apply(a), Node::Apply(b)) => a.func == b.func && a.args == b.args,
            (Node::Add(a), Node::Add(b)) | (Node::Mul(a), Node::Mul(b)) => a == b,
            (Node::Pow(ba, ea), Node::Pow(bb, eb)) => ea == eb && ba == bb,
            _ => false,
        }
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.kind_rank().hash(state);
        match self.node() {
            Node::Rational(r) => {
                0u8.hash(state);
                r.hash(state)
            }
            Node::Float(f) => {
                1u8.hash(state);
                f.to_bits().hash(state)
            }
            Node::Symbol(s) => s.hash(state),
            Node::Indexed(a) => a.hash(state),
            Node::Apply(a) => {
                a.func.name().hash(state);
                a.args.hash(state);
            }
            Node::Add(c) | Node::Mul(c) => c.hash(state),
            Node::Pow(b, e) => {
                b.hash(state);
                e.hash(state);
            }
        }
    }
}

impl From<i64> for Expr {
    fn from(v: i64) -> Self {
        Expr::int(v)
    }
}

impl From<f64> for Expr {
    fn from(v: f64) -> Self {
        Expr::float(v)
    }
}

impl From<Rational> for Expr {
    fn from(v: Rational) -> Self {
        Expr::rational(v)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $body(self, rhs)
            }
        }
        impl ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $body(self.clone(), rhs.clone())
            }
        }
        impl ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $body(self, rhs.clone())
            }
        }
        impl ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $body(self.clone(), rhs)
            }
        }
        impl ops::$trait<i64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: i64) -> Expr {
                $body(self, Expr::int(rhs))
            }
        }
        impl ops::$trait<i64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: i64) -> Expr {
                $body(self.clone(), Expr::int(rhs))
            }
        }
        impl ops::$trait<Expr> for i64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $body(Expr::int(self), rhs)
            }
        }
        impl ops::$trait<&Expr> for i64 {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $body(Expr::int(self), rhs.clone())
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::add(vec![a, b]));
binop!(Sub, sub, |a: Expr, b: Expr| Expr::add(vec![a, b.neg()]));
binop!(Mul, mul, |a, b| Expr::mul(vec![a, b]));
binop!(Div, div, |a: Expr, b: Expr| Expr::mul(vec![a, b.recip()]));

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

/// Distributes products over sums and expands positive powers of sums.
/// Denominators (negative powers) are expanded inside but kept as powers.
pub fn expand(e: &Expr) -> Expr {
    match e.node() {
        Node::Add(children) => Expr::add(children.iter().map(expand).collect()),
        Node::Mul(children) => {
            let mut terms = vec![Expr::one()];
            for c in children {
                let c = expand(c);
                let parts = match c.node() {
                    Node::Add(t) => t.clone(),
                    _ => vec![c.clone()],
                };
                let mut next = Vec::with_capacity(terms.len() * parts.len());
                for t in &terms {
                    for p in &parts {
                        next.push(Expr::mul(vec![t.clone(), p.clone()]));
                    }
                }
                terms = next;
            }
            Expr::add(terms)
        }
        Node::Pow(base, k) if *k > 1 && matches!(base.node(), Node::Add(_)) => {
            expand(&Expr::raw(Node::Mul(vec![base.clone(); *k as usize])))
        }
        Node::Pow(base, k) => Expr::pow(expand(base), *k),
        Node::Apply(a) => Expr::apply(a.func.clone(), a.args.iter().map(expand).collect()),
        _ => e.clone(),
    }
}

/// True when `n` is a negative numeric coefficient term (used by printers).
pub(crate) fn is_negative_term(e: &Expr) -> bool {
    let (c, _) = split_coeff(e);
    match c {
        Num::Rat(r) => r.is_negative(),
        Num::Flt(f) => f < 0.0 || (f == 0.0 && f.is_sign_negative()),
    }
}
