use std::collections::HashMap;

use super::expr::{Expr, Node, Symbol};

/// Replaces symbols by expressions, re-canonicalizing on the way up.
pub fn substitute(expr: &Expr, bindings: &HashMap<Symbol, Expr>) -> Expr {
    if bindings.is_empty() {
        return expr.clone();
    }
    expr.transform(&mut |e| match e.node() {
        Node::Symbol(s) => bindings.get(s).cloned(),
        _ => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitutes_and_folds() {
        let x = Expr::symbol("x");
        let h = Expr::symbol("h");
        let e = (&x + &h) * 2 - &x;
        let mut b = HashMap::new();
        b.insert(Symbol::new("h"), Expr::ratio(1, 2));
        assert_eq!(substitute(&e, &b), crate::symbolic::expand(&(&x + 1)));
    }
}
