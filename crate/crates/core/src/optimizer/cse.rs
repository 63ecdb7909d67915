//! Two-pass common sub-expression elimination over lowered statements.

use std::collections::HashMap;

use super::count::{op_count, OpCount};
use crate::lowering::{Assignment, KernelIR, UpdateStage};
use crate::symbolic::{Expr, Node, Symbol};

#[derive(Debug, Clone, PartialEq)]
pub struct CseResult {
    /// Topologically ordered temporaries.
    pub temps: Vec<(Symbol, Expr)>,
    pub assignments: Vec<Assignment>,
    pub before: OpCount,
    pub after: OpCount,
}

impl CseResult {
    pub fn op_count(&self) -> OpCount {
        self.after
    }
}

/// Statement-level op count of temporaries plus right-hand sides.
pub fn statements_op_count(temps: &[(Symbol, Expr)], assignments: &[Assignment]) -> OpCount {
    let mut c = OpCount::default();
    for (_, e) in temps {
        c += op_count(e);
    }
    for a in assignments {
        c += op_count(&a.rhs);
    }
    c
}

/// Hoists every non-leaf subexpression that occurs at least twice, and every
/// indexed read that occurs at least twice, into `temp<N>` temporaries
/// numbered from `first_temp`.
///
/// Pass one counts occurrences, not descending into a subtree already seen
/// (its children were counted on first sight). Pass two rebuilds each
/// statement bottom-up, replacing hoisted subtrees by their temporary. The
/// rebuilt nodes keep the input child order, so inlining the temporaries
/// reproduces the input exactly.
pub fn cse(assignments: &[Assignment], first_temp: usize) -> CseResult {
    let mut counts: HashMap<Expr, usize> = HashMap::new();
    for a in assignments {
        count(&a.rhs, &mut counts);
    }

    let mut state = Rebuild {
        counts,
        names: HashMap::new(),
        temps: Vec::new(),
        next: first_temp,
    };
    let rewritten: Vec<Assignment> = assignments
        .iter()
        .map(|a| Assignment {
            lhs: a.lhs.clone(),
            rhs: state.rebuild(&a.rhs),
        })
        .collect();

    let before = statements_op_count(&[], assignments);
    let after = statements_op_count(&state.temps, &rewritten);
    CseResult {
        temps: state.temps,
        assignments: rewritten,
        before,
        after,
    }
}

fn hoistable(e: &Expr) -> bool {
    matches!(
        e.node(),
        Node::Add(_) | Node::Mul(_) | Node::Pow(..) | Node::Indexed(_)
    )
}

fn count(e: &Expr, counts: &mut HashMap<Expr, usize>) {
    if !hoistable(e) {
        return;
    }
    let n = counts.entry(e.clone()).or_insert(0);
    *n += 1;
    if *n == 1 {
        for c in e.children() {
            count(&c, counts);
        }
    }
}

struct Rebuild {
    counts: HashMap<Expr, usize>,
    names: HashMap<Expr, Symbol>,
    temps: Vec<(Symbol, Expr)>,
    next: usize,
}

impl Rebuild {
    fn rebuild(&mut self, e: &Expr) -> Expr {
        if let Some(s) = self.names.get(e) {
            return Expr::from_symbol(s.clone());
        }
        let rebuilt = match e.node() {
            Node::Add(c) => Expr::raw(Node::Add(c.iter().map(|x| self.rebuild(x)).collect())),
            Node::Mul(c) => Expr::raw(Node::Mul(c.iter().map(|x| self.rebuild(x)).collect())),
            Node::Pow(b, k) => Expr::raw(Node::Pow(self.rebuild(b), *k)),
            _ => e.clone(),
        };
        if self.counts.get(e).copied().unwrap_or(0) >= 2 {
            let name = Symbol::new(&format!("temp{}", self.next));
            self.next += 1;
            self.names.insert(e.clone(), name.clone());
            self.temps.push((name.clone(), rebuilt));
            Expr::from_symbol(name)
        } else {
            rebuilt
        }
    }
}

/// Substitutes temporaries back, in order, without re-canonicalizing.
pub fn inline_temps(temps: &[(Symbol, Expr)], e: &Expr) -> Expr {
    let mut defs: HashMap<Symbol, Expr> = HashMap::new();
    for (s, d) in temps {
        let expanded = raw_replace(d, &defs);
        defs.insert(s.clone(), expanded);
    }
    raw_replace(e, &defs)
}

fn raw_replace(e: &Expr, defs: &HashMap<Symbol, Expr>) -> Expr {
    match e.node() {
        Node::Symbol(s) => defs.get(s).cloned().unwrap_or_else(|| e.clone()),
        Node::Add(c) => Expr::raw(Node::Add(c.iter().map(|x| raw_replace(x, defs)).collect())),
        Node::Mul(c) => Expr::raw(Node::Mul(c.iter().map(|x| raw_replace(x, defs)).collect())),
        Node::Pow(b, k) => Expr::raw(Node::Pow(raw_replace(b, defs), *k)),
        _ => e.clone(),
    }
}

/// Runs CSE on every update stage of `ir`, numbering temporaries across
/// the whole kernel. Returns the op counts before and after.
pub fn optimize(ir: &mut KernelIR) -> (OpCount, OpCount) {
    let mut next = 0;
    let mut before = OpCount::default();
    let mut after = OpCount::default();
    for stage in ir.update_stages_mut() {
        let mut inputs = stage.assignments.clone();
        if !stage.temps.is_empty() {
            // Already optimized: inline and redo.
            for a in inputs.iter_mut() {
                a.rhs = inline_temps(&stage.temps, &a.rhs);
            }
        }
        let r = cse(&inputs, next);
        next += r.temps.len();
        before += r.before;
        after += r.after;
        *stage = UpdateStage {
            temps: r.temps,
            assignments: r.assignments,
        };
    }
    (before, after)
}
