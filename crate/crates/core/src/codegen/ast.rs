//! A small C statement tree. The emitter builds it, tests inspect it, and
//! [`TranslationUnit::render`] turns it into text.

use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopRole {
    Time,
    BlockOuter,
    BlockInner,
    Main,
    Remainder,
    Full,
    Sparse,
    Init,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForLoop {
    pub pragmas: Vec<String>,
    pub ty: String,
    pub var: String,
    pub init: String,
    pub cond: String,
    pub step: String,
    pub role: LoopRole,
    pub body: Vec<Stmt>,
}

impl ForLoop {
    pub fn header(&self) -> String {
        format!(
            "for ({} {} = {}; {}; {})",
            self.ty, self.var, self.init, self.cond, self.step
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    /// A complete line: declaration, statement or preprocessor directive.
    Line(String),
    Pragma(String),
    Block(Vec<Stmt>),
    For(ForLoop),
    If {
        cond: String,
        then: Vec<Stmt>,
    },
}

impl Stmt {
    /// Depth-first visit of every statement.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Stmt)) {
        f(self);
        match self {
            Stmt::Block(b) | Stmt::If { then: b, .. } => b.iter().for_each(|s| s.walk(f)),
            Stmt::For(l) => l.body.iter().for_each(|s| s.walk(f)),
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Function {
    pub ret: String,
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
}

impl Function {
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Stmt)) {
        self.body.iter().for_each(|s| s.walk(f));
    }

    /// All loops in source order.
    pub fn loops(&self) -> Vec<&ForLoop> {
        let mut out = Vec::new();
        self.walk(&mut |s| {
            if let Stmt::For(l) = s {
                out.push(l);
            }
        });
        out
    }

    /// Outermost loops of the spatial nests (no enclosing spatial loop).
    pub fn nest_roots(&self) -> Vec<&ForLoop> {
        fn go<'a>(stmts: &'a [Stmt], out: &mut Vec<&'a ForLoop>) {
            for s in stmts {
                match s {
                    Stmt::For(l) if matches!(l.role, LoopRole::Time) => go(&l.body, out),
                    Stmt::For(l) if matches!(l.role, LoopRole::Sparse | LoopRole::Init) => {}
                    Stmt::For(l) => out.push(l),
                    Stmt::Block(b) | Stmt::If { then: b, .. } => go(b, out),
                    _ => {}
                }
            }
        }
        let mut out = Vec::new();
        go(&self.body, &mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslationUnit {
    pub preamble: Vec<String>,
    pub functions: Vec<Function>,
}

impl TranslationUnit {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for l in &self.preamble {
            out.push_str(l);
            out.push('\n');
        }
        for f in &self.functions {
            out.push('\n');
            let _ = writeln!(out, "{} {}({})", f.ret, f.name, f.params.join(", "));
            out.push_str("{\n");
            render_stmts(&f.body, 1, &mut out);
            out.push_str("}\n");
        }
        out
    }
}

fn indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn render_stmts(stmts: &[Stmt], level: usize, out: &mut String) {
    for s in stmts {
        match s {
            Stmt::Line(l) if l.starts_with('#') => {
                out.push_str(l);
                out.push('\n');
            }
            Stmt::Line(l) => {
                indent(level, out);
                out.push_str(l);
                out.push('\n');
            }
            Stmt::Pragma(p) => {
                indent(level, out);
                out.push_str(p);
                out.push('\n');
            }
            Stmt::Block(b) => {
                indent(level, out);
                out.push_str("{\n");
                render_stmts(b, level + 1, out);
                indent(level, out);
                out.push_str("}\n");
            }
            Stmt::For(l) => {
                for p in &l.pragmas {
                    indent(level, out);
                    out.push_str(p);
                    out.push('\n');
                }
                indent(level, out);
                out.push_str(&l.header());
                out.push('\n');
                indent(level, out);
                out.push_str("{\n");
                render_stmts(&l.body, level + 1, out);
                indent(level, out);
                out.push_str("}\n");
            }
            Stmt::If { cond, then } => {
                indent(level, out);
                let _ = writeln!(out, "if ({cond})");
                indent(level, out);
                out.push_str("{\n");
                render_stmts(then, level + 1, out);
                indent(level, out);
                out.push_str("}\n");
            }
        }
    }
}
