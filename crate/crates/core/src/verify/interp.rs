//! Reference interpreter for the kernel IR.
//!
//! Walks the same stages as the generated C in plain loop order, with the
//! same arithmetic order (left folds, unrolled small powers), so a
//! single-threaded non-vectorized compiled kernel must agree bit for bit.

use std::collections::HashMap;

use crate::lowering::{InjectScale, KernelIR, Layout, Stage, UpdateStage};
use crate::runtime::{Kernel, RuntimeError, Workspace};
use crate::symbolic::{float_powi, rational_to_f64, Access, Expr, Node, Symbol, TimeIndex};

use super::VerifyError;

#[derive(Debug, Clone, Copy)]
enum Op {
    Const(f64),
    Load {
        grid: usize,
        slot: usize,
        off: isize,
    },
    Temp(usize),
    Add,
    Mul,
    Powi(i32),
}

#[derive(Debug, Clone)]
struct Program(Vec<Op>);

#[derive(Debug, Clone)]
struct Target {
    grid: usize,
    slot: usize,
    off: isize,
}

#[derive(Debug, Clone)]
struct CompiledStage {
    temps: Vec<Program>,
    assignments: Vec<(Target, Program)>,
}

/// Executes a [`KernelIR`] directly on a [`Workspace`].
#[derive(Debug, Clone)]
pub struct Interpreter {
    ir: KernelIR,
    grids: Vec<String>,
    /// Distinct time indices; `usize::MAX` slot for static grids.
    times: Vec<TimeIndex>,
    stages: Vec<Option<CompiledStage>>,
    strides: Vec<isize>,
    flops: usize,
}

const STATIC: usize = usize::MAX;

struct Compiler<'a> {
    grids: &'a [String],
    times: &'a mut Vec<TimeIndex>,
    strides: &'a [isize],
    temps: HashMap<Symbol, usize>,
}

impl Compiler<'_> {
    fn slot(&mut self, t: Option<TimeIndex>) -> usize {
        match t {
            None => STATIC,
            Some(t) => match self.times.iter().position(|&x| x == t) {
                Some(i) => i,
                None => {
                    self.times.push(t);
                    self.times.len() - 1
                }
            },
        }
    }

    fn locate(&mut self, a: &Access) -> Result<(usize, usize, isize), VerifyError> {
        let grid = self
            .grids
            .iter()
            .position(|g| g == a.name.name())
            .ok_or_else(|| VerifyError::UnknownGrid(a.name.to_string()))?;
        let off = a
            .offsets
            .iter()
            .zip(self.strides)
            .map(|(&o, &s)| o as isize * s)
            .sum();
        Ok((grid, self.slot(a.time), off))
    }

    fn emit(&mut self, e: &Expr, out: &mut Vec<Op>) -> Result<(), VerifyError> {
        match e.node() {
            Node::Rational(r) => out.push(Op::Const(rational_to_f64(r))),
            Node::Float(x) => out.push(Op::Const(*x)),
            Node::Symbol(s) => {
                let i = self
                    .temps
                    .get(s)
                    .ok_or_else(|| VerifyError::UnboundSymbol(s.to_string()))?;
                out.push(Op::Temp(*i));
            }
            Node::Indexed(a) => {
                let (grid, slot, off) = self.locate(a)?;
                out.push(Op::Load { grid, slot, off });
            }
            Node::Apply(a) => return Err(VerifyError::UnboundSymbol(a.func.name().to_string())),
            Node::Add(xs) | Node::Mul(xs) => {
                let op = if matches!(e.node(), Node::Add(_)) {
                    Op::Add
                } else {
                    Op::Mul
                };
                self.emit(&xs[0], out)?;
                for x in &xs[1..] {
                    self.emit(x, out)?;
                    out.push(op);
                }
            }
            Node::Pow(b, k) => {
                self.emit(b, out)?;
                out.push(Op::Powi(*k));
            }
        }
        Ok(())
    }

    fn stage(&mut self, u: &UpdateStage) -> Result<CompiledStage, VerifyError> {
        self.temps.clear();
        let mut temps = Vec::with_capacity(u.temps.len());
        for (sym, e) in &u.temps {
            let mut p = Vec::new();
            self.emit(e, &mut p)?;
            self.temps.insert(sym.clone(), temps.len());
            temps.push(Program(p));
        }
        let mut assignments = Vec::with_capacity(u.assignments.len());
        for a in &u.assignments {
            let (grid, slot, off) = self.locate(&a.lhs)?;
            let mut p = Vec::new();
            self.emit(&a.rhs, &mut p)?;
            assignments.push((Target { grid, slot, off }, Program(p)));
        }
        Ok(CompiledStage { temps, assignments })
    }
}

/// Linear strides of the spatial dimensions in storage.
fn spatial_strides(shape: &[usize], layout: Layout) -> Vec<isize> {
    let n = shape.len();
    let mut strides = vec![0isize; n];
    let mut acc = 1isize;
    let order: Vec<usize> = match layout {
        Layout::RowMajor => (0..n).rev().collect(),
        Layout::ColumnMajor => (0..n).collect(),
    };
    for d in order {
        strides[d] = acc;
        acc *= shape[d] as isize;
    }
    strides
}

impl Interpreter {
    pub fn new(ir: &KernelIR) -> Result<Self, VerifyError> {
        let grids: Vec<String> = ir.grids.iter().map(|g| g.name.clone()).collect();
        let strides = spatial_strides(&ir.shape, ir.layout);
        let mut times = Vec::new();
        let mut stages = Vec::with_capacity(ir.stages.len());
        let mut flops = 0;
        {
            let mut c = Compiler {
                grids: &grids,
                times: &mut times,
                strides: &strides,
                temps: HashMap::new(),
            };
            for st in &ir.stages {
                stages.push(match st {
                    Stage::Update(u) => {
                        flops +=
                            crate::optimizer::statements_op_count(&u.temps, &u.assignments).total();
                        Some(c.stage(u)?)
                    }
                    Stage::Inject(i) => {
                        c.slot(i.time);
                        None
                    }
                    Stage::Sample(s) => {
                        c.slot(s.time);
                        None
                    }
                });
            }
        }
        Ok(Interpreter {
            ir: ir.clone(),
            grids,
            times,
            stages,
            strides,
            flops,
        })
    }

    fn volume(&self) -> usize {
        self.ir.shape.iter().product()
    }

    fn slot_value(&self, t: i64, ti: TimeIndex) -> usize {
        let v = t + ti.offset;
        match ti.modulo {
            Some(m) => v.rem_euclid(m as i64) as usize,
            None => v as usize,
        }
    }

    fn run_update(&self, st: &CompiledStage, ptrs: &[*mut f64], slot_base: &[usize]) {
        let bounds = self.ir.bounds();
        let ndim = bounds.len();
        let mut temps = vec![0.0; st.temps.len()];
        let mut stack = Vec::with_capacity(64);
        let mut idx: Vec<usize> = bounds.iter().map(|b| b.0).collect();
        if bounds.iter().any(|(lo, hi)| lo >= hi) {
            return;
        }
        loop {
            let p: isize = idx
                .iter()
                .zip(&self.strides)
                .map(|(&i, &s)| i as isize * s)
                .sum();
            let load = |grid: usize, slot: usize, off: isize| -> f64 {
                let base = if slot == STATIC { 0 } else { slot_base[slot] };
                // SAFETY: offsets stay inside the halo (checked by validation),
                // and every slot index is below the grid's slot count.
                unsafe { *ptrs[grid].offset(base as isize + p + off) }
            };
            for (k, prog) in st.temps.iter().enumerate() {
                temps[k] = exec(prog, &mut stack, &temps, &load);
            }
            for (tgt, prog) in &st.assignments {
                let v = exec(prog, &mut stack, &temps, &load);
                let base = if tgt.slot == STATIC {
                    0
                } else {
                    slot_base[tgt.slot]
                };
                // SAFETY: as above; writes never alias reads of the same point.
                unsafe { *ptrs[tgt.grid].offset(base as isize + p + tgt.off) = v };
            }
            // Odometer over the interior, last dimension fastest.
            let mut d = ndim;
            loop {
                if d == 0 {
                    return;
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < bounds[d].1 {
                    break;
                }
                idx[d] = bounds[d].0;
            }
        }
    }

    fn linear(&self, coords: &[i64]) -> usize {
        coords
            .iter()
            .zip(&self.strides)
            .map(|(&i, &s)| i as isize * s)
            .sum::<isize>() as usize
    }

    fn step(&self, ws: &mut Workspace, t: i64) -> Result<(), RuntimeError> {
        let vol = self.volume();
        let slot_base: Vec<usize> = self
            .times
            .iter()
            .map(|&ti| self.slot_value(t, ti) * vol)
            .collect();
        let base_of = |ti: Option<TimeIndex>| ti.map_or(0, |ti| self.slot_value(t, ti) * vol);
        let ndim = self.ir.ndim;
        for (st, compiled) in self.ir.stages.iter().zip(&self.stages) {
            match st {
                Stage::Update(_) => {
                    let mut ptrs = Vec::with_capacity(self.grids.len());
                    for g in &self.grids {
                        ptrs.push(ws.grid_mut(g)?.as_mut_ptr());
                    }
                    self.run_update(compiled.as_ref().unwrap(), &ptrs, &slot_base);
                }
                Stage::Inject(i) => {
                    let sp = ws.sparse(&i.sparse)?;
                    let row = (t + i.row) as usize;
                    let npts = sp.npoints();
                    let nc = sp.ncorners;
                    let mut updates = Vec::with_capacity(npts * nc);
                    for p in 0..npts {
                        let d = sp.data.as_slice()[row * npts + p];
                        for c in 0..nc {
                            let k = p * nc + c;
                            let lin = self.linear(&sp.indices[k * ndim..(k + 1) * ndim]);
                            let value = sp.weights[k] * d;
                            let value = match &i.scale {
                                InjectScale::One => value,
                                InjectScale::Constant(s) => value * s,
                                InjectScale::OverGrid { numerator, grid } => {
                                    value * (numerator / ws.grid(grid)?.as_slice()[lin])
                                }
                            };
                            updates.push((lin, value));
                        }
                    }
                    let base = base_of(i.time);
                    let target = ws.grid_mut(&i.grid)?.as_mut_slice();
                    for (lin, v) in updates {
                        target[base + lin] += v;
                    }
                }
                Stage::Sample(s) => {
                    let base = base_of(s.time);
                    let src = ws.grid(&s.grid)?.as_slice();
                    let sp = ws.sparse(&s.sparse)?;
                    let npts = sp.npoints();
                    let nc = sp.ncorners;
                    let mut out = Vec::with_capacity(npts);
                    for p in 0..npts {
                        let mut acc = 0.0;
                        for c in 0..nc {
                            let k = p * nc + c;
                            acc += sp.weights[k]
                                * src[base + self.linear(&sp.indices[k * ndim..(k + 1) * ndim])];
                        }
                        out.push(acc);
                    }
                    let row = (t + s.row) as usize;
                    let data = ws.sparse_mut(&s.sparse)?.data.as_mut_slice();
                    data[row * npts..(row + 1) * npts].copy_from_slice(&out);
                }
            }
        }
        Ok(())
    }
}

fn exec(
    prog: &Program,
    stack: &mut Vec<f64>,
    temps: &[f64],
    load: &dyn Fn(usize, usize, isize) -> f64,
) -> f64 {
    stack.clear();
    for op in &prog.0 {
        match *op {
            Op::Const(c) => stack.push(c),
            Op::Load { grid, slot, off } => stack.push(load(grid, slot, off)),
            Op::Temp(i) => stack.push(temps[i]),
            Op::Add => {
                let b = stack.pop().unwrap();
                *stack.last_mut().unwrap() += b;
            }
            Op::Mul => {
                let b = stack.pop().unwrap();
                *stack.last_mut().unwrap() *= b;
            }
            Op::Powi(k) => {
                let b = stack.pop().unwrap();
                stack.push(float_powi(b, k));
            }
        }
    }
    stack[0]
}

impl Kernel for Interpreter {
    fn ir(&self) -> &KernelIR {
        &self.ir
    }

    fn flops_per_point(&self) -> usize {
        self.flops
    }

    /// Block sizes are accepted and ignored.
    fn execute(&self, ws: &mut Workspace, _blocks: &[usize]) -> Result<(), RuntimeError> {
        ws.check(&self.ir)?;
        for g in self.ir.grids.iter().filter(|g| g.zero_initial) {
            ws.grid_mut(&g.name)?.fill(0.0);
        }
        match self.ir.time {
            Some(tl) => {
                for t in tl.iter() {
                    self.step(ws, t)?;
                }
            }
            None => self.step(ws, 0)?,
        }
        Ok(())
    }
}

/// Runs `ir` on `ws` with the reference interpreter.
pub fn reference_interpret(ir: &KernelIR, ws: &mut Workspace) -> Result<(), VerifyError> {
    Interpreter::new(ir)?.execute(ws, &[])?;
    Ok(())
}
