//! Kernel intermediate representation: lowered update statements plus the
//! loop-nest, storage and sparse-point metadata needed by code generation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::index::{index_lower, Spacing};
use super::LoweringError;
use crate::symbolic::{Access, Equation, Expr, GridFunction, Node, Symbol, TimeIndex};

/// Storage order of grid buffers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Layout {
    #[default]
    RowMajor,
    /// Innermost loop dimension is strided; only accepted without SIMD.
    ColumnMajor,
}

/// Time slots of a time-varying grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeStorage {
    /// Whole history, `nt` slots.
    Full(usize),
    /// `time_order + 1` slots addressed modulo their count.
    Rolling(usize),
}

impl TimeStorage {
    pub fn slots(self) -> usize {
        match self {
            TimeStorage::Full(n) | TimeStorage::Rolling(n) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridArg {
    pub name: String,
    pub time: Option<TimeStorage>,
    pub written: bool,
    /// Zeroed at kernel entry (wavefields that start from rest).
    pub zero_initial: bool,
}

/// Off-grid points with `nt` rows of data and `ncorners` interpolation
/// corners per point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseArg {
    pub name: String,
    pub npoints: usize,
    pub ncorners: usize,
    pub rows: usize,
}

/// Time loop over `t` in `[lo, nt)`, ascending or descending.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeLoop {
    pub nt: usize,
    pub lo: usize,
    pub backward: bool,
}

impl TimeLoop {
    pub fn steps(&self) -> usize {
        self.nt.saturating_sub(self.lo)
    }

    /// Loop counter values in execution order.
    pub fn iter(&self) -> Box<dyn Iterator<Item = i64>> {
        let (lo, hi) = (self.lo as i64, self.nt as i64);
        if self.backward {
            Box::new((lo..hi).rev())
        } else {
            Box::new(lo..hi)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub lhs: Access,
    pub rhs: Expr,
}

/// Point-wise updates over the interior. Temporaries are evaluated in order
/// before the assignments, at each grid point.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UpdateStage {
    pub temps: Vec<(Symbol, Expr)>,
    pub assignments: Vec<Assignment>,
}

/// Extra factor applied to injected values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InjectScale {
    One,
    Constant(f64),
    /// `numerator / grid[node]`, read at the receiving node.
    OverGrid {
        numerator: f64,
        grid: String,
    },
}

/// `grid[slot][corner] += weight * data[t + row][p] * scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectStage {
    pub grid: String,
    pub time: Option<TimeIndex>,
    pub sparse: String,
    pub row: i64,
    pub scale: InjectScale,
}

/// `data[t + row][p] = sum_c weight * grid[slot][corner]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStage {
    pub grid: String,
    pub time: Option<TimeIndex>,
    pub sparse: String,
    pub row: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stage {
    Update(UpdateStage),
    Inject(InjectStage),
    Sample(SampleStage),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelIR {
    pub name: String,
    pub ndim: usize,
    /// Allocated spatial shape, halo included.
    pub shape: Vec<usize>,
    pub halo: usize,
    pub layout: Layout,
    pub time: Option<TimeLoop>,
    /// Written grids first, then read-only grids by name.
    pub grids: Vec<GridArg>,
    pub sparse: Vec<SparseArg>,
    pub stages: Vec<Stage>,
}

impl KernelIR {
    /// Interior loop bounds `[lo, hi)` per spatial dimension.
    pub fn bounds(&self) -> Vec<(usize, usize)> {
        self.shape
            .iter()
            .map(|&n| (self.halo, n - self.halo))
            .collect()
    }

    pub fn interior_points(&self) -> usize {
        self.bounds().iter().map(|(lo, hi)| hi - lo).product()
    }

    pub fn timesteps(&self) -> usize {
        self.time.map_or(1, |t| t.steps())
    }

    pub fn grid(&self, name: &str) -> Option<&GridArg> {
        self.grids.iter().find(|g| g.name == name)
    }

    pub fn sparse_arg(&self, name: &str) -> Option<&SparseArg> {
        self.sparse.iter().find(|s| s.name == name)
    }

    /// Full buffer shape of a grid: time slots first, then space.
    pub fn grid_shape(&self, name: &str) -> Option<Vec<usize>> {
        let g = self.grid(name)?;
        let mut s = Vec::with_capacity(self.ndim + 1);
        if let Some(t) = g.time {
            s.push(t.slots());
        }
        s.extend_from_slice(&self.shape);
        Some(s)
    }

    pub fn update_stages(&self) -> impl Iterator<Item = &UpdateStage> {
        self.stages.iter().filter_map(|s| match s {
            Stage::Update(u) => Some(u),
            _ => None,
        })
    }

    pub fn update_stages_mut(&mut self) -> impl Iterator<Item = &mut UpdateStage> {
        self.stages.iter_mut().filter_map(|s| match s {
            Stage::Update(u) => Some(u),
            _ => None,
        })
    }

    /// Same kernel with the time loop cut to `nt` steps (sparse rows kept).
    pub fn truncated(&self, nt: usize) -> KernelIR {
        let mut ir = self.clone();
        if let Some(t) = ir.time.as_mut() {
            t.nt = nt.max(t.lo).min(t.nt);
        }
        ir
    }
}

/// Description of an off-grid point set for the builder.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSpec {
    pub name: String,
    pub npoints: usize,
}

enum PendingStage {
    Update(Vec<Equation>),
    Inject {
        target: Expr,
        sparse: SparseSpec,
        row: i64,
        scale: InjectScale,
    },
    Sample {
        source: Expr,
        sparse: SparseSpec,
        row: i64,
    },
}

/// Assembles a [`KernelIR`] from symbolic stages.
///
/// Time offsets are normalized so that the first update writes slot `t`:
/// `u(t + s) = ...` becomes a forward loop writing `u[t]` from `u[t - 1]`
/// and `u[t - 2]`; `v(t - s) = ...` becomes a backward loop. Sparse data
/// rows are given in the symbolic time frame and shifted the same way.
pub struct KernelBuilder {
    name: String,
    spacing: Spacing,
    nt: Option<usize>,
    layout: Layout,
    zero_initial: Vec<String>,
    stages: Vec<PendingStage>,
}

impl KernelBuilder {
    pub fn new(name: &str) -> Self {
        KernelBuilder {
            name: name.to_string(),
            spacing: Spacing::default(),
            nt: None,
            layout: Layout::RowMajor,
            zero_initial: Vec::new(),
            stages: Vec::new(),
        }
    }

    pub fn spacing(mut self, spacing: Spacing) -> Self {
        self.spacing = spacing;
        self
    }

    pub fn nt(mut self, nt: usize) -> Self {
        self.nt = Some(nt);
        self
    }

    pub fn layout(mut self, layout: Layout) -> Self {
        self.layout = layout;
        self
    }

    pub fn zero_initial(mut self, f: &GridFunction) -> Self {
        self.zero_initial.push(f.name().to_string());
        self
    }

    pub fn update(mut self, eqs: Vec<Equation>) -> Self {
        self.stages.push(PendingStage::Update(eqs));
        self
    }

    pub fn inject(
        mut self,
        target: Expr,
        sparse: SparseSpec,
        row: i64,
        scale: InjectScale,
    ) -> Self {
        self.stages.push(PendingStage::Inject {
            target,
            sparse,
            row,
            scale,
        });
        self
    }

    pub fn sample(mut self, source: Expr, sparse: SparseSpec, row: i64) -> Self {
        self.stages.push(PendingStage::Sample {
            source,
            sparse,
            row,
        });
        self
    }

    pub fn build(self) -> Result<KernelIR, LoweringError> {
        let mut funcs: BTreeMap<String, GridFunction> = BTreeMap::new();
        let mut register = |e: &Expr| -> Result<(), LoweringError> {
            for f in e.functions() {
                match funcs.get(f.name()) {
                    Some(g) if g.shape() != f.shape() || g.time() != f.time() => {
                        return Err(LoweringError::ConflictingShape(f.name().to_string()))
                    }
                    Some(_) => {}
                    None => {
                        funcs.insert(f.name().to_string(), f);
                    }
                }
            }
            Ok(())
        };
        for st in &self.stages {
            match st {
                PendingStage::Update(eqs) => {
                    for eq in eqs {
                        register(&eq.lhs)?;
                        register(&eq.rhs)?;
                    }
                }
                PendingStage::Inject { target: e, .. } | PendingStage::Sample { source: e, .. } => {
                    register(e)?
                }
            }
        }
        let first = funcs.values().next().ok_or(LoweringError::EmptyKernel)?;
        let shape = first.shape().to_vec();
        if funcs.values().any(|f| f.shape() != shape.as_slice()) {
            let bad = funcs
                .values()
                .find(|f| f.shape() != shape.as_slice())
                .unwrap();
            return Err(LoweringError::ConflictingShape(bad.name().to_string()));
        }
        let ndim = shape.len();
        let halo = funcs
            .values()
            .map(|f| f.space_order() / 2)
            .max()
            .unwrap_or(1);
        if shape.iter().any(|&n| n <= 2 * halo) {
            return Err(LoweringError::NoInterior {
                shape: shape.clone(),
                halo,
            });
        }

        // Lower every stage.
        let mut stages = Vec::with_capacity(self.stages.len());
        let mut sparse: Vec<SparseArg> = Vec::new();
        for st in self.stages {
            stages.push(match st {
                PendingStage::Update(eqs) => {
                    let mut assignments = Vec::with_capacity(eqs.len());
                    for eq in eqs {
                        let lhs = index_lower(&eq.lhs, &self.spacing)?;
                        let lhs = match lhs.as_access() {
                            Some(a) if a.offsets.iter().all(|&o| o == 0) => a.clone(),
                            _ => return Err(LoweringError::NonIndexedLhs(eq.lhs.to_string())),
                        };
                        let rhs = index_lower(&eq.rhs, &self.spacing)?;
                        if let Some(sym) = rhs.free_symbols().into_iter().next() {
                            return Err(LoweringError::UnboundSymbol(sym.to_string()));
                        }
                        assignments.push(Assignment { lhs, rhs });
                    }
                    Stage::Update(UpdateStage {
                        temps: Vec::new(),
                        assignments,
                    })
                }
                PendingStage::Inject {
                    target,
                    sparse: spec,
                    row,
                    scale,
                } => {
                    let acc = lower_point_access(&target, &self.spacing)?;
                    if let InjectScale::OverGrid { grid, .. } = &scale {
                        let f = funcs
                            .get(grid)
                            .ok_or_else(|| LoweringError::UnknownGrid(grid.clone()))?;
                        if f.is_time_varying() {
                            return Err(LoweringError::UnknownGrid(grid.clone()));
                        }
                    }
                    add_sparse(&mut sparse, &spec, ndim)?;
                    Stage::Inject(InjectStage {
                        grid: acc.name.to_string(),
                        time: acc.time,
                        sparse: spec.name,
                        row,
                        scale,
                    })
                }
                PendingStage::Sample {
                    source,
                    sparse: spec,
                    row,
                } => {
                    let acc = lower_point_access(&source, &self.spacing)?;
                    add_sparse(&mut sparse, &spec, ndim)?;
                    Stage::Sample(SampleStage {
                        grid: acc.name.to_string(),
                        time: acc.time,
                        sparse: spec.name,
                        row,
                    })
                }
            });
        }
        if stages.is_empty() {
            return Err(LoweringError::EmptyKernel);
        }

        // Time normalization from the first written time index.
        let anchor = stages.iter().find_map(|s| match s {
            Stage::Update(u) => u.assignments.iter().find_map(|a| a.lhs.time),
            _ => None,
        });
        let uses_time = funcs.values().any(|f| f.is_time_varying());
        let time = if uses_time {
            let nt = self.nt.ok_or(LoweringError::MissingNt)?;
            let shift = -anchor.map_or(0, |t| t.offset);
            for st in stages.iter_mut() {
                shift_stage(st, shift);
            }
            let lo = funcs
                .values()
                .filter_map(|f| f.time().map(|t| t.time_order))
                .max()
                .unwrap_or(0);
            if nt <= lo {
                return Err(LoweringError::MissingNt);
            }
            Some(TimeLoop {
                nt,
                lo,
                backward: shift > 0,
            })
        } else {
            if stages.iter().any(|s| !matches!(s, Stage::Update(_))) {
                return Err(LoweringError::MissingNt);
            }
            None
        };
        if let Some(tl) = time {
            for sp in sparse.iter_mut() {
                sp.rows = tl.nt;
            }
        }

        // Grid arguments: written grids first, then read-only ones by name.
        let written: Vec<String> = {
            let mut w = Vec::new();
            for st in &stages {
                let names: Vec<String> = match st {
                    Stage::Update(u) => u
                        .assignments
                        .iter()
                        .map(|a| a.lhs.name.to_string())
                        .collect(),
                    Stage::Inject(i) => vec![i.grid.clone()],
                    Stage::Sample(_) => vec![],
                };
                for n in names {
                    if !w.contains(&n) {
                        w.push(n);
                    }
                }
            }
            w
        };
        let mut grids = Vec::with_capacity(funcs.len());
        let mut order: Vec<&String> = written.iter().collect();
        order.extend(funcs.keys().filter(|k| !written.contains(k)));
        for name in order {
            let f = &funcs[name];
            let storage = f.time().map(|t| {
                if t.save {
                    TimeStorage::Full(t.nt)
                } else {
                    TimeStorage::Rolling(t.time_order + 1)
                }
            });
            grids.push(GridArg {
                name: name.clone(),
                time: storage,
                written: written.contains(name),
                zero_initial: self.zero_initial.contains(name),
            });
        }
        for z in &self.zero_initial {
            if !funcs.contains_key(z) {
                return Err(LoweringError::UnknownGrid(z.clone()));
            }
        }

        let ir = KernelIR {
            name: self.name,
            ndim,
            shape,
            halo,
            layout: self.layout,
            time,
            grids,
            sparse,
            stages,
        };
        validate(&ir)?;
        Ok(ir)
    }
}

/// Builds the IR for a list of update equations in one stage.
pub fn build_kernel_ir(
    name: &str,
    equations: Vec<Equation>,
    nt: Option<usize>,
    spacing: Spacing,
) -> Result<KernelIR, LoweringError> {
    let mut b = KernelBuilder::new(name).spacing(spacing).update(equations);
    if let Some(nt) = nt {
        b = b.nt(nt);
    }
    b.build()
}

fn lower_point_access(e: &Expr, spacing: &Spacing) -> Result<Access, LoweringError> {
    let l = index_lower(e, spacing)?;
    match l.as_access() {
        Some(a) if a.offsets.iter().all(|&o| o == 0) => Ok(a.clone()),
        _ => Err(LoweringError::NonIndexedLhs(e.to_string())),
    }
}

fn add_sparse(
    list: &mut Vec<SparseArg>,
    spec: &SparseSpec,
    ndim: usize,
) -> Result<(), LoweringError> {
    let ncorners = 1usize << ndim;
    match list.iter().find(|s| s.name == spec.name) {
        Some(s) if s.npoints != spec.npoints => {
            Err(LoweringError::ConflictingShape(spec.name.clone()))
        }
        Some(_) => Ok(()),
        None => {
            if spec.npoints == 0 {
                return Err(LoweringError::ConflictingShape(spec.name.clone()));
            }
            list.push(SparseArg {
                name: spec.name.clone(),
                npoints: spec.npoints,
                ncorners,
                rows: 1,
            });
            Ok(())
        }
    }
}

fn shift_expr(e: &Expr, by: i64) -> Expr {
    e.transform(&mut |n| match n.node() {
        Node::Indexed(a) if a.time.is_some() => {
            let mut a = a.clone();
            a.time = a.time.map(|t| t.shifted(by));
            Some(Expr::from_access(a))
        }
        _ => None,
    })
}

fn shift_stage(st: &mut Stage, by: i64) {
    if by == 0 {
        return;
    }
    match st {
        Stage::Update(u) => {
            for a in u.assignments.iter_mut() {
                a.lhs.time = a.lhs.time.map(|t| t.shifted(by));
                a.rhs = shift_expr(&a.rhs, by);
            }
        }
        Stage::Inject(i) => {
            i.time = i.time.map(|t| t.shifted(by));
            i.row += by;
        }
        Stage::Sample(s) => {
            s.time = s.time.map(|t| t.shifted(by));
            s.row += by;
        }
    }
}

/// Every time index reachable by the loop must be addressable, and no stage
/// may read a slot it writes at a neighbouring point.
pub fn validate(ir: &KernelIR) -> Result<(), LoweringError> {
    let check_time = |grid: &str, t: Option<TimeIndex>| -> Result<(), LoweringError> {
        let g = ir
            .grid(grid)
            .ok_or_else(|| LoweringError::UnknownGrid(grid.to_string()))?;
        match (g.time, t, ir.time) {
            (None, None, _) => Ok(()),
            (Some(TimeStorage::Full(n)), Some(ti), Some(tl)) => {
                let first = tl.lo as i64 + ti.offset;
                let last = tl.nt as i64 - 1 + ti.offset;
                if ti.modulo.is_some() || first < 0 || last >= n as i64 {
                    Err(LoweringError::TimeOutOfRange {
                        grid: grid.to_string(),
                        offset: ti.offset,
                    })
                } else {
                    Ok(())
                }
            }
            (Some(TimeStorage::Rolling(k)), Some(ti), Some(tl)) => {
                if ti.modulo != Some(k as u32) || tl.lo as i64 + ti.offset < 0 {
                    Err(LoweringError::TimeOutOfRange {
                        grid: grid.to_string(),
                        offset: ti.offset,
                    })
                } else {
                    Ok(())
                }
            }
            _ => Err(LoweringError::TimeOutOfRange {
                grid: grid.to_string(),
                offset: 0,
            }),
        }
    };
    let check_row = |sparse: &str, row: i64| -> Result<(), LoweringError> {
        let sp = ir
            .sparse_arg(sparse)
            .ok_or_else(|| LoweringError::UnknownGrid(sparse.to_string()))?;
        let tl = ir.time.ok_or(LoweringError::MissingNt)?;
        let first = tl.lo as i64 + row;
        let last = tl.nt as i64 - 1 + row;
        if first < 0 || last >= sp.rows as i64 {
            Err(LoweringError::TimeOutOfRange {
                grid: sparse.to_string(),
                offset: row,
            })
        } else {
            Ok(())
        }
    };

    for st in &ir.stages {
        match st {
            Stage::Update(u) => {
                let mut writes: Vec<(Symbol, Option<TimeIndex>)> = Vec::new();
                for a in &u.assignments {
                    check_time(a.lhs.name.name(), a.lhs.time)?;
                    writes.push((a.lhs.name.clone(), a.lhs.time));
                }
                let mut reads = Vec::new();
                for (_, e) in &u.temps {
                    reads.extend(e.accesses());
                }
                for a in &u.assignments {
                    reads.extend(a.rhs.accesses());
                }
                for r in &reads {
                    check_time(r.name.name(), r.time)?;
                    let span = ir.halo as i64;
                    if r.offsets.len() != ir.ndim || r.offsets.iter().any(|o| o.abs() > span) {
                        return Err(LoweringError::HaloExceeded(r.name.to_string()));
                    }
                    let clash = writes
                        .iter()
                        .any(|(n, t)| n == &r.name && same_slot(*t, r.time));
                    if clash && r.offsets.iter().any(|&o| o != 0) {
                        return Err(LoweringError::Race(r.name.to_string()));
                    }
                }
            }
            Stage::Inject(i) => {
                check_time(&i.grid, i.time)?;
                check_row(&i.sparse, i.row)?;
            }
            Stage::Sample(s) => {
                check_time(&s.grid, s.time)?;
                check_row(&s.sparse, s.row)?;
            }
        }
    }
    Ok(())
}

fn same_slot(a: Option<TimeIndex>, b: Option<TimeIndex>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => match (x.modulo, y.modulo) {
            (Some(m), Some(n)) if m == n => (x.offset - y.offset).rem_euclid(m as i64) == 0,
            _ => x.offset == y.offset,
        },
        _ => false,
    }
}
