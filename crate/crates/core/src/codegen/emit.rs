use std::collections::{BTreeMap, BTreeSet};

use super::ast::{ForLoop, Function, LoopRole, Stmt, TranslationUnit};
use super::cexpr::{
    float_literal, offset_index, render, render_access, render_indexed, AccessNamer,
};
use super::plan::{Blocking, CodegenPlan};
use super::ranges::{block_nests, DimRole};
use super::{ArgKind, CodegenError, GeneratedSource, Signature};
use crate::lowering::{
    InjectScale, InjectStage, KernelIR, Layout, SampleStage, Stage, UpdateStage,
};
use crate::optimizer::statements_op_count;
use crate::symbolic::TimeIndex;

/// Number of blocked spatial dimensions: the two outermost.
pub fn blocked_dims(ndim: usize) -> usize {
    ndim.min(2)
}

struct Namer {
    slots: BTreeMap<TimeIndex, String>,
    layout: Layout,
}

impl AccessNamer for Namer {
    fn time(&self, t: TimeIndex) -> String {
        match t.modulo {
            Some(_) => self.slots[&t].clone(),
            None => offset_index("t", t.offset),
        }
    }

    fn layout(&self) -> Layout {
        self.layout
    }
}

fn slot_name(t: TimeIndex, multi: bool) -> String {
    let base = match t.offset {
        0 => "t0".to_string(),
        o if o > 0 => format!("tp{o}"),
        o => format!("tm{}", -o),
    };
    match (multi, t.modulo) {
        (true, Some(m)) => format!("{base}_{m}"),
        _ => base,
    }
}

fn collect_time_indices(ir: &KernelIR) -> BTreeSet<TimeIndex> {
    let mut set = BTreeSet::new();
    for st in &ir.stages {
        match st {
            Stage::Update(u) => {
                for a in &u.assignments {
                    set.extend(a.lhs.time);
                    set.extend(a.rhs.accesses().into_iter().filter_map(|x| x.time));
                }
                for (_, e) in &u.temps {
                    set.extend(e.accesses().into_iter().filter_map(|x| x.time));
                }
            }
            Stage::Inject(i) => set.extend(i.time),
            Stage::Sample(s) => set.extend(s.time),
        }
    }
    set.into_iter().filter(|t| t.modulo.is_some()).collect()
}

/// Emits C source for `ir` under `plan`.
pub fn generate(ir: &KernelIR, plan: &CodegenPlan) -> Result<GeneratedSource, CodegenError> {
    let nb = blocked_dims(ir.ndim);
    plan.validate(nb)?;
    if plan.simd && ir.layout != Layout::RowMajor {
        return Err(CodegenError::NonContiguous);
    }
    if !ir
        .name
        .chars()
        .all(|c| c.is_ascii_alphanumeric() || c == '_')
        || ir.name.is_empty()
    {
        return Err(CodegenError::InvalidName(ir.name.clone()));
    }

    let tis = collect_time_indices(ir);
    let moduli: BTreeSet<u32> = tis.iter().filter_map(|t| t.modulo).collect();
    let namer = Namer {
        slots: tis
            .iter()
            .map(|&t| (t, slot_name(t, moduli.len() > 1)))
            .collect(),
        layout: ir.layout,
    };

    // Signature and parameters.
    let mut signature = Signature { args: Vec::new() };
    let mut params = Vec::new();
    let mut casts = Vec::new();
    for g in &ir.grids {
        let shape = ir.grid_shape(&g.name).unwrap();
        params.push(format!("double *{}_vec", g.name));
        casts.push(view_cast(
            "double",
            &g.name,
            &storage_dims(&shape, ir.layout, g.time.is_some()),
        ));
        signature.args.push(ArgKind::Grid {
            name: g.name.clone(),
            shape,
        });
    }
    for sp in &ir.sparse {
        let (data, idx, w) = sparse_names(&sp.name);
        params.push(format!("double *{data}_vec"));
        params.push(format!("int64_t *{idx}_vec"));
        params.push(format!("double *{w}_vec"));
        casts.push(view_cast("double", &data, &[sp.rows, sp.npoints]));
        casts.push(view_cast(
            "int64_t",
            &idx,
            &[sp.npoints, sp.ncorners, ir.ndim],
        ));
        casts.push(view_cast("double", &w, &[sp.npoints, sp.ncorners]));
        signature.args.push(ArgKind::SparseData {
            name: sp.name.clone(),
            rows: sp.rows,
            npoints: sp.npoints,
        });
        signature.args.push(ArgKind::SparseIndices {
            name: sp.name.clone(),
            npoints: sp.npoints,
            ncorners: sp.ncorners,
            ndim: ir.ndim,
        });
        signature.args.push(ArgKind::SparseWeights {
            name: sp.name.clone(),
            npoints: sp.npoints,
            ncorners: sp.ncorners,
        });
    }
    let blocked = !matches!(plan.blocking, Blocking::Off);
    let mut body: Vec<Stmt> = casts.into_iter().map(Stmt::Line).collect();
    match &plan.blocking {
        Blocking::Runtime => {
            for d in 0..nb {
                params.push(format!("long {}", block_var(d)));
                signature.args.push(ArgKind::Block { dim: d });
            }
            let cond = (0..nb)
                .map(|d| format!("{} < 1", block_var(d)))
                .collect::<Vec<_>>()
                .join(" || ");
            body.push(Stmt::If {
                cond,
                then: vec![Stmt::Line("return 1;".into())],
            });
        }
        Blocking::Fixed(sizes) => {
            for (d, b) in sizes.iter().enumerate() {
                body.push(Stmt::Line(format!("const long {} = {b};", block_var(d))));
            }
        }
        Blocking::Off => {}
    }

    // Zero-initialized grids.
    let zero: Vec<Stmt> = ir
        .grids
        .iter()
        .filter(|g| g.zero_initial)
        .flat_map(|g| zero_init(ir, &g.name, plan.parallel && plan.first_touch))
        .collect();

    // Per-timestep body.
    let mut step = Vec::new();
    for (t, name) in &namer.slots {
        step.push(Stmt::Line(format!(
            "const long {name} = ({}) % {};",
            offset_index("t", t.offset),
            t.modulo.unwrap()
        )));
    }
    for st in &ir.stages {
        match st {
            Stage::Update(u) => step.extend(update_nests(ir, u, plan, blocked, &namer)),
            Stage::Inject(i) => step.push(single(plan, inject_loop(ir, i, &namer))),
            Stage::Sample(s) => step.push(single(plan, sample_loop(ir, s, &namer))),
        }
    }

    let mut region = Vec::new();
    let first_touch = plan.parallel && plan.first_touch;
    if first_touch {
        region.extend(zero);
    } else {
        body.extend(zero);
    }
    match ir.time {
        Some(tl) => {
            let (init, cond, inc) = if tl.backward {
                (
                    (tl.nt - 1).to_string(),
                    format!("t >= {}", tl.lo),
                    "t--".to_string(),
                )
            } else {
                (
                    tl.lo.to_string(),
                    format!("t < {}", tl.nt),
                    "t++".to_string(),
                )
            };
            region.push(Stmt::For(ForLoop {
                pragmas: vec![],
                ty: "long".into(),
                var: "t".into(),
                init,
                cond,
                step: inc,
                role: LoopRole::Time,
                body: step,
            }));
        }
        None => region.extend(step),
    }
    if plan.parallel {
        body.push(Stmt::Pragma("#pragma omp parallel".into()));
        body.push(Stmt::Block(region));
    } else {
        body.extend(region);
    }
    body.push(Stmt::Line("return 0;".into()));

    let kernel = Function {
        ret: "int".into(),
        name: ir.name.clone(),
        params,
        body,
    };
    let packed = packed_entry(&ir.name, &signature);
    let unit = TranslationUnit {
        preamble: vec![
            "#include <stdint.h>".into(),
            "#include <math.h>".into(),
            "#ifdef _OPENMP".into(),
            "#include <omp.h>".into(),
            "#endif".into(),
        ],
        functions: vec![kernel, packed],
    };

    let mut flops = 0;
    let mut arrays = BTreeSet::new();
    for u in ir.update_stages() {
        flops += statements_op_count(&u.temps, &u.assignments).total();
        for a in &u.assignments {
            arrays.insert((a.lhs.name.to_string(), a.lhs.time));
            arrays.extend(
                a.rhs
                    .accesses()
                    .into_iter()
                    .map(|x| (x.name.to_string(), x.time)),
            );
        }
        for (_, e) in &u.temps {
            arrays.extend(
                e.accesses()
                    .into_iter()
                    .map(|x| (x.name.to_string(), x.time)),
            );
        }
    }

    Ok(GeneratedSource {
        source: unit.render(),
        entry: ir.name.clone(),
        packed_entry: format!("{}_packed", ir.name),
        signature,
        flops_per_point: flops,
        bytes_per_point: 8 * arrays.len(),
        blocked_dims: if blocked { nb } else { 0 },
        unit,
        ir: ir.clone(),
    })
}

fn block_var(d: usize) -> String {
    format!("i{}block", d + 1)
}

pub(crate) fn sparse_names(name: &str) -> (String, String, String) {
    (name.to_string(), format!("{name}_idx"), format!("{name}_w"))
}

fn storage_dims(shape: &[usize], layout: Layout, timed: bool) -> Vec<usize> {
    let split = usize::from(timed);
    let mut dims = shape[..split].to_vec();
    match layout {
        Layout::RowMajor => dims.extend_from_slice(&shape[split..]),
        Layout::ColumnMajor => dims.extend(shape[split..].iter().rev()),
    }
    dims
}

fn view_cast(ty: &str, name: &str, dims: &[usize]) -> String {
    let tail: String = dims[1..].iter().map(|d| format!("[{d}]")).collect();
    format!("{ty} (*{name}){tail} = ({ty} (*){tail}) {name}_vec;")
}

fn simple_loop(var: &str, lo: String, hi: String, role: LoopRole, body: Vec<Stmt>) -> ForLoop {
    ForLoop {
        pragmas: vec![],
        ty: "int".into(),
        var: var.into(),
        init: lo,
        cond: format!("{var} < {hi}"),
        step: format!("{var}++"),
        role,
        body,
    }
}

fn zero_init(ir: &KernelIR, name: &str, parallel: bool) -> Vec<Stmt> {
    let g = ir.grid(name).unwrap();
    let vars: Vec<String> = (0..ir.ndim).map(|d| format!("i{}", d + 1)).collect();
    let slot = g.time.map(|_| "s".to_string());
    let mut inner = vec![Stmt::Line(format!(
        "{} = 0.0;",
        render_indexed(name, slot.clone(), vars.clone(), ir.layout)
    ))];
    for d in (0..ir.ndim).rev() {
        let mut l = simple_loop(
            &vars[d],
            "0".into(),
            ir.shape[d].to_string(),
            LoopRole::Init,
            inner,
        );
        if d == 0 && parallel {
            l.pragmas.push("#pragma omp for schedule(static)".into());
        }
        inner = vec![Stmt::For(l)];
    }
    match g.time {
        Some(t) => vec![Stmt::For(simple_loop(
            "s",
            "0".into(),
            t.slots().to_string(),
            LoopRole::Init,
            inner,
        ))],
        None => inner,
    }
}

fn update_nests(
    ir: &KernelIR,
    u: &UpdateStage,
    plan: &CodegenPlan,
    blocked: bool,
    namer: &Namer,
) -> Vec<Stmt> {
    let mut inner = Vec::new();
    for (name, e) in &u.temps {
        inner.push(Stmt::Line(format!(
            "double {name} = {};",
            strip_outer(render(e, namer))
        )));
    }
    for a in &u.assignments {
        inner.push(Stmt::Line(format!(
            "{} = {};",
            render_access(&a.lhs, namer),
            strip_outer(render(&a.rhs, namer))
        )));
    }
    let mut grids = BTreeSet::new();
    for a in &u.assignments {
        grids.insert(a.lhs.name.to_string());
        grids.extend(a.rhs.accesses().into_iter().map(|x| x.name.to_string()));
    }
    for (_, e) in &u.temps {
        grids.extend(e.accesses().into_iter().map(|x| x.name.to_string()));
    }
    let simd = format!(
        "#pragma omp simd aligned({}:{})",
        grids.into_iter().collect::<Vec<_>>().join(", "),
        plan.alignment
    );

    let bounds = ir.bounds();
    let nb = blocked_dims(ir.ndim);
    let nests: Vec<Vec<DimRole>> = if blocked {
        block_nests(nb)
    } else {
        vec![vec![DimRole::Full; nb]]
    };
    let mut out = Vec::new();
    for nest in nests {
        let mut loops: Vec<ForLoop> = Vec::new();
        let spatial = |d: usize, role: DimRole| -> ForLoop {
            let (lo, hi) = bounds[d];
            let var = format!("i{}", d + 1);
            let main_end = format!("{hi} - ({} % {})", hi - lo, block_var(d));
            let (init, end, r) = match role {
                DimRole::Full => (lo.to_string(), hi.to_string(), LoopRole::Full),
                DimRole::Main => (lo.to_string(), main_end, LoopRole::Main),
                DimRole::Remainder => (main_end, hi.to_string(), LoopRole::Remainder),
                DimRole::Blocked => (
                    format!("{var}b"),
                    format!("{var}b + {}", block_var(d)),
                    LoopRole::BlockInner,
                ),
            };
            simple_loop(&var, init, end, r, vec![])
        };
        for (d, &role) in nest.iter().enumerate() {
            if role == DimRole::Blocked {
                let (lo, hi) = bounds[d];
                let var = format!("i{}b", d + 1);
                loops.push(ForLoop {
                    pragmas: vec![],
                    ty: "int".into(),
                    var: var.clone(),
                    init: lo.to_string(),
                    cond: format!("{var} < {hi} - ({} % {})", hi - lo, block_var(d)),
                    step: format!("{var} += {}", block_var(d)),
                    role: LoopRole::BlockOuter,
                    body: vec![],
                });
            }
        }
        for (d, &role) in nest.iter().enumerate() {
            loops.push(spatial(d, role));
        }
        for d in nb..ir.ndim {
            loops.push(spatial(d, DimRole::Full));
        }
        if plan.parallel {
            loops[0]
                .pragmas
                .push("#pragma omp for schedule(static)".into());
        }
        if plan.simd {
            loops.last_mut().unwrap().pragmas.push(simd.clone());
        }
        let mut body = inner.clone();
        for mut l in loops.into_iter().rev() {
            l.body = body;
            body = vec![Stmt::For(l)];
        }
        out.extend(body);
    }
    out
}

fn strip_outer(s: String) -> String {
    // Drop one redundant pair of parentheses around a whole right-hand side.
    if s.starts_with('(') && s.ends_with(')') {
        let inner = &s[1..s.len() - 1];
        let mut depth = 0i32;
        for ch in inner.chars() {
            match ch {
                '(' => depth += 1,
                ')' => {
                    depth -= 1;
                    if depth < 0 {
                        return s;
                    }
                }
                _ => {}
            }
        }
        if depth == 0 {
            return inner.to_string();
        }
    }
    s
}

fn single(plan: &CodegenPlan, body: Stmt) -> Stmt {
    if plan.parallel {
        Stmt::Block(vec![
            Stmt::Pragma("#pragma omp single".into()),
            Stmt::Block(vec![body]),
        ])
    } else {
        body
    }
}

fn corner_access(
    ir: &KernelIR,
    grid: &str,
    time: Option<TimeIndex>,
    idx: &str,
    namer: &Namer,
) -> String {
    let spatial = (0..ir.ndim).map(|d| format!("{idx}[p][c][{d}]")).collect();
    render_indexed(grid, time.map(|t| namer.time(t)), spatial, ir.layout)
}

fn inject_loop(ir: &KernelIR, st: &InjectStage, namer: &Namer) -> Stmt {
    let sp = ir.sparse_arg(&st.sparse).unwrap();
    let (data, idx, w) = sparse_names(&sp.name);
    let target = corner_access(ir, &st.grid, st.time, &idx, namer);
    let value = format!("{w}[p][c]*{data}[{}][p]", offset_index("t", st.row));
    let rhs = match &st.scale {
        InjectScale::One => value,
        InjectScale::Constant(c) => format!("({value})*{}", float_literal(*c)),
        InjectScale::OverGrid { numerator, grid } => format!(
            "({value})*({}/{})",
            float_literal(*numerator),
            corner_access(ir, grid, None, &idx, namer)
        ),
    };
    let corners = simple_loop(
        "c",
        "0".into(),
        sp.ncorners.to_string(),
        LoopRole::Sparse,
        vec![Stmt::Line(format!("{target} += {rhs};"))],
    );
    Stmt::For(simple_loop(
        "p",
        "0".into(),
        sp.npoints.to_string(),
        LoopRole::Sparse,
        vec![Stmt::For(corners)],
    ))
}

fn sample_loop(ir: &KernelIR, st: &SampleStage, namer: &Namer) -> Stmt {
    let sp = ir.sparse_arg(&st.sparse).unwrap();
    let (data, idx, w) = sparse_names(&sp.name);
    let src = corner_access(ir, &st.grid, st.time, &idx, namer);
    let corners = simple_loop(
        "c",
        "0".into(),
        sp.ncorners.to_string(),
        LoopRole::Sparse,
        vec![Stmt::Line(format!("acc += {w}[p][c]*{src};"))],
    );
    Stmt::For(simple_loop(
        "p",
        "0".into(),
        sp.npoints.to_string(),
        LoopRole::Sparse,
        vec![
            Stmt::Line("double acc = 0.0;".into()),
            Stmt::For(corners),
            Stmt::Line(format!("{data}[{}][p] = acc;", offset_index("t", st.row))),
        ],
    ))
}

fn packed_entry(name: &str, sig: &Signature) -> Function {
    let mut args = Vec::new();
    let mut slot = 0;
    let mut block = 0;
    for a in &sig.args {
        match a {
            ArgKind::Grid { .. } | ArgKind::SparseData { .. } | ArgKind::SparseWeights { .. } => {
                args.push(format!("(double *) args[{slot}]"));
                slot += 1;
            }
            ArgKind::SparseIndices { .. } => {
                args.push(format!("(int64_t *) args[{slot}]"));
                slot += 1;
            }
            ArgKind::Block { .. } => {
                args.push(format!("blocks[{block}]"));
                block += 1;
            }
        }
    }
    Function {
        ret: "int".into(),
        name: format!("{name}_packed"),
        params: vec![
            "void **args".into(),
            "const long *blocks".into(),
            "long nthreads".into(),
        ],
        body: vec![
            Stmt::Line("(void) blocks;".into()),
            Stmt::Line("#ifdef _OPENMP".into()),
            Stmt::If {
                cond: "nthreads > 0".into(),
                then: vec![Stmt::Line("omp_set_num_threads((int) nthreads);".into())],
            },
            Stmt::Line("#else".into()),
            Stmt::Line("(void) nthreads;".into()),
            Stmt::Line("#endif".into()),
            Stmt::Line(format!("return {name}({});", args.join(", "))),
        ],
    }
}
