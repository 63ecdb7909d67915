use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;

use fdjit::codegen::ast::{LoopRole, Stmt};
use fdjit::codegen::{
    block_nests, enumerate_nests, generate, render_remainder_decomposition, ArgKind, Blocking,
    CodegenError, CodegenPlan, DimRole,
};
use fdjit::lowering::{build_kernel_ir, KernelBuilder, KernelIR, Layout, Spacing};
use fdjit::optimizer::{optimize, statements_op_count};
use fdjit::seismic::Problem;
use fdjit::symbolic::{solve_for, Equation, GridFunction};
use proptest::prelude::*;

const SIMD_LINE: &str = "#pragma omp simd aligned(damp, m, u:64)";

fn cube_ir(n: usize, order: usize) -> KernelIR {
    let shape = [n, n, n];
    let u = GridFunction::builder("u", &shape)
        .space_order(order)
        .time_varying(true)
        .save(true, 100)
        .build()
        .unwrap();
    let m = GridFunction::builder("m", &shape)
        .space_order(order)
        .build()
        .unwrap();
    let damp = GridFunction::builder("damp", &shape)
        .space_order(order)
        .build()
        .unwrap();
    let eqn = Equation::zero(m.at() * u.dt2() - u.laplace() + damp.at() * u.dt());
    let stencil = solve_for(&eqn, &u.forward()).unwrap();
    let mut ir = KernelBuilder::new("forward")
        .spacing(Spacing::new(0.1, 0.01))
        .nt(100)
        .zero_initial(&u)
        .update(vec![Equation::new(u.forward(), stencil)])
        .build()
        .unwrap();
    optimize(&mut ir);
    ir
}

fn default_forward() -> KernelIR {
    Problem::default()
        .solver()
        .unwrap()
        .forward_ir(false)
        .unwrap()
}

fn copy_ir() -> KernelIR {
    let f = GridFunction::dense("f", &[10, 10]).unwrap();
    let g = GridFunction::dense("g", &[10, 10]).unwrap();
    let h = GridFunction::dense("h_fld", &[10, 10]).unwrap();
    build_kernel_ir(
        "copy",
        vec![Equation::new(f.at(), h.at() + 2 * g.at())],
        None,
        Spacing::default(),
    )
    .unwrap()
}

#[test]
fn full_plan_carries_the_aligned_simd_pragma() {
    let src = generate(&default_forward(), &CodegenPlan::full()).unwrap();
    let simd: BTreeSet<&str> = src
        .source
        .lines()
        .map(str::trim)
        .filter(|l| l.contains("omp simd"))
        .collect();
    assert_eq!(simd, BTreeSet::from([SIMD_LINE]));
}

#[test]
fn blocked_cube_has_the_expected_loop_headers() {
    let src = generate(&cube_ir(130, 2), &CodegenPlan::full()).unwrap();
    let k = src.kernel();
    let headers: Vec<String> = k.loops().iter().map(|l| l.header()).collect();
    assert!(
        headers.contains(&"for (long t = 2; t < 100; t++)".to_string()),
        "{headers:#?}"
    );
    assert!(
        headers.contains(
            &"for (int i1b = 1; i1b < 129 - (128 % i1block); i1b += i1block)".to_string()
        ),
        "{headers:#?}"
    );
    assert!(headers
        .contains(&"for (int i2b = 1; i2b < 129 - (128 % i2block); i2b += i2block)".to_string()));

    let roots = k.nest_roots();
    assert_eq!(roots.len(), 3, "main nest plus two remainder nests");
    assert_eq!(roots[0].role, LoopRole::BlockOuter);
    assert!(roots[1..]
        .iter()
        .all(|l| l.role == LoopRole::Remainder || l.role == LoopRole::Main));
    assert_eq!(
        roots[1].header(),
        "for (int i1 = 129 - (128 % i1block); i1 < 129; i1++)"
    );

    // Every nest vectorizes its innermost loop with the same pragma.
    let simd_loops: Vec<_> = k
        .loops()
        .into_iter()
        .filter(|l| l.pragmas.iter().any(|p| p.contains("simd")))
        .collect();
    assert_eq!(simd_loops.len(), 3);
    assert!(simd_loops.iter().all(|l| l.var == "i3"));
}

#[test]
fn plain_copy_kernel_has_no_pragmas() {
    let src = generate(&copy_ir(), &CodegenPlan::all_off()).unwrap();
    assert!(!src.source.contains("#pragma"));
    let loops = src.kernel().loops();
    assert_eq!(loops.len(), 2);
    // Default space order 2 leaves a one-point halo.
    assert_eq!(loops[0].header(), "for (int i1 = 1; i1 < 9; i1++)");
    assert_eq!(src.signature.block_count(), 0);
}

#[test]
fn blocking_off_means_no_block_parameters() {
    let mut plan = CodegenPlan::full();
    plan.blocking = Blocking::Off;
    let src = generate(&default_forward(), &plan).unwrap();
    assert_eq!(src.signature.block_count(), 0);
    assert!(!src.kernel().params.iter().any(|p| p.contains("block")));
    assert_eq!(src.kernel().nest_roots().len(), 1);
}

#[test]
fn fixed_blocks_are_compiled_in() {
    let mut plan = CodegenPlan::all_off();
    plan.blocking = Blocking::Fixed(vec![16, 8]);
    let src = generate(&default_forward(), &plan).unwrap();
    assert_eq!(src.signature.block_count(), 0);
    assert!(src.source.contains("const long i1block = 16;"));
    assert!(src.source.contains("const long i2block = 8;"));
    plan.blocking = Blocking::Fixed(vec![16]);
    assert_eq!(
        generate(&default_forward(), &plan).unwrap_err(),
        CodegenError::BlockSizes(vec![16])
    );
}

#[test]
fn runtime_blocks_trail_the_signature() {
    let src = generate(&default_forward(), &CodegenPlan::full()).unwrap();
    let n = src.signature.args.len();
    assert_eq!(
        src.signature.args[n - 2..],
        [ArgKind::Block { dim: 0 }, ArgKind::Block { dim: 1 }]
    );
}

#[test]
fn column_major_refuses_simd() {
    let mut ir = default_forward();
    ir.layout = Layout::ColumnMajor;
    assert_eq!(
        generate(&ir, &CodegenPlan::full()).unwrap_err(),
        CodegenError::NonContiguous
    );
    assert!(generate(&ir, &CodegenPlan::all_off()).is_ok());
}

#[test]
fn bad_alignment_and_names_are_rejected() {
    let mut plan = CodegenPlan::full();
    plan.alignment = 48;
    assert_eq!(
        generate(&default_forward(), &plan).unwrap_err(),
        CodegenError::Alignment(48)
    );
    let mut ir = copy_ir();
    ir.name = "not a name".into();
    assert!(matches!(
        generate(&ir, &CodegenPlan::all_off()),
        Err(CodegenError::InvalidName(_))
    ));
}

#[test]
fn generation_is_deterministic() {
    for plan in CodegenPlan::variants() {
        let a = generate(&default_forward(), &plan).unwrap();
        let b = generate(&default_forward(), &plan).unwrap();
        assert_eq!(a.source, b.source, "{}", plan.label());
    }
}

#[test]
fn source_matches_the_golden_files() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let cases = [
        ("forward2d_full.c", default_forward(), CodegenPlan::full()),
        (
            "forward2d_plain.c",
            default_forward(),
            CodegenPlan::all_off(),
        ),
        ("copy_plain.c", copy_ir(), CodegenPlan::all_off()),
    ];
    for (file, ir, plan) in cases {
        let text = generate(&ir, &plan).unwrap().source;
        let path = dir.join(file);
        if std::env::var_os("FDJIT_UPDATE_GOLDEN").is_some() {
            std::fs::create_dir_all(&dir).unwrap();
            std::fs::write(&path, &text).unwrap();
        }
        let want =
            std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(
            text, want,
            "{file} drifted; rerun with FDJIT_UPDATE_GOLDEN=1 after review"
        );
    }
}

/// Counts arithmetic in the emitted update statements: bracketed index
/// arithmetic is skipped, binary `+`/`-` are printed with spaces around them.
fn text_ops(src: &str) -> usize {
    let mut total = 0;
    for line in src.lines().map(str::trim) {
        let is_update =
            line.starts_with("double temp") || (line.starts_with("u[") && line.contains(" = "));
        if !is_update {
            continue;
        }
        let rhs = &line[line.find(" = ").unwrap() + 3..];
        let mut depth = 0;
        let mut flat = String::new();
        for c in rhs.chars() {
            match c {
                '[' => depth += 1,
                ']' => depth -= 1,
                _ if depth == 0 => flat.push(c),
                _ => {}
            }
        }
        total += flat.matches(" + ").count() + flat.matches(" - ").count();
        total += flat.matches('*').count() + flat.matches('/').count();
    }
    total
}

#[test]
fn flop_and_byte_metadata_match_the_code() {
    let ir = default_forward();
    let src = generate(&ir, &CodegenPlan::all_off()).unwrap();
    let st = ir.update_stages().next().unwrap();
    assert_eq!(
        src.flops_per_point,
        statements_op_count(&st.temps, &st.assignments).total()
    );
    assert_eq!(src.flops_per_point, text_ops(&src.source));
    // u at three time levels, damp and m.
    assert_eq!(src.bytes_per_point, 5 * 8);
    let oi = src.operational_intensity();
    assert_eq!(oi, src.flops_per_point as f64 / 40.0);
}

#[test]
fn decomposition_examples() {
    let d = render_remainder_decomposition(1, 129, 16);
    assert_eq!((d.main_len(), d.remainder_len()), (128, 0));
    let d = render_remainder_decomposition(1, 129, 24);
    assert_eq!((d.main_len(), d.remainder_len()), (120, 8));
    let d = render_remainder_decomposition(1, 129, 1);
    assert_eq!((d.main_len(), d.remainder_len()), (128, 0));
    assert_eq!(block_nests(2)[1], vec![DimRole::Remainder, DimRole::Full]);
    assert_eq!(block_nests(2)[2], vec![DimRole::Main, DimRole::Remainder]);
}

fn covers_once(ranges: &[(i64, i64)], blocks: &[i64]) -> bool {
    let mut hits: HashMap<Vec<i64>, usize> = HashMap::new();
    for p in enumerate_nests(ranges, blocks) {
        *hits.entry(p).or_default() += 1;
    }
    let expected: i64 = ranges.iter().map(|(lo, hi)| hi - lo).product();
    hits.len() as i64 == expected
        && hits.values().all(|&n| n == 1)
        && hits
            .keys()
            .all(|p| p.iter().zip(ranges).all(|(i, (lo, hi))| lo <= i && i < hi))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn one_dimensional_ranges_cover_once(lo in 0i64..8, span in 0i64..300, block in 1i64..80) {
        prop_assert!(covers_once(&[(lo, lo + span)], &[block]));
    }

    #[test]
    fn two_dimensional_nests_cover_once(a in 0i64..40, b in 0i64..40, ba in 1i64..50, bb in 1i64..50) {
        prop_assert!(covers_once(&[(2, 2 + a), (1, 1 + b)], &[ba, bb]));
    }
}

#[test]
fn emitted_nests_follow_the_decomposition() {
    // The remainder nests in the AST use the same split as the helper.
    let src = generate(&cube_ir(20, 4), &CodegenPlan::full()).unwrap();
    let mut remainder_inits = Vec::new();
    src.kernel().walk(&mut |s| {
        if let Stmt::For(l) = s {
            if l.role == LoopRole::Remainder {
                remainder_inits.push(l.init.clone());
            }
        }
    });
    assert_eq!(
        remainder_inits,
        ["18 - (16 % i1block)", "18 - (16 % i2block)"]
    );
}
