mod common;

use fdjit::seismic::{
    build_damping, critical_dt, damping_constant, inject, interp_weights, objective, ricker,
    sample, time_axis, AcousticSolver, Model, Problem, SeismicError, ShotRecord, SparsePointSet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small() -> Problem {
    Problem {
        shape: vec![41, 41],
        nbpml: 8,
        nt: 200,
        nrec: 7,
        ..Problem::default()
    }
}

#[test]
fn ricker_peak_and_zero_crossings() {
    // 10 Hz centred at 0.1 s, in kHz and ms.
    let (f0, t0) = (0.010, 100.0);
    assert_eq!(ricker(f0, t0, &[t0]), vec![1.0]);
    let tz = 1.0 / (std::f64::consts::PI * f0 * 2f64.sqrt());
    for t in [t0 - tz, t0 + tz] {
        assert!(ricker(f0, t0, &[t])[0].abs() < 1e-15);
    }
    let trace = ricker(f0, t0, &time_axis(201, 1.0));
    let peak = trace.iter().cloned().fold(f64::MIN, f64::max);
    assert_eq!(peak, 1.0);
    assert_eq!(trace[100], 1.0);
}

#[test]
fn damping_profile() {
    let (nbpml, halo, h) = (10, 2, 15.0);
    let shape = [30 + 2 * (nbpml + halo), 24 + 2 * (nbpml + halo)];
    let d = build_damping(&shape, nbpml, halo, h);
    let at = |i: usize, j: usize| d[i * shape[1] + j];
    let c = damping_constant() / (nbpml as f64 * h);
    // Interior and the inner edge of the layer.
    assert_eq!(at(shape[0] / 2, shape[1] / 2), 0.0);
    assert_eq!(at(halo + nbpml, shape[1] / 2), 0.0);
    // Outermost layer point and the halo beyond it.
    assert!((at(halo, shape[1] / 2) - c).abs() < 1e-15 * c);
    assert_eq!(at(0, shape[1] / 2), at(halo, shape[1] / 2));
    // Rises monotonically toward the edge.
    for i in halo..halo + nbpml {
        assert!(at(i, shape[1] / 2) >= at(i + 1, shape[1] / 2));
    }
    assert!(d.iter().all(|&v| (0.0..=c * (1.0 + 1e-12)).contains(&v)));
}

#[test]
fn interpolation_weights_form_a_partition_of_unity() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let c = [
            rng.gen_range(0.0..300.0),
            rng.gen_range(0.0..300.0),
            rng.gen_range(0.0..300.0),
        ];
        let w = interp_weights(&c, &[0.0; 3], 15.0, &[21, 21, 21]).unwrap();
        assert!(w.len() <= 8);
        let sum: f64 = w.iter().map(|(_, v)| v).sum();
        assert!((sum - 1.0).abs() < 1e-14, "{c:?}: {sum}");
        assert!(w.iter().all(|(_, v)| (0.0..=1.0).contains(v)));
        // Reconstructs a linear function exactly.
        let lin: f64 = w
            .iter()
            .map(|(i, v)| v * (i[0] as f64 * 15.0 + 2.0 * i[1] as f64 * 15.0))
            .sum();
        assert!((lin - (c[0] + 2.0 * c[1])).abs() < 1e-9);
    }
    assert_eq!(
        interp_weights(&[30.0, 45.0], &[0.0, 0.0], 15.0, &[5, 5]).unwrap(),
        vec![(vec![2, 3], 1.0)]
    );
    assert!(matches!(
        interp_weights(&[-1.0, 0.0], &[0.0, 0.0], 15.0, &[5, 5]),
        Err(SeismicError::OutsideDomain(_))
    ));
}

#[test]
fn injection_and_sampling_are_adjoint() {
    let model = Model::homogeneous(&[30, 25], 10.0, 4, 1.5).unwrap();
    let halo = 2;
    let shape = model.padded_shape(halo);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let coords: Vec<Vec<f64>> = (0..9)
        .map(|_| vec![rng.gen_range(0.0..290.0), rng.gen_range(0.0..240.0)])
        .collect();
    let pts = SparsePointSet::locate(&coords, &model, halo).unwrap();
    for _ in 0..20 {
        let x: Vec<f64> = (0..coords.len())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let y: Vec<f64> = (0..shape.iter().product())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let mut field = vec![0.0; y.len()];
        inject(&mut field, &shape, &pts, &x, 1.0);
        let lhs: f64 = field.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = sample(&y, &shape, &pts)
            .iter()
            .zip(&x)
            .map(|(a, b)| a * b)
            .sum();
        assert!(
            (lhs - rhs).abs() <= 1e-13 * lhs.abs().max(rhs.abs()),
            "{lhs} vs {rhs}"
        );
    }
}

#[test]
fn on_node_injection_and_sampling_are_exact() {
    let model = Model::homogeneous(&[10, 10], 10.0, 2, 1.5).unwrap();
    let shape = model.padded_shape(1);
    let pts = SparsePointSet::locate(&[vec![30.0, 40.0]], &model, 1).unwrap();
    let node = (3 + 3) * shape[1] + (4 + 3);
    let mut field: Vec<f64> = (0..shape.iter().product()).map(|i| i as f64).collect();
    let before = field.clone();
    inject(&mut field, &shape, &pts, &[0.0], 1.0);
    assert_eq!(field, before);
    inject(&mut field, &shape, &pts, &[2.5], 1.0);
    assert_eq!(field[node], before[node] + 2.5);
    assert_eq!(sample(&field, &shape, &pts), vec![field[node]]);
    let uniform = vec![4.25; field.len()];
    let mid = SparsePointSet::locate(&[vec![35.0, 42.0]], &model, 1).unwrap();
    assert!((sample(&uniform, &shape, &mid)[0] - 4.25).abs() < 1e-15);
}

#[test]
fn critical_time_step() {
    let model = Model::homogeneous(&[20, 20], 15.0, 4, 1.5).unwrap();
    let dt = critical_dt(&model, 2).unwrap();
    assert!((dt - 0.9 * 15.0 / (1.5 * 2f64.sqrt())).abs() < 1e-12);
    assert!((dt - 6.36).abs() < 0.01);
    let dt4 = critical_dt(&model, 4).unwrap();
    assert!((dt4 / dt - 0.866).abs() < 1e-3);
    let fast = Model::homogeneous(&[20, 20], 15.0, 4, 3.0).unwrap();
    assert!((critical_dt(&fast, 2).unwrap() - dt / 2.0).abs() < 1e-12);
}

#[test]
fn unstable_step_is_refused() {
    let p = small();
    let model = p.model().unwrap();
    let limit = critical_dt(&model, p.space_order).unwrap();
    match p.solver_for(model, limit * 1.01) {
        Err(SeismicError::Cfl { dt, limit: l }) => assert!(dt > l),
        other => panic!("expected a CFL error, got {other:?}"),
    }
}

#[test]
fn model_validation_and_storage() {
    assert!(Model::new(&[4, 4], 10.0, 2, vec![0.0; 16]).is_err());
    assert!(Model::new(&[4, 4], 10.0, 2, vec![1.0; 15]).is_err());
    let m: Vec<f64> = (0..12).map(|i| 0.2 + i as f64 * 0.01).collect();
    let model = Model::new(&[3, 4], 12.5, 3, m).unwrap();
    let dir = std::env::temp_dir().join(format!("fdjit-model-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    model.save(&dir.join("m")).unwrap();
    assert_eq!(Model::load(&dir.join("m")).unwrap(), model);
    std::fs::remove_dir_all(&dir).unwrap();
    let padded = model.padded_m(1);
    let ps = model.padded_shape(1);
    assert_eq!(ps, vec![11, 12]);
    assert_eq!(padded[0], model.m[0]);
    assert_eq!(padded[ps[0] * ps[1] - 1], model.m[11]);
}

#[test]
fn objective_examples() {
    let coords = vec![vec![0.0, 0.0], vec![10.0, 0.0]];
    let syn = ShotRecord::new(&coords, 3, 1.0, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
    let (phi, res) = objective(&syn, &syn).unwrap();
    assert_eq!(phi, 0.0);
    assert!(res.data.iter().all(|&v| v == 0.0));
    let zero = ShotRecord::zeros(&coords, 3, 1.0);
    let (phi, _) = objective(&syn, &zero).unwrap();
    assert_eq!(phi, 0.5 * 91.0);
    let twice =
        ShotRecord::new(&coords, 3, 1.0, syn.data.iter().map(|v| 2.0 * v).collect()).unwrap();
    assert_eq!(objective(&twice, &zero).unwrap().0, 4.0 * phi);
    assert!(ShotRecord::new(&coords, 3, 1.0, vec![0.0; 5]).is_err());
}

#[test]
fn zero_source_gives_zero_everything() {
    let solver = small().solver().unwrap();
    let fwd = solver.forward(&vec![0.0; solver.nt], false).unwrap();
    assert!(fwd.u.as_slice().iter().all(|&v| v == 0.0));
    assert!(fwd.record.data.iter().all(|&v| v == 0.0));

    let residual = ShotRecord::zeros(&solver.rec.coords, solver.nt, solver.dt);
    let adj = solver.adjoint(&residual).unwrap();
    assert!(adj.v.as_slice().iter().all(|&v| v == 0.0));
    assert!(adj.source.data.iter().all(|&v| v == 0.0));

    let q = small().wavelet(solver.dt);
    let mut history = solver.forward(&q, true).unwrap().u;
    let g = solver.gradient(&residual, &mut history).unwrap();
    assert!(g.gradient.iter().all(|&v| v == 0.0));
}

#[test]
fn saved_and_rolling_storage_record_the_same_data() {
    for order in [2, 4, 8] {
        let p = Problem {
            space_order: order,
            ..small()
        };
        let solver = p.solver().unwrap();
        let q = p.wavelet(solver.dt);
        let rolling = solver.forward(&q, false).unwrap();
        let saved = solver.forward(&q, true).unwrap();
        assert_eq!(saved.u.shape()[0], p.nt);
        assert_eq!(rolling.u.shape()[0], 3);
        let err = common::max_scaled(&saved.record.data, &rolling.record.data);
        assert!(err <= 1e-12, "order {order}: {err:e}");
    }
}

#[test]
fn first_arrival_matches_travel_time() {
    let p = Problem {
        shape: vec![81, 81],
        nbpml: 10,
        nt: 400,
        nrec: 5,
        ..Problem::default()
    };
    let solver = p.solver().unwrap();
    let q = p.wavelet(solver.dt);
    let rec = solver.forward(&q, false).unwrap().record;
    let src = &solver.src.coords[0];
    let t0 = 1.0 / p.f0;
    let period = 1.0 / p.f0;
    for r in 0..rec.npoints() {
        let c = &rec.coords[r];
        let dist = ((c[0] - src[0]).powi(2) + (c[1] - src[1]).powi(2)).sqrt();
        let trace = rec.trace(r);
        let peak = trace.iter().map(|v| v.abs()).fold(0.0, f64::max);
        // Onset: first sample above 1% of the trace peak, compared with the
        // onset of the source wavelet shifted by the travel time.
        let onset = trace.iter().position(|v| v.abs() > 0.01 * peak).unwrap() as f64 * solver.dt;
        let src_onset = q.iter().position(|v| v.abs() > 0.01).unwrap() as f64 * solver.dt;
        let expected = src_onset + dist / p.velocity;
        assert!(
            (onset - expected).abs() <= 2.0 * period,
            "receiver {r}: onset {onset} vs {expected} (t0 {t0})"
        );
        assert!(
            (onset - expected).abs() <= 0.5 * period,
            "receiver {r}: onset {onset} vs {expected}"
        );
    }
}

#[test]
fn source_receiver_reciprocity() {
    let p = Problem {
        shape: vec![51, 51],
        nbpml: 8,
        nt: 300,
        ..Problem::default()
    };
    let model = p.background().unwrap();
    let dt = p.dt_for(&model).unwrap();
    let a = vec![200.0, 150.0];
    let b = vec![510.0, 420.0];
    let ab = AcousticSolver::new(
        model.clone(),
        p.space_order,
        p.nt,
        dt,
        std::slice::from_ref(&a),
        std::slice::from_ref(&b),
    )
    .unwrap();
    let ba = AcousticSolver::new(model, p.space_order, p.nt, dt, &[b], &[a]).unwrap();
    let q = p.wavelet(dt);
    let d1 = ab.forward(&q, false).unwrap().record.data;
    let d2 = ba.forward(&q, false).unwrap().record.data;
    let err = common::max_scaled(&d1, &d2);
    assert!(d1.iter().any(|&v| v != 0.0));
    assert!(err <= 1e-8, "{err:e}");
}

/// Leapfrog energy at half steps for the second-order Laplacian; halo
/// nodes hold zero, so the discrete Laplacian is symmetric.
fn energies(u: &[f64], shape: &[usize], nt: usize, m: &[f64], h: f64, dt: f64) -> Vec<f64> {
    let (nx, ny) = (shape[0], shape[1]);
    let slab = nx * ny;
    let lap = |f: &[f64], i: usize, j: usize| {
        (f[(i + 1) * ny + j] + f[(i - 1) * ny + j] + f[i * ny + j + 1] + f[i * ny + j - 1]
            - 4.0 * f[i * ny + j])
            / (h * h)
    };
    (2..nt - 1)
        .map(|n| {
            let (cur, next) = (
                &u[n * slab..(n + 1) * slab],
                &u[(n + 1) * slab..(n + 2) * slab],
            );
            let mut e = 0.0;
            for i in 1..nx - 1 {
                for j in 1..ny - 1 {
                    let k = i * ny + j;
                    let v = (next[k] - cur[k]) / dt;
                    e += 0.5 * m[k] * v * v - 0.5 * next[k] * lap(cur, i, j);
                }
            }
            e
        })
        .collect()
}

#[test]
fn energy_decays_once_the_source_stops() {
    let p = Problem {
        shape: vec![41, 41],
        nbpml: 10,
        nt: 500,
        space_order: 2,
        ..Problem::default()
    };
    let solver = p.solver().unwrap();
    let q = p.wavelet(solver.dt);
    let u = solver.forward(&q, true).unwrap().u;
    let shape = solver.padded_shape();
    let m = solver.model.padded_m(solver.halo());
    let e = energies(u.as_slice(), &shape, p.nt, &m, p.h, solver.dt);
    // The wavelet is negligible after three centre times.
    let quiet = (3.0 / p.f0 / solver.dt).ceil() as usize;
    let tail = &e[quiet..];
    assert!(tail[0] > 0.0);
    for w in tail.windows(2) {
        assert!(
            w[1] <= w[0] * (1.0 + 1e-9),
            "energy grew: {} -> {}",
            w[0],
            w[1]
        );
    }
    // The absorbing layer removes most of it.
    assert!(tail[tail.len() - 1] < 0.5 * tail[0]);
}

#[test]
fn runs_for_every_supported_order() {
    let mut peaks = Vec::new();
    for order in (2..=14).step_by(2) {
        let p = Problem {
            space_order: order,
            nt: 150,
            ..small()
        };
        let solver = p.solver().unwrap();
        assert_eq!(solver.halo(), order / 2);
        let rec = solver.forward(&p.wavelet(solver.dt), false).unwrap().record;
        assert!(rec.data.iter().all(|v| v.is_finite()));
        peaks.push(rec.data.iter().map(|v| v.abs()).fold(0.0, f64::max));
    }
    assert!(peaks.iter().all(|&p| p > 0.0));
}

#[test]
fn gradient_matches_finite_differences() {
    let p = Problem {
        shape: vec![41, 41],
        nbpml: 8,
        nt: 250,
        anomaly: 0.1,
        nrec: 9,
        ..Problem::default()
    };
    let truth = p.model().unwrap();
    let m0 = p.background().unwrap();
    let dt = p.dt_for(&truth).unwrap().min(p.dt_for(&m0).unwrap()) * 0.9;
    let base = p.solver_for(m0.clone(), dt).unwrap();
    let q = p.wavelet(dt);
    let observed = base
        .with_model(truth.clone())
        .unwrap()
        .forward(&q, false)
        .unwrap()
        .record;

    let fwd = base.forward(&q, true).unwrap();
    let (_, residual) = objective(&fwd.record, &observed).unwrap();
    let mut history = fwd.u;
    let g = base.gradient(&residual, &mut history).unwrap().gradient;

    let dm: Vec<f64> = truth.m.iter().zip(&m0.m).map(|(a, b)| a - b).collect();
    let directional: f64 = g.iter().zip(&dm).map(|(a, b)| a * b).sum();
    let phi = |eps: f64| {
        let m: Vec<f64> = m0.m.iter().zip(&dm).map(|(a, d)| a + eps * d).collect();
        let model = Model::new(&m0.shape, m0.h, m0.nbpml, m).unwrap();
        let rec = base
            .with_model(model)
            .unwrap()
            .forward(&q, false)
            .unwrap()
            .record;
        objective(&rec, &observed).unwrap().0
    };
    let eps = 1e-2;
    let fd = (phi(eps) - phi(-eps)) / (2.0 * eps);
    let rel = (fd - directional).abs() / fd.abs();
    assert!(
        rel < 0.01,
        "finite difference {fd}, gradient {directional}, relative {rel:e}"
    );
}
