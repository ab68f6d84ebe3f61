use slns::estimator::{estimate_scalar_fk, estimate_weber_velocity};
use slns::field::{divergence, leray_project};
use slns::reference::{channel_decay, taylor_green};
use slns::solver::{
    solve_periodic_ns_logged, solve_wbar_pde, verify_representation, Problem, RepresentationKind,
};
use slns::{BoundaryData, DomainKind, DomainSpec, FieldSeries, Grid, McConfig, SolverConfig, VectorField};

fn tg_cfg(n: usize, shape: usize) -> SolverConfig<f64> {
    SolverConfig {
        nu: 0.1,
        t_final: 0.2,
        dt: 0.025,
        dt_snap: 0.05,
        shape: vec![shape, shape],
        n_paths: n,
        picard_iters: 4,
        picard_tol: 1e-4,
        seed: 21,
        workers: 1,
        exit: Default::default(),
    }
}

#[test]
fn periodic_solver_follows_taylor_green() {
    let d = DomainSpec::<f64>::torus(2);
    let cfg = tg_cfg(300, 16);
    let g = Grid::new(&d, &cfg.shape).unwrap();
    let u0 = VectorField::from_fn(g, |x| taylor_green(0.1, 0.0, x));
    let (series, log) = solve_periodic_ns_logged(&u0, &cfg, &d).unwrap();
    assert_eq!(series.len(), 5);
    let mut last = f64::INFINITY;
    for (t, u) in series.snapshots() {
        let exact = VectorField::from_fn(g, |x| taylor_green(0.1, t, x));
        assert!(u.relative_l2_error(&exact) < 0.05, "t = {t}");
        assert!(divergence(u, &d).unwrap().max_abs() < 1e-10);
        assert!(u.l2_norm() <= last * 1.02);
        last = u.l2_norm();
    }
    // Common random numbers make the Picard map contract quickly.
    for deltas in &log {
        assert!(deltas.windows(2).all(|w| w[1] <= w[0]), "{deltas:?}");
    }
}

#[test]
fn periodic_solver_projects_its_start() {
    let d = DomainSpec::<f64>::torus(2);
    let cfg = SolverConfig { t_final: 0.05, ..tg_cfg(50, 8) };
    let g = Grid::new(&d, &cfg.shape).unwrap();
    let grad = VectorField::from_fn(g, |x| [x[0].cos(), x[1].cos(), 0.0]);
    let (series, _) = solve_periodic_ns_logged(&grad, &cfg, &d).unwrap();
    assert!(series.snapshot(0).1.max_abs() < 1e-12);
}

#[test]
fn estimates_do_not_depend_on_worker_count() {
    let d = DomainSpec::<f64>::torus(2);
    let g = Grid::new(&d, &[8, 8]).unwrap();
    let series = FieldSeries::new(
        (0..=4).map(|k| {
            let t = k as f64 * 0.05;
            (t, VectorField::from_fn(g, |x| taylor_green(0.1, t, x)))
        })
        .collect(),
        0.1,
    )
    .unwrap();
    let data = BoundaryData::new().with_u0(|x| taylor_green(0.1, 0.0, x));
    let run = |workers| {
        let cfg = McConfig { workers, ..McConfig::new(64, 0.05, 4) };
        estimate_weber_velocity(&series, &d, &data, &g, 0.2, &cfg).unwrap()
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.mean, b.mean);
    assert_eq!(a.std_error, b.std_error);
}

#[test]
fn heat_slab_point_reaches_oracle_band() {
    let d = DomainSpec::new(DomainKind::ChannelX, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
    let g = Grid::new(&d, &[4, 9]).unwrap();
    let series = FieldSeries::steady(VectorField::zeros(g), 1.0).unwrap();
    let data = BoundaryData::new()
        .with_theta0(|x: &slns::Point<f64>| (std::f64::consts::PI * x[1]).sin())
        .with_g(|_, _| 0.0);
    let est = estimate_scalar_fk(&series, &d, &data, &[0.5, 0.3], 0.1, &McConfig::new(20_000, 0.001, 8)).unwrap();
    let oracle: f64 = slns::reference::heat_slab(1.0, 0.1, 0.3, &[1.0]);
    assert!((est.mean[0] - oracle).abs() <= 3.0 * est.std_error[0] + 5e-3);
}

#[test]
fn wall_trace_matches_boundary_rows() {
    let d = DomainSpec::new(DomainKind::ChannelX, &[0.0, 0.0], &[2.0, 1.0]).unwrap();
    let g = Grid::new(&d, &[8, 17]).unwrap();
    let series = FieldSeries::new(
        (0..=2).map(|k| {
            let t = k as f64 * 0.01;
            (t, VectorField::from_fn(g, |x| channel_decay(1.0, t, x[1]).0))
        })
        .collect(),
        1.0,
    )
    .unwrap();
    let cfg = SolverConfig { nu: 1.0, t_final: 0.02, dt: 0.0005, dt_snap: 0.01, shape: vec![8, 17], ..tg_cfg(2, 8) };
    let sol = solve_wbar_pde(&series, &d, series.snapshot(0).1, &cfg).unwrap();
    let (t, w) = sol.wbar.snapshot(2);
    for i in 0..8 {
        let x = g.node(g.flat_index(&[i, 16]));
        let tr = sol.w_tilde.at(&x, t);
        let node = w.at(g.flat_index(&[i, 16]));
        assert!((tr[0] - node[0]).abs() < 1e-12 && tr[1] == 0.0);
    }
    // The weight's projection is the reference velocity.
    let p = leray_project(w, &d).unwrap();
    let u = series.snapshot(2).1;
    assert!(p.relative_l2_error(u) < 0.02);
}

#[test]
fn verification_is_pure() {
    let cfg = SolverConfig {
        nu: 0.1,
        t_final: 0.1,
        dt: 0.05,
        dt_snap: 0.05,
        shape: vec![8, 8],
        n_paths: 20,
        ..tg_cfg(20, 8)
    };
    let a = verify_representation(RepresentationKind::Weber, Problem::TaylorGreen, &cfg).unwrap();
    let b = verify_representation(RepresentationKind::Weber, Problem::TaylorGreen, &SolverConfig { workers: 2, ..cfg.clone() }).unwrap();
    assert_eq!(a, b);
    assert!(a.dump.as_deref().unwrap().starts_with("shape 8 8"));
}
