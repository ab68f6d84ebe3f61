use super::*;
use crate::domain::DomainKind;
use crate::flow::AnalyticVelocity;
use crate::scalar::Mat;
use std::f64::consts::PI;

fn zero_flow(dim: usize, nu: f64) -> AnalyticVelocity<impl Fn(&Point<f64>, f64) -> Point<f64>, impl Fn(&Point<f64>, f64) -> Mat<f64>> {
    AnalyticVelocity {
        dim,
        nu,
        velocity: |_: &Point<f64>, _: f64| [0.0; 3],
        gradient: |_: &Point<f64>, _: f64| [[0.0; 3]; 3],
    }
}

fn slab() -> DomainSpec<f64> {
    DomainSpec::new(DomainKind::ChannelX, &[0.0, 0.0], &[1.0, 1.0]).unwrap()
}

#[test]
fn constant_data_is_exact() {
    let data = BoundaryData::<f64>::new().with_theta0(|_| 2.5).with_g(|_, _| 2.5);
    let cfg = McConfig::new(500, 0.01, 3);
    let e = estimate_scalar_fk(&zero_flow(2, 1.0), &slab(), &data, &[0.5, 0.2], 0.3, &cfg).unwrap();
    assert_eq!(e.mean, vec![2.5]);
    assert_eq!(e.std_error, vec![0.0]);
    assert_eq!(e.n_samples, 500);
}

#[test]
fn constant_potential_decays_exponentially() {
    let data = BoundaryData::<f64>::new().with_theta0(|_| 1.0).with_potential(|_, _| 1.5);
    let cfg = McConfig::new(100, 0.01, 3);
    let torus = DomainSpec::torus(2);
    let e = estimate_scalar_fk(&zero_flow(2, 0.4), &torus, &data, &[1.0, 1.0], 0.5, &cfg).unwrap();
    assert!((e.mean[0] - (-0.75f64).exp()).abs() < 1e-12);
    assert_eq!(e.std_error[0], 0.0);
}

#[test]
fn heat_slab_value() {
    let data = BoundaryData::<f64>::new().with_theta0(|x| (PI * x[1]).sin()).with_g(|_, _| 0.0);
    let cfg = McConfig::new(20_000, 1e-3, 11);
    let e = estimate_scalar_fk(&zero_flow(2, 1.0), &slab(), &data, &[0.5, 0.5], 0.1, &cfg).unwrap();
    let oracle = (-PI * PI * 0.1).exp();
    assert!((e.mean[0] - oracle).abs() < 3.0 * e.std_error[0] + 5e-3, "{} vs {oracle}", e.mean[0]);
}

#[test]
fn missing_data_is_a_usage_error() {
    let cfg = McConfig::new(10, 0.01, 3);
    let r = estimate_scalar_fk(&zero_flow(2, 1.0), &slab(), &BoundaryData::<f64>::new().with_theta0(|_| 1.0), &[0.5, 0.5], 0.1, &cfg);
    assert!(matches!(r, Err(Error::Usage(_))));
    let g = Grid::new(&slab(), &[4, 5]).unwrap();
    let r = estimate_weber_velocity(&zero_flow(2, 1.0), &slab(), &BoundaryData::<f64>::new().with_u0(|_| [0.0; 3]), &g, 0.1, &cfg);
    assert!(matches!(r, Err(Error::Usage(_))));
}

fn tg0(x: &Point<f64>) -> Point<f64> {
    [x[0].sin() * x[1].cos(), -x[0].cos() * x[1].sin(), 0.0]
}

#[test]
fn weber_single_step_reproduces_u0() {
    let torus = DomainSpec::torus(2);
    let g = Grid::new(&torus, &[8, 8]).unwrap();
    let data = BoundaryData::<f64>::new().with_u0(tg0);
    let cfg = McConfig::new(200, 1e-4, 1);
    let e = estimate_weber_velocity(&zero_flow(2, 0.1), &torus, &data, &g, 1e-4, &cfg).unwrap();
    let exact = VectorField::from_fn(g, tg0);
    assert!(e.mean.axpby(1.0, &exact, -1.0).max_abs() < 1e-3);
}

#[test]
fn weber_heat_semigroup() {
    let torus = DomainSpec::torus(2);
    let g = Grid::new(&torus, &[4, 4]).unwrap();
    let data = BoundaryData::<f64>::new().with_u0(tg0);
    let (nu, t) = (0.2, 0.5);
    let cfg = McConfig::new(4000, 0.05, 2);
    let e = estimate_weber_velocity(&zero_flow(2, nu), &torus, &data, &g, t, &cfg).unwrap();
    let decay = (-2.0 * nu * t).exp();
    for i in 0..g.len() {
        let want = tg0(&g.node(i));
        for c in 0..2 {
            let (m, se) = (e.mean.component(c).values()[i], e.std_error.component(c).values()[i]);
            assert!((m - decay * want[c]).abs() <= 4.0 * se + 1e-12, "node {i} comp {c}: {m} vs {}", decay * want[c]);
        }
    }
}

#[test]
fn vorticity_from_wall_start_is_the_trace() {
    let data = BoundaryData::<f64>::new().with_omega_tilde(|x, t| [x[0] + 10.0 * t, 0.0, 0.0]);
    let cfg = McConfig::new(50, 0.01, 9);
    let e = estimate_vorticity(&zero_flow(2, 1.0), &slab(), &data, &[0.25, 0.0], 0.2, &cfg).unwrap();
    assert!((e.mean[0] - 2.25).abs() < 1e-12);
    assert_eq!(e.std_error[0], 0.0);
}

#[test]
fn vorticity_heat_decay_on_torus() {
    let torus = DomainSpec::torus(2);
    let data = BoundaryData::<f64>::new().with_omega_tilde(|x, _| [2.0 * x[0].sin() * x[1].sin(), 0.0, 0.0]);
    let (nu, t) = (0.3, 0.4);
    let cfg = McConfig::new(20_000, 0.02, 4);
    let x = [1.0, 2.0];
    let e = estimate_vorticity(&zero_flow(2, nu), &torus, &data, &x, t, &cfg).unwrap();
    let want = (-2.0 * nu * t).exp() * 2.0 * x[0].sin() * x[1].sin();
    assert!((e.mean[0] - want).abs() < 3.0 * e.std_error[0], "{} vs {want}", e.mean[0]);
}

#[test]
fn z_invariant_3d_matches_2d() {
    let nu = 0.1;
    let flow = |dim: usize| AnalyticVelocity {
        dim,
        nu,
        velocity: |x: &Point<f64>, _: f64| tg0(x),
        gradient: |x: &Point<f64>, _: f64| {
            let (s0, c0, s1, c1) = (x[0].sin(), x[0].cos(), x[1].sin(), x[1].cos());
            [[c0 * c1, -s0 * s1, 0.0], [s0 * s1, -c0 * c1, 0.0], [0.0; 3]]
        },
    };
    let w0 = |x: &Point<f64>| 2.0 * x[0].sin() * x[1].sin();
    let cfg = McConfig::new(4000, 0.02, 21);
    let d2 = DomainSpec::torus(2);
    let d3 = DomainSpec::torus(3);
    let e2 = estimate_vorticity(&flow(2), &d2, &BoundaryData::<f64>::new().with_omega_tilde(move |x, _| [w0(x), 0.0, 0.0]), &[1.0, 2.0], 0.3, &cfg).unwrap();
    let e3 = estimate_vorticity(&flow(3), &d3, &BoundaryData::<f64>::new().with_omega_tilde(move |x, _| [0.0, 0.0, w0(x)]), &[1.0, 2.0, 0.5], 0.3, &cfg).unwrap();
    assert!((e2.mean[0] - e3.mean[2]).abs() <= 3.0 * e2.std_error[0].max(e3.std_error[2]));
    assert!(e3.mean[0].abs() < 1e-12 && e3.mean[1].abs() < 1e-12);
}

#[test]
fn circulation_of_zero_and_gradient_data() {
    let torus = DomainSpec::torus(2);
    let curve = CurveSpec::square([PI, PI], PI, 64).unwrap();
    let cfg = McConfig::new(50, 0.02, 5);
    let zero = BoundaryData::<f64>::new().with_u0(|_| [0.0; 3]);
    let e = estimate_circulation(&zero_flow(2, 0.1), &torus, &zero, &curve, 0.2, &cfg).unwrap();
    assert_eq!((e.mean[0], e.std_error[0]), (0.0, 0.0));
    // u0 = ∇(sin x sin y): every transported loop integral is a quadrature error.
    let grad = BoundaryData::<f64>::new().with_u0(|x| [x[0].cos() * x[1].sin(), x[0].sin() * x[1].cos(), 0.0]);
    let e = estimate_circulation(&zero_flow(2, 0.1), &torus, &grad, &curve, 0.2, &cfg).unwrap();
    assert!(e.mean[0].abs() < 1e-3 && e.std_error[0] < 1e-3);
    let walled = estimate_circulation(&zero_flow(2, 0.1), &slab(), &zero, &curve, 0.2, &cfg);
    assert!(matches!(walled, Err(Error::Usage(_))));
}

#[test]
fn loop_integral_of_rotation_is_twice_the_area() {
    let curve = CurveSpec::<f64>::square([0.0, 0.0], 2.0, 4).unwrap();
    let v = loop_integral(&curve.nodes(), |x| [-x[1], x[0], 0.0], 2);
    assert!((v - 8.0).abs() < 1e-12);
}

#[test]
fn martingale_at_top_level_is_exact() {
    let data = BoundaryData::<f64>::new().with_wbar(|x, t| [x[0] * t, x[1], 0.0]);
    let cfg = McConfig::new(20, 0.01, 5);
    let e = check_martingale_identity(&zero_flow(2, 1.0), &slab(), &data, &[0.5, 0.5], 0.2, &[0.2, 0.1], &cfg).unwrap();
    assert_eq!(e[0].mean, vec![0.1, 0.5]);
    assert_eq!(e[0].std_error, vec![0.0, 0.0]);
    assert!(e[1].std_error[1] > 0.0);
}

#[test]
fn worker_count_does_not_change_results() {
    let data = BoundaryData::<f64>::new().with_theta0(|x| (PI * x[1]).sin()).with_g(|_, _| 0.0);
    let mut cfg = McConfig::new(3000, 1e-2, 11);
    let a = estimate_scalar_fk(&zero_flow(2, 1.0), &slab(), &data, &[0.5, 0.3], 0.1, &cfg).unwrap();
    cfg.workers = 3;
    let b = estimate_scalar_fk(&zero_flow(2, 1.0), &slab(), &data, &[0.5, 0.3], 0.1, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn antithetic_pairs_cancel_odd_data() {
    let torus = DomainSpec::torus(2);
    let data = BoundaryData::<f64>::new().with_theta0(|x| x[0] - 1.0);
    let mut cfg = McConfig::new(1000, 0.01, 2);
    cfg.antithetic = true;
    let e = estimate_scalar_fk(&zero_flow(2, 0.5), &torus, &data, &[1.0, 1.0], 0.1, &cfg).unwrap();
    assert!(e.mean[0].abs() < 1e-14);
}
