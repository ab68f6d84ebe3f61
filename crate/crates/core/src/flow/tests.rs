use super::*;
use crate::domain::DomainKind;
use crate::field::{FieldSeries, Grid, VectorField};
use crate::scalar::det;
use proptest::prelude::*;

type Closure = fn(&Point<f64>, f64) -> Point<f64>;
type GradClosure = fn(&Point<f64>, f64) -> Mat<f64>;

fn still(nu: f64) -> AnalyticVelocity<Closure, GradClosure> {
    AnalyticVelocity {
        dim: 2,
        nu,
        velocity: |_, _| [0.0; 3],
        gradient: |_, _| [[0.0; 3]; 3],
    }
}

fn taylor_green(nu: f64) -> AnalyticVelocity<impl Fn(&Point<f64>, f64) -> Point<f64>, impl Fn(&Point<f64>, f64) -> Mat<f64>> {
    AnalyticVelocity {
        dim: 2,
        nu,
        velocity: move |x: &Point<f64>, t: f64| {
            let e = (-2.0 * nu * t).exp();
            [e * x[0].sin() * x[1].cos(), -e * x[0].cos() * x[1].sin(), 0.0]
        },
        gradient: move |x: &Point<f64>, t: f64| {
            let e = (-2.0 * nu * t).exp();
            let (s0, c0, s1, c1) = (x[0].sin(), x[0].cos(), x[1].sin(), x[1].cos());
            [[e * c0 * c1, -e * s0 * s1, 0.0], [e * s0 * s1, -e * c0 * c1, 0.0], [0.0; 3]]
        },
    }
}

fn channel() -> DomainSpec<f64> {
    DomainSpec::new(DomainKind::ChannelX, &[0.0, 0.0], &[1.0, 1.0]).unwrap()
}

#[test]
fn frozen_dynamics() {
    let d = channel();
    let p = simulate_backward(&still(0.0), &d, &[0.3, 0.4], 1.0, 0.0, 0.1, RngStream::new(1, 2), ExitDetection::Bridge).unwrap();
    assert_eq!(p.positions.len(), 11);
    assert!(p.positions.iter().all(|q| q[0] == 0.3 && q[1] == 0.4));
    assert_eq!(p.sigma, 0.0);
    assert!(!p.exited);
    assert_eq!(p.jacobian, identity(2));
}

#[test]
fn drift_parallel_to_walls_never_exits() {
    let d = channel();
    let src = AnalyticVelocity {
        dim: 2,
        nu: 0.0,
        velocity: |_: &Point<f64>, _: f64| [2.0, 0.0, 0.0],
        gradient: |_: &Point<f64>, _: f64| [[0.0; 3]; 3],
    };
    let p = simulate_backward(&src, &d, &[0.5, 0.5], 1.0, 0.0, 0.125, RngStream::new(0, 0), ExitDetection::Segment).unwrap();
    for (k, q) in p.positions.iter().enumerate() {
        assert!((q[0] - (0.5 - 2.0 * 0.125 * k as f64)).abs() < 1e-14);
        assert_eq!(q[1], 0.5);
    }
    assert!(!p.exited && p.sigma == 0.0);
}

#[test]
fn pure_noise_is_summed_increments() {
    let d = DomainSpec::<f64>::torus(2);
    let g = Grid::new(&d, &[8, 8]).unwrap();
    let series = FieldSeries::steady(VectorField::zeros(g), 0.3).unwrap();
    let dt = 0.01;
    let rng = RngStream::new(42, 9);
    let p = simulate_backward(&series, &d, &[1.0, 2.0], 0.5, 0.0, dt, rng, ExitDetection::Segment).unwrap();
    let sd = (2.0f64 * 0.3 * dt).sqrt();
    let mut want = [1.0, 2.0];
    for k in (0..50).rev() {
        let z: [f64; 4] = rng.normals(k);
        want[0] = want[0] - 0.0 * dt - sd * z[0];
        want[1] = want[1] - 0.0 * dt - sd * z[1];
    }
    assert_eq!(&p.final_position()[..2], &want);
}

#[test]
fn identical_streams_give_identical_paths() {
    let d = channel();
    let src = taylor_green(0.5);
    let run = || simulate_backward(&src, &d, &[0.2, 0.7], 0.3, 0.0, 0.01, RngStream::new(5, 77), ExitDetection::Bridge).unwrap();
    assert_eq!(run(), run());
}

#[test]
fn semigroup_positions_bit_for_bit() {
    let d = DomainSpec::<f64>::torus(2);
    let src = taylor_green(0.1);
    let rng = RngStream::new(3, 11);
    let dt = 0.01;
    let whole = simulate_backward(&src, &d, &[1.0, 2.0], 0.6, 0.1, dt, rng, ExitDetection::Segment).unwrap();
    let first = simulate_backward(&src, &d, &[1.0, 2.0], 0.6, 0.3, dt, rng, ExitDetection::Segment).unwrap();
    let mid = *first.final_position();
    let second = simulate_backward(&src, &d, &mid[..2], 0.3, 0.1, dt, rng, ExitDetection::Segment).unwrap();
    assert_eq!(whole.final_position(), second.final_position());
    assert_eq!(whole.positions[30], mid);
}

#[test]
fn times_off_the_step_grid_rejected() {
    let d = channel();
    let r = simulate_backward(&still(1.0), &d, &[0.5, 0.5], 0.105, 0.0, 0.01, RngStream::new(0, 0), ExitDetection::Segment);
    assert!(matches!(r, Err(crate::Error::Usage(_))));
    let r = simulate_backward(&still(1.0), &d, &[0.5, 0.5], 0.1, 0.0, 0.0, RngStream::new(0, 0), ExitDetection::Segment);
    assert!(r.is_err());
    let r = simulate_backward(&still(1.0), &d, &[0.5, 1.5], 0.1, 0.0, 0.01, RngStream::new(0, 0), ExitDetection::Segment);
    assert!(r.is_err());
}

#[test]
fn exit_point_on_wall_and_sigma_in_range() {
    let d = channel();
    for mode in [ExitDetection::Segment, ExitDetection::Bridge, ExitDetection::ShiftedBoundary] {
        let mut exits = 0;
        for id in 0..200 {
            let p = simulate_backward(&still(1.0), &d, &[0.5, 0.1], 0.2, 0.0, 0.01, RngStream::new(8, id), mode).unwrap();
            assert!(p.sigma >= 0.0 && p.sigma < 0.2);
            assert_eq!(p.exited, p.sigma > 0.0);
            if let Some(e) = p.exit_point {
                exits += 1;
                assert!(e[1] == 0.0 || e[1] == 1.0);
            }
        }
        assert!(exits > 100, "{mode:?}: {exits}");
    }
}

#[test]
fn constant_shear_jacobian() {
    let gamma = 1.7f64;
    let g = [[0.0, gamma, 0.0], [0.0; 3], [0.0; 3]];
    let j = transport_jacobian(&vec![g; 11], 0.05, 2);
    assert!((j[0][1] + gamma * 0.5).abs() < 1e-14);
    assert_eq!((j[0][0], j[1][0], j[1][1]), (1.0, 0.0, 1.0));
    assert_eq!(transport_jacobian::<f64>(&[], 0.1, 2), identity(2));
}

#[test]
fn shear_jacobian_along_a_path() {
    let d = DomainSpec::<f64>::torus(2);
    let src = AnalyticVelocity {
        dim: 2,
        nu: 0.2,
        velocity: |x: &Point<f64>, _: f64| [0.8 * x[1], 0.0, 0.0],
        gradient: |_: &Point<f64>, _: f64| [[0.0, 0.8, 0.0], [0.0; 3], [0.0; 3]],
    };
    let p = simulate_backward(&src, &d, &[1.0, 1.0], 0.5, 0.0, 0.01, RngStream::new(1, 1), ExitDetection::Segment).unwrap();
    assert!((p.jacobian[0][1] + 0.4).abs() < 1e-12);
}

#[test]
fn volume_defect_shrinks_with_dt() {
    let d = DomainSpec::<f64>::torus(2);
    let src = taylor_green(0.1);
    let median = |dt: f64| {
        let mut v: Vec<f64> = (0..41)
            .map(|id| {
                let p = simulate_backward(&src, &d, &[1.1, 2.3], 0.5, 0.0, dt, RngStream::new(2, id), ExitDetection::Segment).unwrap();
                (det(&p.jacobian, 2) - 1.0).abs()
            })
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[20]
    };
    let (a, b) = (median(0.02), median(0.01));
    assert!(a <= 10.0 * 0.02 && a / b > 1.7, "{a} {b}");
}

#[test]
fn trace_dump_has_one_line_per_position() {
    let d = channel();
    let p = simulate_backward(&still(0.0), &d, &[0.3, 0.4], 0.3, 0.0, 0.1, RngStream::new(1, 2), ExitDetection::Segment).unwrap();
    let mut buf = Vec::new();
    p.write_trace(&mut buf).unwrap();
    let dump = crate::field::dump::read(buf.as_slice()).unwrap();
    assert_eq!(dump.values.len(), 4);
    assert_eq!(dump.values[3], vec![0.3, 0.4]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shrinking_walls_never_delays_exit(
        y in 0.2f64..0.8,
        id in 0u64..1000,
        delta in 0.0f64..0.15,
        mode in prop_oneof![Just(ExitDetection::Segment), Just(ExitDetection::Bridge), Just(ExitDetection::ShiftedBoundary)],
    ) {
        let big = DomainSpec::new(DomainKind::ChannelX, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let small = big.shrunk(delta).unwrap();
        let src = still(0.5);
        let rng = RngStream::new(17, id);
        let a = simulate_backward(&src, &big, &[0.5, y], 0.2, 0.0, 0.01, rng, mode).unwrap();
        prop_assume!(small.contains_point(&[0.5, y, 0.0]));
        let b = simulate_backward(&src, &small, &[0.5, y], 0.2, 0.0, 0.01, rng, mode).unwrap();
        prop_assert!(b.sigma >= a.sigma);
    }
}
