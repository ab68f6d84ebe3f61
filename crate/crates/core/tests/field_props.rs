use proptest::prelude::*;
use slns::field::ops::interior_divergence_max;
use slns::field::{curl, divergence, dump, gradient, inverse_curl, leray_project};
use slns::{DomainKind, DomainSpec, Grid, RngStream, ScalarField, VectorField};

fn random_scalar(g: Grid<f64>, seed: u64, stream: u64) -> ScalarField<f64> {
    let rng = RngStream::new(seed, stream);
    ScalarField::from_values(g, (0..g.len() as u64).map(|k| rng.normals::<f64>(k)[1]).collect()).unwrap()
}

fn random_vector(g: Grid<f64>, seed: u64) -> VectorField<f64> {
    VectorField::from_components((0..g.dim()).map(|c| random_scalar(g, seed, c as u64)).collect()).unwrap()
}

/// Random trigonometric field with wavenumbers up to 3.
fn smooth_vector(g: Grid<f64>, seed: u64) -> VectorField<f64> {
    let rng = RngStream::new(seed, 99);
    let coef: Vec<[f64; 4]> = (0..49).map(|k| rng.normals::<f64>(k)).collect();
    VectorField::from_fn(g, |x| {
        let mut v = [0.0; 3];
        for (i, c) in coef.iter().enumerate() {
            let (k1, k2) = ((i / 7) as f64 - 3.0, (i % 7) as f64 - 3.0);
            let ph = k1 * x[0] + k2 * x[1];
            v[0] += c[0] * ph.cos() + c[1] * ph.sin();
            v[1] += c[2] * ph.cos() + c[3] * ph.sin();
        }
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn torus_projection_identities(seed in any::<u64>(), n in prop_oneof![Just(8usize), Just(12), Just(16)]) {
        let d = DomainSpec::<f64>::torus(2);
        let g = Grid::new(&d, &[n, n + 4]).unwrap();
        let v = random_vector(g, seed);
        let p = leray_project(&v, &d).unwrap();
        prop_assert!(leray_project(&p, &d).unwrap().axpby(1.0, &p, -1.0).max_abs() < 1e-10);
        prop_assert!(divergence(&p, &d).unwrap().max_abs() < 1e-10);
        let phi = random_scalar(g, seed, 9);
        prop_assert!(leray_project(&gradient(&phi, &d).unwrap(), &d).unwrap().max_abs() < 1e-10);
        // Projection never increases the discrete L2 norm.
        prop_assert!(p.l2_norm() <= v.l2_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn channel_projection_is_idempotent_and_wall_tight(seed in any::<u64>()) {
        let d = DomainSpec::new(DomainKind::ChannelX, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let g = Grid::new(&d, &[8, 9]).unwrap();
        let v = random_vector(g, seed);
        let p = leray_project(&v, &d).unwrap();
        let pp = leray_project(&p, &d).unwrap();
        prop_assert!(pp.axpby(1.0, &p, -1.0).max_abs() < 1e-8 * (1.0 + p.max_abs()));
        for i in 0..8 {
            prop_assert!(p.at(g.flat_index(&[i, 0]))[1].abs() < 1e-9);
            prop_assert!(p.at(g.flat_index(&[i, 8]))[1].abs() < 1e-9);
        }
        prop_assert!(interior_divergence_max(&p, &d).unwrap() < 1e-8);
    }

    #[test]
    fn affine_fields_interpolate_exactly(
        a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0,
        x in 0.0f64..1.0, y in 0.0f64..1.0,
    ) {
        let d = DomainSpec::new(DomainKind::Rectangle, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let g = Grid::new(&d, &[7, 9]).unwrap();
        let f = ScalarField::from_fn(g, |p| a + b * p[0] + c * p[1]);
        prop_assert!((f.interpolate(&[x, y]) - (a + b * x + c * y)).abs() < 1e-12);
    }

    #[test]
    fn periodic_interpolation_ignores_whole_periods(seed in any::<u64>(), x in 0.0f64..6.0, y in 0.0f64..6.0, k in -3i32..3) {
        let d = DomainSpec::<f64>::torus(2);
        let g = Grid::new(&d, &[8, 8]).unwrap();
        let f = random_scalar(g, seed, 0);
        let shift = k as f64 * 2.0 * std::f64::consts::PI;
        prop_assert!((f.interpolate(&[x, y]) - f.interpolate(&[x + shift, y - shift])).abs() < 1e-9);
    }

    #[test]
    fn inverse_curl_undoes_curl_on_mean_free_fields(seed in any::<u64>()) {
        let d = DomainSpec::<f64>::torus(2);
        let g = Grid::new(&d, &[16, 16]).unwrap();
        // Band-limited, divergence-free and mean-free, so curl determines it.
        let mut u = leray_project(&smooth_vector(g, seed), &d).unwrap();
        for c in 0..2 {
            let m = u.component(c).mean();
            u.component_mut(c).values_mut().iter_mut().for_each(|v| *v -= m);
        }
        let w = curl(&u, &d).unwrap();
        let back = inverse_curl(&w, &d).unwrap();
        prop_assert!(back.axpby(1.0, &u, -1.0).max_abs() < 1e-9 * (1.0 + u.max_abs()));
    }
}

#[test]
fn dump_round_trip_through_text() {
    let d = DomainSpec::new(DomainKind::ChannelX, &[0.0, 0.0], &[2.0, 1.0]).unwrap();
    let g = Grid::new(&d, &[4, 5]).unwrap();
    let v = random_vector(g, 3);
    let mut buf = Vec::new();
    dump::write_vector(&mut buf, &v, 0.25).unwrap();
    let back = dump::read(&buf[..]).unwrap();
    assert_eq!(back.shape, vec![4, 5]);
    assert_eq!(back.time, 0.25);
    for (k, row) in back.values.iter().enumerate() {
        assert_eq!(row[0], v.at(k)[0]);
        assert_eq!(row[1], v.at(k)[1]);
    }
}
