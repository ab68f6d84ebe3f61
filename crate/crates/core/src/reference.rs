//! Closed-form solutions and a finite-difference vorticity solver used as
//! oracles. Nothing here depends on the Monte Carlo code.

use rustfft::num_complex::Complex;

use crate::domain::{DomainKind, DomainSpec};
use crate::error::{usage, Result};
use crate::field::ops::{check_grid, diff_axis};
use crate::field::spectral::{compact_laplacian_symbol, AxisTransforms};
use crate::field::{inverse_curl, Curl, FieldSeries, Grid, ScalarField};
use crate::scalar::{Point, Real};

/// Decaying Taylor–Green vortex on `[0, 2π]²`.
pub fn taylor_green<F: Real>(nu: F, t: F, x: &[F]) -> Point<F> {
    let e = (-F::lit(2.0) * nu * t).exp();
    [e * x[0].sin() * x[1].cos(), -e * x[0].cos() * x[1].sin(), F::zero()]
}

/// Velocity gradient `G[i][j] = ∂u_i/∂x_j` of [`taylor_green`].
pub fn taylor_green_gradient<F: Real>(nu: F, t: F, x: &[F]) -> [[F; 3]; 3] {
    let e = (-F::lit(2.0) * nu * t).exp();
    let (s0, c0, s1, c1) = (x[0].sin(), x[0].cos(), x[1].sin(), x[1].cos());
    let z = F::zero();
    [[e * c0 * c1, -e * s0 * s1, z], [e * s0 * s1, -e * c0 * c1, z], [z; 3]]
}

pub fn taylor_green_vorticity<F: Real>(nu: F, t: F, x: &[F]) -> F {
    F::lit(2.0) * (-F::lit(2.0) * nu * t).exp() * x[0].sin() * x[1].sin()
}

pub fn taylor_green_pressure<F: Real>(nu: F, t: F, x: &[F]) -> F {
    (-F::lit(4.0) * nu * t).exp() * ((x[0] + x[0]).cos() + (x[1] + x[1]).cos()) / F::lit(4.0)
}

/// Unidirectional decaying shear in the channel `0 < y < 1`: velocity and vorticity.
pub fn channel_decay<F: Real>(nu: F, t: F, y: F) -> (Point<F>, F) {
    let e = (-nu * F::PI() * F::PI() * t).exp();
    let py = F::PI() * y;
    ([e * py.sin(), F::zero(), F::zero()], -F::PI() * e * py.cos())
}

/// Sine series `Σ a_k e^{−ν k² π² t} sin(kπy)`, with `coefficients[k-1] = a_k`.
pub fn heat_slab<F: Real>(nu: F, t: F, y: F, coefficients: &[F]) -> F {
    coefficients
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let k = F::from_usize_lossy(i + 1) * F::PI();
            a * (-nu * k * k * t).exp() * (k * y).sin()
        })
        .fold(F::zero(), |s, v| s + v)
}

/// Two-dimensional periodic vorticity–streamfunction solver: conservative
/// centered advection (explicit) and compact-stencil diffusion (implicit).
/// Returns the velocity after every step, starting with `t = 0`.
pub fn fd_vorticity_stream<F: Real>(omega0: &ScalarField<F>, nu: F, t_final: F, dt: F) -> Result<FieldSeries<F>> {
    fd_vorticity_run(omega0, nu, t_final, dt, |_| {})
}

/// [`fd_vorticity_stream`], also handing every vorticity iterate to `visit`.
fn fd_vorticity_run<F: Real>(
    omega0: &ScalarField<F>,
    nu: F,
    t_final: F,
    dt: F,
    mut visit: impl FnMut(&ScalarField<F>),
) -> Result<FieldSeries<F>> {
    let grid = *omega0.grid();
    let domain = torus_of(&grid)?;
    check_grid(&grid, &domain)?;
    if !(dt > F::zero()) || !(t_final >= F::zero()) {
        return usage("step and final time must be positive");
    }
    let steps = (t_final / dt).round().to_usize().unwrap_or(0);
    if (F::from_usize_lossy(steps) * dt - t_final).abs() > F::lit(1e-9) * t_final.max(dt) {
        return usage(format!("final time {t_final} is not a multiple of the step {dt}"));
    }
    let tr = AxisTransforms::new(&grid);
    let lap: Vec<F> = (0..grid.len())
        .map(|i| {
            let m = grid.multi_index(i);
            compact_laplacian_symbol(&grid, 0, m[0]) + compact_laplacian_symbol(&grid, 1, m[1])
        })
        .collect();
    let mut omega = omega0.clone();
    let mut u = inverse_curl(&Curl::Scalar(omega.clone()), &domain)?;
    let hmin = grid.spacing()[0].min(grid.spacing()[1]);
    let mut snaps = vec![(F::zero(), u.clone())];
    for k in 0..steps {
        let umax = u.max_abs();
        if umax * dt > hmin {
            return usage(format!(
                "step {dt} violates the advective CFL limit; use dt <= {:e}",
                hmin / umax
            ));
        }
        let fx: Vec<F> = (0..grid.len()).map(|i| u.component(0).values()[i] * omega.values()[i]).collect();
        let fy: Vec<F> = (0..grid.len()).map(|i| u.component(1).values()[i] * omega.values()[i]).collect();
        let (dx, dy) = (diff_axis(&grid, &fx, 0), diff_axis(&grid, &fy, 1));
        let rhs: Vec<F> = (0..grid.len()).map(|i| omega.values()[i] - dt * (dx[i] + dy[i])).collect();
        let mut spec = tr.forward(&rhs);
        for (s, &l) in spec.iter_mut().zip(&lap) {
            *s = *s / Complex::new(F::one() - dt * nu * l, F::zero());
        }
        omega = ScalarField::from_values(grid, tr.inverse(spec))?;
        visit(&omega);
        u = inverse_curl(&Curl::Scalar(omega.clone()), &domain)?;
        snaps.push((F::from_usize_lossy(k + 1) * dt, u.clone()));
    }
    FieldSeries::new(snaps, nu)
}

fn torus_of<F: Real>(grid: &Grid<F>) -> Result<DomainSpec<F>> {
    if grid.dim() != 2 || !(0..2).all(|a| grid.is_periodic(a)) {
        return usage("the vorticity–streamfunction solver needs a 2D periodic grid");
    }
    let lower = grid.origin().to_vec();
    let upper: Vec<F> = (0..2)
        .map(|a| lower[a] + grid.spacing()[a] * F::from_usize_lossy(grid.shape()[a]))
        .collect();
    DomainSpec::new(DomainKind::Torus, &lower, &upper)
}
