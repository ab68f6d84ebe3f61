//! Finite-difference solver for the boundary-weight field `w̄` in a 2D
//! channel:
//!
//! `∂_t w̄ + (u·∇)w̄ − νΔw̄ + (∇ᵀu)w̄ = 0`, `w̄(0) = u₀`,
//!
//! with `w̄₂ = 0` on the walls and the wall vorticity of `w̄` matched to that
//! of `u`, which for `w̄₂ = 0` reads `∂_y w̄₁ = −curl u`.

use crate::domain::{DomainKind, DomainSpec};
use crate::error::{usage, Result};
use crate::field::linalg::solve_tridiagonal;
use crate::field::ops::{check_grid, diff_axis};
use crate::field::{FieldSeries, Grid, ScalarField, VectorField};
use crate::flow::time_index;
use crate::scalar::{Point, Real};

use super::SolverConfig;

/// Wall values of `w̄` at every snapshot.
#[derive(Clone, Debug)]
pub struct WallTrace<F> {
    grid: Grid<F>,
    times: Vec<F>,
    /// `[snapshot][wall (lower, upper)][node along x]`.
    values: Vec<[Vec<Point<F>>; 2]>,
}

impl<F: Real> WallTrace<F> {
    fn new(series: &FieldSeries<F>) -> Self {
        let grid = *series.grid();
        let (nx, ny) = (grid.shape()[0], grid.shape()[1]);
        let values = series
            .snapshots()
            .map(|(_, f)| {
                let row = |j: usize| (0..nx).map(|i| f.at(grid.flat_index(&[i, j]))).collect();
                [row(0), row(ny - 1)]
            })
            .collect();
        Self {
            grid,
            times: series.times().to_vec(),
            values,
        }
    }

    pub fn times(&self) -> &[F] {
        &self.times
    }

    /// Nodal values on the lower (`upper = false`) or upper wall at snapshot `k`.
    pub fn wall(&self, k: usize, upper: bool) -> &[Point<F>] {
        &self.values[k][usize::from(upper)]
    }

    /// Trace at a wall point `x` and time `t`, linear along the wall and in time.
    pub fn at(&self, x: &Point<F>, t: F) -> Point<F> {
        let mid = self.grid.origin()[1] + self.grid.spacing()[1] * F::from_usize_lossy(self.grid.shape()[1] - 1) * F::lit(0.5);
        let side = usize::from(x[1] > mid);
        let nx = self.grid.shape()[0];
        let hx = self.grid.spacing()[0];
        let r = (x[0] - self.grid.origin()[0]) / hx;
        let fl = r.floor();
        let lam = r - fl;
        let i0 = fl.to_i64().unwrap_or(0).rem_euclid(nx as i64) as usize;
        let i1 = (i0 + 1) % nx;
        let along = |k: usize| {
            let v = &self.values[k][side];
            let mut p = v[i0];
            for c in 0..2 {
                p[c] = v[i0][c] + lam * (v[i1][c] - v[i0][c]);
            }
            p
        };
        if self.times.len() == 1 {
            return along(0);
        }
        let dt = self.times[1] - self.times[0];
        let pos = ((t - self.times[0]) / dt).max(F::zero());
        let k = pos.floor().to_usize().unwrap_or(0).min(self.times.len() - 2);
        let theta = (pos - F::from_usize_lossy(k)).min(F::one());
        let (a, b) = (along(k), along(k + 1));
        let mut p = a;
        for c in 0..2 {
            p[c] = a[c] + theta * (b[c] - a[c]);
        }
        p
    }
}

/// `w̄` at the snapshot times of the driving velocity, and its wall trace `w̃`.
#[derive(Clone, Debug)]
pub struct WbarSolution<F> {
    pub wbar: FieldSeries<F>,
    pub w_tilde: WallTrace<F>,
}

/// Largest stable step for the explicit part of the scheme driven by `series`.
pub(super) fn stability_limit<F: Real>(series: &FieldSeries<F>) -> F {
    let grid = series.grid();
    let mut umax = [F::zero(); 2];
    let mut gmax = F::zero();
    for (_, f) in series.snapshots() {
        for c in 0..2 {
            let v = f.component(c).values();
            umax[c] = umax[c].max(v.iter().fold(F::zero(), |m, x| m.max(x.abs())));
            for a in 0..2 {
                let g = diff_axis(grid, v, a);
                gmax = gmax.max(g.iter().fold(F::zero(), |m, x| m.max(x.abs())));
            }
        }
    }
    let (hx, hy) = (grid.spacing()[0], grid.spacing()[1]);
    let rate = F::lit(2.0) * series.nu() / (hx * hx) + umax[0] / hx + umax[1] / hy + gmax + gmax;
    F::lit(0.9) / rate
}

/// Compact periodic second difference along x.
fn second_diff_x<F: Real>(grid: &Grid<F>, v: &[F]) -> Vec<F> {
    let (nx, ny) = (grid.shape()[0], grid.shape()[1]);
    let hx = grid.spacing()[0];
    let inv = F::one() / (hx * hx);
    let mut out = vec![F::zero(); v.len()];
    for i in 0..nx {
        let (l, r) = ((i + nx - 1) % nx, (i + 1) % nx);
        for j in 0..ny {
            out[i * ny + j] = (v[l * ny + j] - (v[i * ny + j] + v[i * ny + j]) + v[r * ny + j]) * inv;
        }
    }
    out
}

pub fn solve_wbar_pde<F: Real>(
    series: &FieldSeries<F>,
    domain: &DomainSpec<F>,
    u0: &VectorField<F>,
    cfg: &SolverConfig<F>,
) -> Result<WbarSolution<F>> {
    cfg.validate()?;
    if domain.kind() != DomainKind::ChannelX || domain.dim() != 2 {
        return usage("the boundary-weight solver supports the 2D channel only");
    }
    let grid = *series.grid();
    check_grid(&grid, domain)?;
    if !u0.grid().same_layout(&grid) {
        return usage("u0 and the velocity series live on different grids");
    }
    if series.is_steady() {
        return usage("the boundary-weight solver needs a time-dependent series");
    }
    let nu = series.nu();
    let dt = cfg.dt;
    let t_end = series.last_time();
    if series.first_time() != F::zero() {
        return usage("the velocity series must start at t = 0");
    }
    let steps = time_index(t_end, dt)?;
    let snap_every = time_index(series.times()[1] - series.times()[0], dt)?;
    let (nx, ny) = (grid.shape()[0], grid.shape()[1]);
    let len = grid.len();

    let limit = stability_limit(series);
    if dt > limit {
        return usage(format!("dt = {dt} violates the stability limit; use dt <= {limit:e}"));
    }

    let hy = grid.spacing()[1];
    let c = dt * nu / (hy * hy);
    let mut a = u0.component(0).values().to_vec();
    let mut b = u0.component(1).values().to_vec();
    let mut snaps = vec![(F::zero(), u0.clone())];
    for n in 0..steps {
        let t_now = F::from_u64(n).unwrap() * dt;
        let t_new = t_now + dt;
        let u = series.field_at(t_now);
        let (u1, u2) = (u.component(0).values(), u.component(1).values());
        let g: Vec<Vec<Vec<F>>> = (0..2)
            .map(|i| (0..2).map(|j| diff_axis(&grid, u.component(i).values(), j)).collect())
            .collect();
        let (ax, ay) = (diff_axis(&grid, &a, 0), diff_axis(&grid, &a, 1));
        let (bx, by) = (diff_axis(&grid, &b, 0), diff_axis(&grid, &b, 1));
        let (axx, bxx) = (second_diff_x(&grid, &a), second_diff_x(&grid, &b));
        let mut ra = vec![F::zero(); len];
        let mut rb = vec![F::zero(); len];
        for k in 0..len {
            let adv_a = u1[k] * ax[k] + u2[k] * ay[k];
            let adv_b = u1[k] * bx[k] + u2[k] * by[k];
            let str_a = g[0][0][k] * a[k] + g[1][0][k] * b[k];
            let str_b = g[0][1][k] * a[k] + g[1][1][k] * b[k];
            ra[k] = a[k] - dt * (adv_a + str_a) + dt * nu * axx[k];
            rb[k] = b[k] - dt * (adv_b + str_b) + dt * nu * bxx[k];
        }
        // Wall vorticity of the velocity at the new time.
        let un = series.field_at(t_new);
        let vx = diff_axis(&grid, un.component(1).values(), 0);
        let uy = diff_axis(&grid, un.component(0).values(), 1);
        for i in 0..nx {
            let base = i * ny;
            let q0 = -(vx[base] - uy[base]);
            let q1 = -(vx[base + ny - 1] - uy[base + ny - 1]);
            // Tangential component: Neumann rows through ghost nodes.
            let mut lower = vec![-c; ny];
            let mut diag = vec![F::one() + c + c; ny];
            let mut upper = vec![-c; ny];
            let mut rhs: Vec<F> = ra[base..base + ny].to_vec();
            upper[0] = -(c + c);
            lower[ny - 1] = -(c + c);
            rhs[0] = rhs[0] - F::lit(2.0) * c * hy * q0;
            rhs[ny - 1] = rhs[ny - 1] + F::lit(2.0) * c * hy * q1;
            solve_tridiagonal(&lower, &diag, &upper, &mut rhs);
            a[base..base + ny].copy_from_slice(&rhs);
            // Normal component: homogeneous Dirichlet.
            let m = ny - 2;
            lower = vec![-c; m];
            diag = vec![F::one() + c + c; m];
            upper = vec![-c; m];
            let mut rhs: Vec<F> = rb[base + 1..base + ny - 1].to_vec();
            solve_tridiagonal(&lower, &diag, &upper, &mut rhs);
            b[base] = F::zero();
            b[base + ny - 1] = F::zero();
            b[base + 1..base + ny - 1].copy_from_slice(&rhs);
        }
        if (n + 1) % snap_every == 0 {
            let f = VectorField::from_components(vec![
                ScalarField::from_values(grid, a.clone())?,
                ScalarField::from_values(grid, b.clone())?,
            ])?;
            snaps.push((t_new, f));
        }
    }
    let wbar = FieldSeries::new(snaps, nu)?;
    let w_tilde = WallTrace::new(&wbar);
    Ok(WbarSolution { wbar, w_tilde })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{curl, leray_project};
    use crate::reference::channel_decay;
    use std::f64::consts::PI;

    fn channel() -> DomainSpec<f64> {
        DomainSpec::new(DomainKind::ChannelX, &[0.0, 0.0], &[2.0, 1.0]).unwrap()
    }

    fn cfg(dt: f64, shape: &[usize]) -> SolverConfig<f64> {
        SolverConfig {
            nu: 1.0,
            t_final: 0.05,
            dt,
            dt_snap: 0.01,
            shape: shape.to_vec(),
            n_paths: 2,
            picard_iters: 1,
            picard_tol: 1e-3,
            seed: 0,
            workers: 1,
            exit: Default::default(),
        }
    }

    fn decay_series(g: Grid<f64>, nu: f64, t_final: f64, dt_snap: f64) -> FieldSeries<f64> {
        let k = (t_final / dt_snap).round() as usize;
        let snaps = (0..=k)
            .map(|i| {
                let t = i as f64 * dt_snap;
                (t, VectorField::from_fn(g, |x| channel_decay(nu, t, x[1]).0))
            })
            .collect();
        FieldSeries::new(snaps, nu).unwrap()
    }

    #[test]
    fn zero_data_gives_zero_weight() {
        let d = channel();
        let g = Grid::new(&d, &[8, 9]).unwrap();
        let zero = VectorField::zeros(g);
        let s = FieldSeries::new(vec![(0.0, zero.clone()), (0.01, zero.clone())], 1.0).unwrap();
        let sol = solve_wbar_pde(&s, &d, &zero, &cfg(1e-3, &[8, 9])).unwrap();
        assert!(sol.wbar.snapshots().all(|(_, f)| f.max_abs() == 0.0));
        assert_eq!(sol.w_tilde.at(&[0.3, 0.0, 0.0], 0.005), [0.0; 3]);
    }

    #[test]
    fn channel_curl_matches_and_projection_recovers_u() {
        let d = channel();
        let errs: Vec<(f64, f64)> = [(8, 17, 4e-4), (8, 33, 1e-4)]
            .iter()
            .map(|&(nx, ny, dt)| {
                let g = Grid::new(&d, &[nx, ny]).unwrap();
                let s = decay_series(g, 1.0, 0.05, 0.01);
                let sol = solve_wbar_pde(&s, &d, s.snapshot(0).1, &cfg(dt, &[nx, ny])).unwrap();
                let (t, w) = sol.wbar.snapshot(sol.wbar.len() - 1);
                let u = s.field_at(t);
                let cw = curl(w, &d).unwrap().into_scalar().unwrap();
                let cu = curl(&u, &d).unwrap().into_scalar().unwrap();
                let curl_err = cw.values().iter().zip(cu.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                let p = leray_project(w, &d).unwrap();
                (curl_err, p.relative_l2_error(&u))
            })
            .collect();
        assert!(errs[1].0 < 0.02 && errs[1].1 < 5e-3, "{errs:?}");
        assert!(errs[0].1 / errs[1].1 > 2.5, "{errs:?}");
    }

    #[test]
    fn still_fluid_is_plain_heat_flow() {
        let d = channel();
        let (nx, ny) = (8, 33);
        let g = Grid::new(&d, &[nx, ny]).unwrap();
        let zero = VectorField::zeros(g);
        let s = FieldSeries::new((0..=5).map(|i| (i as f64 * 0.01, zero.clone())).collect(), 1.0).unwrap();
        let u0 = VectorField::from_fn(g, |x| [(PI * x[1]).cos(), (PI * x[0]).sin() * (PI * x[1]).sin(), 0.0]);
        let sol = solve_wbar_pde(&s, &d, &u0, &cfg(1e-4, &[nx, ny])).unwrap();
        let t = 0.05;
        let exact = VectorField::from_fn(g, |x| {
            [
                (-PI * PI * t).exp() * (PI * x[1]).cos(),
                (-2.0 * PI * PI * t).exp() * (PI * x[0]).sin() * (PI * x[1]).sin(),
                0.0,
            ]
        });
        let w = sol.wbar.snapshot(5).1;
        assert!(w.relative_l2_error(&exact) < 2e-2, "{}", w.relative_l2_error(&exact));
    }

    #[test]
    fn unstable_step_reports_limit() {
        let d = channel();
        let g = Grid::new(&d, &[16, 33]).unwrap();
        let s = decay_series(g, 1.0, 0.05, 0.01);
        match solve_wbar_pde(&s, &d, s.snapshot(0).1, &cfg(0.01, &[16, 33])) {
            Err(crate::Error::Usage(m)) => assert!(m.contains("dt <=")),
            other => panic!("{other:?}"),
        }
    }
}
