//! Backward stochastic characteristics.
//!
//! Paths run backward from `(x, t)` on the fixed grid `s = k·dt`, with
//! Euler–Maruyama for positions and an explicit midpoint rule for the
//! Jacobian. The Gaussian increment of the step `[k·dt, (k+1)·dt]` is keyed
//! by `k`, so two paths that share a stream share their increments step by
//! step regardless of where they start.

mod rng;
mod source;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::domain::DomainSpec;
use crate::error::{usage, Result};
use crate::scalar::{identity, mat_mul, Mat, Point, Real};

pub use rng::{philox4x32, RngStream};
pub use source::{AnalyticVelocity, VelocitySource};

/// Offset, in units of one-step standard deviations, of the first-order
/// corrected wall for a reflected Gaussian random walk (`ζ(1/2)/√(2π)`).
const WALL_SHIFT: f64 = 0.5825971579390106;

/// How a discretely sampled path is tested for leaving the domain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitDetection {
    /// Only segments whose endpoint lies outside count as exits.
    Segment,
    /// Segment test plus the Brownian-bridge crossing probability between
    /// two interior endpoints.
    #[default]
    Bridge,
    /// Segment test against walls moved inward by `0.5826·√(2ν dt)`.
    ShiftedBoundary,
}

/// One simulated backward path.
#[derive(Clone, Debug, PartialEq)]
pub struct PathRecord<F> {
    pub dim: usize,
    pub start: Point<F>,
    pub t: F,
    pub dt: F,
    /// `A_{s,t}` from `s = t` downward; the last entry is the exit point
    /// when the path exited.
    pub positions: Vec<Point<F>>,
    /// `∇A_{s,t}(x)` at `s = max(sigma, s_min)`.
    pub jacobian: Mat<F>,
    pub sigma: F,
    pub exit_point: Option<Point<F>>,
    pub exited: bool,
}

impl<F: Real> PathRecord<F> {
    pub fn final_position(&self) -> &Point<F> {
        self.positions.last().expect("a path holds at least its start")
    }

    /// Writes the positions as a one-axis grid dump (one node per step).
    pub fn write_trace(&self, out: &mut impl Write) -> Result<()> {
        writeln!(
            out,
            "shape {} spacing {:e} time {:e} components {}",
            self.positions.len(),
            self.dt.to_f64_lossy(),
            self.t.to_f64_lossy(),
            self.dim
        )?;
        for p in &self.positions {
            let row: Vec<String> = p[..self.dim].iter().map(|v| format!("{:e}", v.to_f64_lossy())).collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Index `k` with `k·dt = t`, rejecting times off the step grid.
pub(crate) fn time_index<F: Real>(t: F, dt: F) -> Result<u64> {
    if !(dt > F::zero()) || !dt.is_finite() {
        return usage(format!("step size must be positive, got {dt}"));
    }
    if !(t >= F::zero()) || !t.is_finite() {
        return usage(format!("time must be non-negative, got {t}"));
    }
    let k = (t / dt).round();
    let tol = F::lit(1e-9) * t.max(dt) + F::epsilon() * F::lit(8.0) * t.max(dt);
    if (k * dt - t).abs() > tol {
        return usage(format!("time {t} is not a multiple of the step {dt}"));
    }
    Ok(k.to_u64().unwrap_or(0))
}

/// State of a path at one backward time level.
#[derive(Clone, Copy, Debug)]
pub(crate) struct State<F> {
    pub s: F,
    pub position: Point<F>,
    pub jacobian: Mat<F>,
}

pub(crate) struct Walk<F> {
    pub dt: F,
    pub t_index: u64,
    pub s_index: u64,
    pub exit: ExitDetection,
    pub jacobian: bool,
}

pub(crate) struct WalkEnd<F> {
    pub state: State<F>,
    pub exited: bool,
}

#[inline]
fn step_jacobian<F: Real>(j: &Mat<F>, g_hi: &Mat<F>, g_lo: &Mat<F>, dt: F, d: usize) -> Mat<F> {
    let half = dt * F::lit(0.5);
    let gj = mat_mul(g_hi, j, d);
    let mut mid = *j;
    let mut gbar = *g_hi;
    for a in 0..d {
        for b in 0..d {
            mid[a][b] = mid[a][b] - half * gj[a][b];
            gbar[a][b] = (g_hi[a][b] + g_lo[a][b]) * F::lit(0.5);
        }
    }
    let inc = mat_mul(&gbar, &mid, d);
    let mut out = *j;
    for a in 0..d {
        for b in 0..d {
            out[a][b] = out[a][b] - dt * inc[a][b];
        }
    }
    out
}

/// Nearest wall to `x` among walled axes: (axis, wall coordinate, distance).
fn nearest_wall<F: Real>(domain: &DomainSpec<F>, x: &Point<F>) -> Option<(usize, F, F)> {
    let mut best: Option<(usize, F, F)> = None;
    for a in domain.walled_axes() {
        let (dl, du) = domain.wall_distances(x, a);
        for (dist, wall) in [(dl, domain.lower()[a]), (du, domain.upper()[a])] {
            if best.is_none_or(|b| dist < b.2) {
                best = Some((a, wall, dist));
            }
        }
    }
    best
}

impl<F: Real> Walk<F> {
    /// Runs one path from `x` at `t_index·dt` down to `s_index·dt` or the
    /// exit, calling `observe` with the state reached after every step
    /// (including the exit state).
    pub(crate) fn run<V: VelocitySource<F> + ?Sized>(
        &self,
        src: &V,
        domain: &DomainSpec<F>,
        x: &Point<F>,
        rng: RngStream,
        mut observe: impl FnMut(&State<F>),
    ) -> WalkEnd<F> {
        let d = domain.dim();
        let dt = self.dt;
        let nu = src.nu();
        let sd = (F::lit(2.0) * nu * dt).sqrt();
        let t = F::from_u64(self.t_index).unwrap() * dt;
        let shrink = F::lit(WALL_SHIFT) * sd;
        let detector = match self.exit {
            ExitDetection::ShiftedBoundary if domain.has_walls() => domain.shrunk(shrink).unwrap_or(*domain),
            _ => *domain,
        };
        let mut state = State {
            s: t,
            position: *x,
            jacobian: identity(d),
        };
        if !detector.contains_point(x) {
            // Starting on (or, for the shifted detector, next to) the wall.
            if let Some((axis, wall, _)) = nearest_wall(domain, x) {
                state.position[axis] = wall;
            }
            observe(&state);
            return WalkEnd { state, exited: true };
        }
        let mut g_hi = if self.jacobian { src.gradient(x, t) } else { [[F::zero(); 3]; 3] };
        let bridge_rate = if nu * dt > F::zero() { F::one() / (nu * dt) } else { F::zero() };
        for k in (self.s_index..self.t_index).rev() {
            let s_hi = state.s;
            let s_lo = F::from_u64(k).unwrap() * dt;
            let u = src.velocity(&state.position, s_hi);
            let z: [F; 4] = rng.normals(k);
            let mut next = state.position;
            for a in 0..d {
                next[a] = next[a] - u[a] * dt - sd * z[a];
            }
            let mut crossing = detector.crossing(&state.position, &next);
            if crossing.is_none() && self.exit == ExitDetection::Bridge && bridge_rate > F::zero() {
                let mut survive = F::one();
                let mut best: Option<(F, usize, F)> = None;
                for a in domain.walled_axes() {
                    let (l0, u0) = domain.wall_distances(&state.position, a);
                    let (l1, u1) = domain.wall_distances(&next, a);
                    for (d0, d1, wall) in [(l0, l1, domain.lower()[a]), (u0, u1, domain.upper()[a])] {
                        let p = (-(d0 * d1) * bridge_rate).exp();
                        survive = survive * (F::one() - p);
                        if best.is_none_or(|b| p > b.0) {
                            best = Some((p, a, wall));
                        }
                    }
                }
                if F::lit(rng.uniform(k)) >= survive {
                    // Dated at the end of the step so that exit times stay
                    // monotone under inward wall shifts.
                    let (_, axis, wall) = best.unwrap();
                    let mut point = next;
                    point[axis] = wall;
                    crossing = Some(crate::domain::CrossingRecord {
                        lambda: F::one(),
                        point,
                        wall_axis: axis,
                    });
                }
            }
            if let Some(c) = crossing {
                let mut point = c.point;
                if self.exit == ExitDetection::ShiftedBoundary {
                    let (lo, hi) = (domain.lower()[c.wall_axis], domain.upper()[c.wall_axis]);
                    let mid = (lo + hi) * F::lit(0.5);
                    point[c.wall_axis] = if point[c.wall_axis] < mid { lo } else { hi };
                }
                if self.jacobian {
                    let gj = mat_mul(&g_hi, &state.jacobian, d);
                    for a in 0..d {
                        for b in 0..d {
                            state.jacobian[a][b] = state.jacobian[a][b] - c.lambda * dt * gj[a][b];
                        }
                    }
                }
                state.s = s_hi - c.lambda * dt;
                state.position = point;
                observe(&state);
                // An exit dated exactly at time zero lands on the initial slice.
                let exited = state.s > F::zero();
                return WalkEnd { state, exited };
            }
            if self.jacobian {
                let g_lo = src.gradient(&next, s_lo);
                state.jacobian = step_jacobian(&state.jacobian, &g_hi, &g_lo, dt, d);
                g_hi = g_lo;
            }
            state.s = s_lo;
            state.position = next;
            observe(&state);
        }
        WalkEnd { state, exited: false }
    }
}

/// Simulates one backward path from `(x, t)` down to `s_min` or the exit.
///
/// `t` and `s_min` must be multiples of `dt`. The exit time is `0` for paths
/// that reach `s_min = 0` inside the domain; paths that reach a positive
/// `s_min` report `sigma = 0` as well.
#[allow(clippy::too_many_arguments)]
pub fn simulate_backward<F: Real, V: VelocitySource<F> + ?Sized>(
    src: &V,
    domain: &DomainSpec<F>,
    x: &[F],
    t: F,
    s_min: F,
    dt: F,
    rng: RngStream,
    exit: ExitDetection,
) -> Result<PathRecord<F>> {
    let p = domain.check_point(x)?;
    if src.dim() != domain.dim() {
        return usage("velocity and domain dimensions differ");
    }
    if !domain.contains_point(&p) {
        return usage("start point is not inside the domain");
    }
    let t_index = time_index(t, dt)?;
    let s_index = time_index(s_min, dt)?;
    if s_index > t_index {
        return usage(format!("s_min {s_min} exceeds t {t}"));
    }
    if !src.covers(t) || !src.covers(s_min) {
        return usage(format!("velocity is not available on [{s_min}, {t}]"));
    }
    let walk = Walk {
        dt,
        t_index,
        s_index,
        exit,
        jacobian: true,
    };
    let mut positions = vec![p];
    let end = walk.run(src, domain, &p, rng, |st| positions.push(st.position));
    Ok(PathRecord {
        dim: domain.dim(),
        start: p,
        t,
        dt,
        positions,
        jacobian: end.state.jacobian,
        sigma: if end.exited { end.state.s } else { F::zero() },
        exit_point: end.exited.then_some(end.state.position),
        exited: end.exited,
    })
}

/// Integrates `dJ/ds = G(s) J` backward from `J = I`, given `G` sampled at
/// `r = t, t − dt, …, s` (newest first).
pub fn transport_jacobian<F: Real>(grad_u_path: &[Mat<F>], dt: F, dim: usize) -> Mat<F> {
    let mut j = identity(dim);
    for pair in grad_u_path.windows(2) {
        j = step_jacobian(&j, &pair[0], &pair[1], dt, dim);
    }
    j
}

#[cfg(test)]
mod tests;
