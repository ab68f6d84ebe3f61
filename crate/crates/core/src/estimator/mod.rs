//! Monte Carlo estimators built on backward paths.
//!
//! Every estimator assigns path `i` the random stream `i` (or `i / 2`,
//! mirrored for odd `i`, with antithetic pairing), collects per-path samples
//! in index order and reduces them pairwise, so results do not depend on the
//! number of workers.

pub mod stats;

use std::sync::Arc;

use rayon::prelude::*;

use crate::domain::DomainSpec;
use crate::error::{numeric, usage, Error, Result};
use crate::field::{FieldSeries, Grid, ScalarField, VectorField};
use crate::flow::{time_index, ExitDetection, RngStream, State, VelocitySource, Walk};
use crate::scalar::{det, mat_t_vec, solve_small, to_point, Point, Real};

pub type ScalarFn<F> = Arc<dyn Fn(&Point<F>) -> F + Send + Sync>;
pub type ScalarFnT<F> = Arc<dyn Fn(&Point<F>, F) -> F + Send + Sync>;
pub type VectorFn<F> = Arc<dyn Fn(&Point<F>) -> Point<F> + Send + Sync>;
pub type VectorFnT<F> = Arc<dyn Fn(&Point<F>, F) -> Point<F> + Send + Sync>;

/// Initial and boundary data for the estimators. Only the entries an
/// estimator needs have to be present.
#[derive(Clone, Default)]
pub struct BoundaryData<F> {
    /// Initial scalar `θ₀(x)`.
    pub theta0: Option<ScalarFn<F>>,
    /// Wall values `g(x, t)` of the scalar.
    pub g: Option<ScalarFnT<F>>,
    /// Potential `c(x, t)`; zero when absent.
    pub potential_c: Option<ScalarFnT<F>>,
    /// Initial velocity `u₀(x)`.
    pub u0: Option<VectorFn<F>>,
    /// Boundary weight `w̃(x, t)` on the walls.
    pub w_tilde: Option<VectorFnT<F>>,
    /// Vorticity on the parabolic boundary: `ω₀` at `t = 0` and the wall
    /// trace for `t > 0`. In 2D only the first component is used.
    pub omega_tilde: Option<VectorFnT<F>>,
    /// Solution `w̄(x, t)` of the boundary-weight equation.
    pub wbar: Option<VectorFnT<F>>,
}

impl<F: Real> BoundaryData<F> {
    pub fn new() -> Self {
        Self {
            theta0: None,
            g: None,
            potential_c: None,
            u0: None,
            w_tilde: None,
            omega_tilde: None,
            wbar: None,
        }
    }

    pub fn with_theta0(mut self, f: impl Fn(&Point<F>) -> F + Send + Sync + 'static) -> Self {
        self.theta0 = Some(Arc::new(f));
        self
    }

    pub fn with_g(mut self, f: impl Fn(&Point<F>, F) -> F + Send + Sync + 'static) -> Self {
        self.g = Some(Arc::new(f));
        self
    }

    pub fn with_potential(mut self, f: impl Fn(&Point<F>, F) -> F + Send + Sync + 'static) -> Self {
        self.potential_c = Some(Arc::new(f));
        self
    }

    pub fn with_u0(mut self, f: impl Fn(&Point<F>) -> Point<F> + Send + Sync + 'static) -> Self {
        self.u0 = Some(Arc::new(f));
        self
    }

    /// Initial velocity sampled from a grid field.
    pub fn with_u0_field(self, field: VectorField<F>) -> Self {
        self.with_u0(move |x| field.interpolate_point(x))
    }

    pub fn with_w_tilde(mut self, f: impl Fn(&Point<F>, F) -> Point<F> + Send + Sync + 'static) -> Self {
        self.w_tilde = Some(Arc::new(f));
        self
    }

    /// Boundary weight read off a `w̄` series (linear in time, multilinear in space).
    pub fn with_w_tilde_series(self, series: Arc<FieldSeries<F>>) -> Self {
        self.with_w_tilde(move |x, t| series.velocity_at(x, t))
    }

    pub fn with_omega_tilde(mut self, f: impl Fn(&Point<F>, F) -> Point<F> + Send + Sync + 'static) -> Self {
        self.omega_tilde = Some(Arc::new(f));
        self
    }

    pub fn with_wbar(mut self, f: impl Fn(&Point<F>, F) -> Point<F> + Send + Sync + 'static) -> Self {
        self.wbar = Some(Arc::new(f));
        self
    }

    pub fn with_wbar_series(self, series: Arc<FieldSeries<F>>) -> Self {
        self.with_wbar(move |x, t| series.velocity_at(x, t))
    }

    /// The same data with the boundary weight replaced by zero, so exited
    /// paths contribute nothing to the velocity.
    pub fn without_boundary_weight(mut self) -> Self {
        self.w_tilde = Some(Arc::new(|_, _| [F::zero(); 3]));
        self
    }
}

/// Sampling parameters shared by all estimators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McConfig<F> {
    /// Paths per estimate.
    pub n: usize,
    pub dt: F,
    pub seed: u64,
    /// Worker threads; `0` uses every available core.
    pub workers: usize,
    /// Pair each path with its mirrored-noise partner.
    pub antithetic: bool,
    pub exit: ExitDetection,
}

impl<F: Real> McConfig<F> {
    pub fn new(n: usize, dt: F, seed: u64) -> Self {
        Self {
            n,
            dt,
            seed,
            workers: 1,
            antithetic: false,
            exit: ExitDetection::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return usage(format!("need at least 2 paths, got {}", self.n));
        }
        if self.antithetic && self.n % 2 == 1 {
            return usage("antithetic sampling needs an even path count");
        }
        time_index(F::zero(), self.dt).map(|_| ())
    }

    fn stream(&self, i: usize) -> RngStream {
        if self.antithetic {
            RngStream {
                seed: self.seed,
                stream_id: (i / 2) as u64,
                mirrored: i % 2 == 1,
            }
        } else {
            RngStream::new(self.seed, i as u64)
        }
    }
}

/// Sample mean and standard error of a scalar or vector quantity.
#[derive(Clone, Debug, PartialEq)]
pub struct McEstimate<F> {
    pub mean: Vec<F>,
    pub std_error: Vec<F>,
    pub n_samples: usize,
    pub seed: u64,
    /// Paths discarded because their sample was undefined.
    pub rejected: usize,
}

impl<F: Real> McEstimate<F> {
    fn from_samples(samples: &[Option<Point<F>>], comps: usize, seed: u64) -> Self {
        let kept: Vec<&Point<F>> = samples.iter().flatten().collect();
        let mut mean = Vec::with_capacity(comps);
        let mut std_error = Vec::with_capacity(comps);
        for c in 0..comps {
            let xs: Vec<F> = kept.iter().map(|p| p[c]).collect();
            let (m, se) = stats::mean_and_se(&xs);
            mean.push(m);
            std_error.push(se);
        }
        Self {
            mean,
            std_error,
            n_samples: kept.len(),
            seed,
            rejected: samples.len() - kept.len(),
        }
    }
}

/// Closed polyline on the torus.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveSpec<F> {
    vertices: Vec<Point<F>>,
    /// Quadrature nodes per edge.
    subdivisions: usize,
}

impl<F: Real> CurveSpec<F> {
    /// A repeated first vertex at the end is accepted and dropped.
    pub fn new(vertices: &[Vec<F>], subdivisions: usize) -> Result<Self> {
        let mut v = vertices
            .iter()
            .map(|p| to_point(p).ok_or_else(|| Error::Usage("vertex has too many coordinates".into())))
            .collect::<Result<Vec<_>>>()?;
        if v.len() > 1 && v.first() == v.last() {
            v.pop();
        }
        if v.len() < 3 {
            return usage("a closed curve needs at least 3 distinct vertices");
        }
        if subdivisions == 0 {
            return usage("subdivisions must be positive");
        }
        Ok(Self {
            vertices: v,
            subdivisions,
        })
    }

    /// Axis-aligned square in the `(x0, x1)` plane.
    pub fn square(center: [F; 2], side: F, subdivisions: usize) -> Result<Self> {
        let h = side * F::lit(0.5);
        let (cx, cy) = (center[0], center[1]);
        Self::new(
            &[vec![cx - h, cy - h], vec![cx + h, cy - h], vec![cx + h, cy + h], vec![cx - h, cy + h]],
            subdivisions,
        )
    }

    /// Quadrature nodes, counterclockwise as given, without repetition.
    pub fn nodes(&self) -> Vec<Point<F>> {
        let m = self.vertices.len();
        let mut out = Vec::with_capacity(m * self.subdivisions);
        for i in 0..m {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % m]);
            for k in 0..self.subdivisions {
                let s = F::from_usize_lossy(k) / F::from_usize_lossy(self.subdivisions);
                let mut p = a;
                for c in 0..3 {
                    p[c] = a[c] + s * (b[c] - a[c]);
                }
                out.push(p);
            }
        }
        out
    }
}

/// Trapezoid rule for `∮ f·dl` over the closed polygon through `nodes`.
pub fn loop_integral<F: Real>(nodes: &[Point<F>], f: impl Fn(&Point<F>) -> Point<F>, dim: usize) -> F {
    let m = nodes.len();
    let vals: Vec<Point<F>> = nodes.iter().map(&f).collect();
    let terms: Vec<F> = (0..m)
        .map(|i| {
            let j = (i + 1) % m;
            (0..dim).fold(F::zero(), |acc, c| {
                acc + (vals[i][c] + vals[j][c]) * F::lit(0.5) * (nodes[j][c] - nodes[i][c])
            })
        })
        .collect();
    stats::pairwise_sum(&terms)
}

pub(crate) fn run_pool<R: Send>(workers: usize, job: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Numeric(format!("could not start worker pool: {e}")))?;
    Ok(pool.install(job))
}

struct Setup<F> {
    t_index: u64,
    point: Point<F>,
}

fn setup<F: Real, V: VelocitySource<F> + ?Sized>(
    src: &V,
    domain: &DomainSpec<F>,
    x: &[F],
    t: F,
    cfg: &McConfig<F>,
    allow_boundary: bool,
) -> Result<Setup<F>> {
    cfg.validate()?;
    let point = domain.check_point(x)?;
    if src.dim() != domain.dim() {
        return usage("velocity and domain dimensions differ");
    }
    let inside = domain.contains_point(&point) || (allow_boundary && domain.on_boundary(&point));
    if !inside {
        return usage(format!("point {x:?} is not in the domain"));
    }
    if !(t > F::zero()) {
        return usage(format!("time must be positive, got {t}"));
    }
    if !src.covers(t) || !src.covers(F::zero()) {
        return usage(format!("velocity is not available on [0, {t}]"));
    }
    Ok(Setup {
        t_index: time_index(t, cfg.dt)?,
        point,
    })
}

fn walk<F: Real>(cfg: &McConfig<F>, t_index: u64, s_index: u64, jacobian: bool) -> Walk<F> {
    Walk {
        dt: cfg.dt,
        t_index,
        s_index,
        exit: cfg.exit,
        jacobian,
    }
}

/// Feynman–Kac estimate of a scalar transported by `src`, killed at rate
/// `c` and absorbed with value `g` on the walls.
pub fn estimate_scalar_fk<F: Real, V: VelocitySource<F> + ?Sized>(
    src: &V,
    domain: &DomainSpec<F>,
    data: &BoundaryData<F>,
    x: &[F],
    t: F,
    cfg: &McConfig<F>,
) -> Result<McEstimate<F>> {
    let su = setup(src, domain, x, t, cfg, false)?;
    let theta0 = data.theta0.clone().ok_or_else(|| Error::Usage("theta0 is required".into()))?;
    let g = match (&data.g, domain.has_walls()) {
        (Some(g), _) => Some(g.clone()),
        (None, false) => None,
        (None, true) => return usage("wall values g are required on a walled domain"),
    };
    let c = data.potential_c.clone();
    let w = walk(cfg, su.t_index, 0, false);
    let samples = run_pool(cfg.workers, || {
        (0..cfg.n)
            .into_par_iter()
            .map(|i| {
                let mut integral = F::zero();
                let mut prev = c.as_ref().map(|c| (t, c(&su.point, t)));
                let end = w.run(src, domain, &su.point, cfg.stream(i), |st: &State<F>| {
                    if let (Some(c), Some((s0, c0))) = (&c, prev) {
                        let c1 = c(&st.position, st.s);
                        integral = integral + (s0 - st.s) * (c0 + c1) * F::lit(0.5);
                        prev = Some((st.s, c1));
                    }
                });
                let weight = (-integral).exp();
                let value = if end.exited {
                    g.as_ref().expect("walls present")(&end.state.position, end.state.s)
                } else {
                    theta0(&end.state.position)
                };
                let mut p = [F::zero(); 3];
                p[0] = weight * value;
                Some(p)
            })
            .collect::<Vec<_>>()
    })?;
    Ok(McEstimate::from_samples(&samples, 1, cfg.seed))
}

/// Mean and standard error of the velocity representation at every grid node.
#[derive(Clone, Debug)]
pub struct FieldEstimate<F> {
    pub mean: VectorField<F>,
    pub std_error: VectorField<F>,
}

/// Estimates `E w_t` at every node of `grid`, where a path contributes
/// `∇ᵀA·u₀(A)` when it survives to time zero and `∇ᵀA·w̃(σ, A)` when it
/// leaves the domain at `σ`. The result is not projected.
pub fn estimate_weber_velocity<F: Real, V: VelocitySource<F> + ?Sized>(
    src: &V,
    domain: &DomainSpec<F>,
    data: &BoundaryData<F>,
    grid: &Grid<F>,
    t: F,
    cfg: &McConfig<F>,
) -> Result<FieldEstimate<F>> {
    crate::field::ops::check_grid(grid, domain)?;
    let origin = grid.node(0);
    let su = setup(src, domain, &origin[..domain.dim()], t, cfg, true)?;
    let u0 = data.u0.clone().ok_or_else(|| Error::Usage("u0 is required".into()))?;
    let w_tilde = match (&data.w_tilde, domain.has_walls()) {
        (Some(w), _) => Some(w.clone()),
        (None, false) => None,
        (None, true) => return usage("w_tilde is required on a walled domain"),
    };
    weber_field(src, domain, grid, su.t_index, 0, &|x| u0(x), w_tilde.as_deref(), cfg)
}

/// Weber average from time `t_index·dt` back to `s_index·dt`, with `init`
/// the velocity at the lower time.
#[allow(clippy::too_many_arguments)]
pub(crate) fn weber_field<F: Real, V: VelocitySource<F> + ?Sized>(
    src: &V,
    domain: &DomainSpec<F>,
    grid: &Grid<F>,
    t_index: u64,
    s_index: u64,
    init: &(dyn Fn(&Point<F>) -> Point<F> + Sync),
    w_tilde: Option<&(dyn Fn(&Point<F>, F) -> Point<F> + Send + Sync)>,
    cfg: &McConfig<F>,
) -> Result<FieldEstimate<F>> {
    let d = domain.dim();
    let w = walk(cfg, t_index, s_index, true);
    let per_node = run_pool(cfg.workers, || {
        (0..grid.len())
            .into_par_iter()
            .map(|node| {
                let x = grid.node(node);
                let samples: Vec<Option<Point<F>>> = (0..cfg.n)
                    .map(|i| {
                        let end = w.run(src, domain, &x, cfg.stream(i), |_: &State<F>| {});
                        let v = if end.exited {
                            w_tilde.expect("walls present")(&end.state.position, end.state.s)
                        } else {
                            init(&end.state.position)
                        };
                        Some(mat_t_vec(&end.state.jacobian, &v, d))
                    })
                    .collect();
                McEstimate::from_samples(&samples, d, cfg.seed)
            })
            .collect::<Vec<_>>()
    })?;
    let build = |pick: &dyn Fn(&McEstimate<F>) -> &Vec<F>| {
        let comps = (0..d)
            .map(|c| ScalarField::from_values(*grid, per_node.iter().map(|e| pick(e)[c]).collect()))
            .collect::<Result<Vec<_>>>()?;
        VectorField::from_components(comps)
    };
    Ok(FieldEstimate {
        mean: build(&|e| &e.mean)?,
        std_error: build(&|e| &e.std_error)?,
    })
}

/// Largest fraction of paths allowed a singular Jacobian.
const MAX_REJECTED: f64 = 0.01;

/// Vorticity from its values on the parabolic boundary; in 3D each sample is
/// stretched by the inverse transported Jacobian.
pub fn estimate_vorticity<F: Real, V: VelocitySource<F> + ?Sized>(
    src: &V,
    domain: &DomainSpec<F>,
    data: &BoundaryData<F>,
    x: &[F],
    t: F,
    cfg: &McConfig<F>,
) -> Result<McEstimate<F>> {
    let su = setup(src, domain, x, t, cfg, true)?;
    let d = domain.dim();
    let omega = data
        .omega_tilde
        .clone()
        .ok_or_else(|| Error::Usage("omega_tilde is required".into()))?;
    let w = walk(cfg, su.t_index, 0, d == 3);
    let samples = run_pool(cfg.workers, || {
        (0..cfg.n)
            .into_par_iter()
            .map(|i| {
                let end = w.run(src, domain, &su.point, cfg.stream(i), |_: &State<F>| {});
                let s = if end.exited { end.state.s } else { F::zero() };
                let v = omega(&end.state.position, s);
                if d == 2 {
                    return Some([v[0], F::zero(), F::zero()]);
                }
                let j = &end.state.jacobian;
                if det(j, 3).abs() < F::lit(1e-8) {
                    return None;
                }
                Some(solve_small(j, &v, 3))
            })
            .collect::<Vec<_>>()
    })?;
    let comps = if d == 2 { 1 } else { 3 };
    let est = McEstimate::from_samples(&samples, comps, cfg.seed);
    if est.rejected as f64 > MAX_REJECTED * cfg.n as f64 {
        return numeric(format!(
            "{} of {} paths had a singular Jacobian",
            est.rejected, cfg.n
        ));
    }
    Ok(est)
}

/// Circulation of the velocity around `curve` at time `t` on the torus:
/// the loop is carried back to time zero by one Wiener path shared by all
/// of its nodes and `u₀` is integrated along the image.
pub fn estimate_circulation<F: Real, V: VelocitySource<F> + ?Sized>(
    src: &V,
    domain: &DomainSpec<F>,
    data: &BoundaryData<F>,
    curve: &CurveSpec<F>,
    t: F,
    cfg: &McConfig<F>,
) -> Result<McEstimate<F>> {
    if domain.has_walls() {
        return usage("circulation is only available on the torus");
    }
    let nodes = curve.nodes();
    let su = setup(src, domain, &nodes[0][..domain.dim()], t, cfg, false)?;
    let u0 = data.u0.clone().ok_or_else(|| Error::Usage("u0 is required".into()))?;
    let w = walk(cfg, su.t_index, 0, false);
    let d = domain.dim();
    let samples = run_pool(cfg.workers, || {
        (0..cfg.n)
            .into_par_iter()
            .map(|i| {
                let rng = cfg.stream(i);
                let image: Vec<Point<F>> = nodes
                    .iter()
                    .map(|x| w.run(src, domain, x, rng, |_: &State<F>| {}).state.position)
                    .collect();
                let mut p = [F::zero(); 3];
                p[0] = loop_integral(&image, |y| u0(y), d);
                Some(p)
            })
            .collect::<Vec<_>>()
    })?;
    Ok(McEstimate::from_samples(&samples, 1, cfg.seed))
}

/// Seed used for stopping level `level`, so that levels are independent.
fn level_seed(seed: u64, level: usize) -> u64 {
    seed ^ (level as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Estimates `E[∇ᵀA_{σ∨s,t}·w̄(σ∨s, A_{σ∨s,t})]` at each stopping level `s`.
/// All levels should agree with `w̄(t, x)`; each level uses its own seed.
pub fn check_martingale_identity<F: Real, V: VelocitySource<F> + ?Sized>(
    src: &V,
    domain: &DomainSpec<F>,
    data: &BoundaryData<F>,
    x: &[F],
    t: F,
    stop_times: &[F],
    cfg: &McConfig<F>,
) -> Result<Vec<McEstimate<F>>> {
    let su = setup(src, domain, x, t, cfg, false)?;
    let wbar = data.wbar.clone().ok_or_else(|| Error::Usage("wbar is required".into()))?;
    let d = domain.dim();
    stop_times
        .iter()
        .enumerate()
        .map(|(level, &s)| {
            let s_index = time_index(s, cfg.dt)?;
            if s_index > su.t_index {
                return usage(format!("stopping time {s} exceeds t {t}"));
            }
            let lcfg = McConfig {
                seed: level_seed(cfg.seed, level),
                ..*cfg
            };
            let w = walk(&lcfg, su.t_index, s_index, true);
            let samples = run_pool(cfg.workers, || {
                (0..cfg.n)
                    .into_par_iter()
                    .map(|i| {
                        let end = w.run(src, domain, &su.point, lcfg.stream(i), |_: &State<F>| {});
                        let v = wbar(&end.state.position, end.state.s);
                        Some(mat_t_vec(&end.state.jacobian, &v, d))
                    })
                    .collect::<Vec<_>>()
            })?;
            let mut est = McEstimate::from_samples(&samples, d, lcfg.seed);
            est.seed = cfg.seed;
            Ok(est)
        })
        .collect()
}

#[cfg(test)]
mod tests;
