//! End-to-end checks of the representations against the reference cases.

use std::fmt::Write as _;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{DomainKind, DomainSpec};
use crate::error::{usage, Result};
use crate::estimator::{
    check_martingale_identity, estimate_circulation, estimate_scalar_fk, estimate_vorticity,
    estimate_weber_velocity, loop_integral, BoundaryData, CurveSpec, McEstimate,
};
use crate::field::{dump, leray_project, FieldSeries, Grid, VectorField};
use crate::reference::{channel_decay, heat_slab, taylor_green};
use crate::scalar::{Point, Real};

use super::wbar::{solve_wbar_pde, stability_limit, WbarSolution};
use super::SolverConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepresentationKind {
    Weber,
    Vorticity,
    ScalarFk,
    Martingale,
    Circulation,
}

/// Named reference cases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    TaylorGreen,
    ChannelDecay,
    HeatSlab,
}

impl RepresentationKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Weber => "weber",
            Self::Vorticity => "vorticity",
            Self::ScalarFk => "scalar_fk",
            Self::Martingale => "martingale",
            Self::Circulation => "circulation",
        }
    }
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Self::TaylorGreen => "taylor_green",
            Self::ChannelDecay => "channel_decay",
            Self::HeatSlab => "heat_slab",
        }
    }

    /// Domain the case is posed on.
    pub fn domain(self) -> DomainSpec<f64> {
        match self {
            Self::TaylorGreen => DomainSpec::torus(2),
            Self::ChannelDecay => DomainSpec::new(DomainKind::ChannelX, &[0.0, 0.0], &[2.0, 1.0]).unwrap(),
            Self::HeatSlab => DomainSpec::new(DomainKind::ChannelX, &[0.0, 0.0], &[1.0, 1.0]).unwrap(),
        }
    }
}

/// Pairs accepted by [`verify_representation`].
pub const SUPPORTED: [(RepresentationKind, Problem); 6] = [
    (RepresentationKind::Weber, Problem::TaylorGreen),
    (RepresentationKind::Weber, Problem::ChannelDecay),
    (RepresentationKind::Vorticity, Problem::ChannelDecay),
    (RepresentationKind::ScalarFk, Problem::HeatSlab),
    (RepresentationKind::Martingale, Problem::ChannelDecay),
    (RepresentationKind::Circulation, Problem::TaylorGreen),
];

/// One compared quantity. `pass` holds exactly when `max_err <= tolerance`.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub rel_l2: Option<f64>,
    pub max_err: f64,
    /// Statistical part of the tolerance (three standard errors).
    pub ci_margin: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, rel_l2: Option<f64>, max_err: f64, ci_margin: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            rel_l2,
            max_err,
            ci_margin,
            tolerance,
            pass: max_err <= tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub name: String,
    pub checks: Vec<Check>,
    /// Per-point detail table.
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Grid dump of the projected velocity, for the velocity checks.
    pub dump: Option<String>,
}

impl VerificationReport {
    fn new(kind: RepresentationKind, problem: Problem, columns: &[&str]) -> Self {
        Self {
            name: format!("{}_{}", kind.name(), problem.name()),
            checks: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            dump: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// One row per check.
    pub fn write_checks_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "check,rel_l2,max_err,ci_margin,tolerance,pass")?;
        for c in &self.checks {
            let rel = c.rel_l2.map(|r| r.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{},{},{},{}", c.name, rel, c.max_err, c.ci_margin, c.tolerance, c.pass)?;
        }
        Ok(())
    }

    pub fn write_detail_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "{}", self.columns.join(","))?;
        for r in &self.rows {
            writeln!(out, "{}", r.join(","))?;
        }
        Ok(())
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "{}: {verdict}", self.name);
        for c in &self.checks {
            let _ = write!(s, "  [{}] {}: err {:.3e} <= {:.3e}", if c.pass { "ok" } else { "FAIL" }, c.name, c.max_err, c.tolerance);
            if let Some(r) = c.rel_l2 {
                let _ = write!(s, " (rel L2 {r:.3e})");
            }
            let _ = writeln!(s);
        }
        s
    }
}

/// Wall-normal positions of the pointwise checks.
pub const PROBE_Y: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

fn f<F: Real>(x: F) -> f64 {
    x.to_f64_lossy()
}

fn cast_domain<F: Real>(d: &DomainSpec<f64>) -> DomainSpec<F> {
    let c = |v: &[f64]| v.iter().map(|&x| F::lit(x)).collect::<Vec<_>>();
    DomainSpec::new(d.kind(), &c(d.lower()), &c(d.upper())).expect("reference domain")
}

/// Snapshots of an analytic velocity at the configured spacing.
fn sampled_series<F: Real>(
    grid: Grid<F>,
    cfg: &SolverConfig<F>,
    u: impl Fn(F, &Point<F>) -> Point<F>,
) -> Result<FieldSeries<F>> {
    let snaps = (0..=cfg.snapshot_count())
        .map(|k| {
            let t = F::from_usize_lossy(k) * cfg.dt_snap;
            (t, VectorField::from_fn(grid, |x| u(t, x)))
        })
        .collect();
    FieldSeries::new(snaps, cfg.nu)
}

fn channel_series<F: Real>(grid: Grid<F>, cfg: &SolverConfig<F>) -> Result<FieldSeries<F>> {
    let nu = cfg.nu;
    sampled_series(grid, cfg, move |t, x| channel_decay(nu, t, x[1]).0)
}

/// Boundary weight for the channel, on a PDE step that is stable and
/// divides the snapshot spacing.
fn channel_wbar<F: Real>(series: &FieldSeries<F>, domain: &DomainSpec<F>, cfg: &SolverConfig<F>) -> Result<WbarSolution<F>> {
    let cap = stability_limit(series).min(cfg.dt);
    let m = (cfg.dt_snap / cap).ceil().max(F::one());
    let pde = SolverConfig { dt: cfg.dt_snap / m, ..cfg.clone() };
    solve_wbar_pde(series, domain, series.snapshot(0).1, &pde)
}

fn render<F: Real>(u: &VectorField<F>, t: F) -> Result<String> {
    let mut buf = Vec::new();
    dump::write_vector(&mut buf, u, t)?;
    Ok(String::from_utf8(buf).expect("dump is ASCII"))
}

fn channel_vorticity_data<F: Real>(nu: F) -> BoundaryData<F> {
    BoundaryData::new().with_omega_tilde(move |x, s| [channel_decay(nu, s, x[1]).1, F::zero(), F::zero()])
}

fn heat_slab_data<F: Real>() -> BoundaryData<F> {
    BoundaryData::new()
        .with_theta0(|x: &Point<F>| (F::PI() * x[1]).sin())
        .with_g(|_, _| F::zero())
}

/// Single-point estimate and its oracle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Probe {
    pub mean: f64,
    pub std_error: f64,
    pub oracle: f64,
}

/// Estimates the pointwise cases at `(0.5, y)` and `t_final`, for ladders.
pub fn probe_point<F: Real>(kind: RepresentationKind, problem: Problem, cfg: &SolverConfig<F>, y: F) -> Result<Probe> {
    cfg.validate()?;
    let domain: DomainSpec<F> = cast_domain(&problem.domain());
    let grid = Grid::new(&domain, &cfg.shape)?;
    let (nu, t, mc) = (cfg.nu, cfg.t_final, cfg.mc());
    let x = [F::lit(0.5), y];
    let (est, oracle) = match (kind, problem) {
        (RepresentationKind::ScalarFk, Problem::HeatSlab) => {
            let series = FieldSeries::steady(VectorField::zeros(grid), nu)?;
            let est = estimate_scalar_fk(&series, &domain, &heat_slab_data(), &x, t, &mc)?;
            (est, heat_slab(nu, t, y, &[F::one()]))
        }
        (RepresentationKind::Vorticity, Problem::ChannelDecay) => {
            let series = channel_series(grid, cfg)?;
            let est = estimate_vorticity(&series, &domain, &channel_vorticity_data(nu), &x, t, &mc)?;
            (est, channel_decay(nu, t, y).1)
        }
        _ => {
            return usage(format!(
                "point probes exist for scalar_fk/heat_slab and vorticity/channel_decay, not {}/{}",
                kind.name(),
                problem.name()
            ))
        }
    };
    Ok(Probe {
        mean: f(est.mean[0]),
        std_error: f(est.std_error[0]),
        oracle: f(oracle),
    })
}

fn pointwise_row<F: Real>(y: F, t: F, est: &McEstimate<F>, oracle: F, tol: f64) -> (Vec<String>, f64, f64) {
    let err = (f(est.mean[0]) - f(oracle)).abs();
    let ci = 3.0 * f(est.std_error[0]);
    let pass = err <= ci + tol;
    let row = vec![
        f(y).to_string(),
        f(t).to_string(),
        f(est.mean[0]).to_string(),
        f(est.std_error[0]).to_string(),
        f(oracle).to_string(),
        pass.to_string(),
    ];
    (row, err, ci)
}

const POINT_COLUMNS: [&str; 6] = ["y", "t", "mean", "std_error", "oracle", "pass"];

/// Runs `kind` on the reference case `problem` and compares with its oracle.
pub fn verify_representation<F: Real>(
    kind: RepresentationKind,
    problem: Problem,
    cfg: &SolverConfig<F>,
) -> Result<VerificationReport> {
    cfg.validate()?;
    if !SUPPORTED.contains(&(kind, problem)) {
        let names: Vec<String> = SUPPORTED.iter().map(|(k, p)| format!("{}/{}", k.name(), p.name())).collect();
        return usage(format!(
            "no check for {} on {}; supported: {}",
            kind.name(),
            problem.name(),
            names.join(", ")
        ));
    }
    let domain: DomainSpec<F> = cast_domain(&problem.domain());
    let grid = Grid::new(&domain, &cfg.shape)?;
    let mc = cfg.mc();
    let t = cfg.t_final;
    let nu = cfg.nu;
    let bias = 5.0 * f(cfg.dt);
    match (kind, problem) {
        (RepresentationKind::Weber, Problem::TaylorGreen) => {
            let series = sampled_series(grid, cfg, move |t, x| taylor_green(nu, t, x))?;
            let data = BoundaryData::new().with_u0(move |x| taylor_green(nu, F::zero(), x));
            let est = estimate_weber_velocity(&series, &domain, &data, &grid, t, &mc)?;
            let u = leray_project(&est.mean, &domain)?;
            let exact = VectorField::from_fn(grid, |x| taylor_green(nu, t, x));
            let mut r = VerificationReport::new(kind, problem, &[]);
            let rel = f(u.relative_l2_error(&exact));
            r.checks.push(Check::new("velocity", Some(rel), rel, 3.0 * f(est.std_error.max_abs()), 0.05));
            r.dump = Some(render(&u, t)?);
            Ok(r)
        }
        (RepresentationKind::Weber, Problem::ChannelDecay) => {
            let series = channel_series(grid, cfg)?;
            let sol = channel_wbar(&series, &domain, cfg)?;
            let trace = Arc::new(sol.w_tilde);
            let u0 = move |x: &Point<F>| channel_decay(nu, F::zero(), x[1]).0;
            let data = BoundaryData::new()
                .with_u0(u0)
                .with_w_tilde(move |x, s| trace.at(x, s));
            let exact = VectorField::from_fn(grid, |x| channel_decay(nu, t, x[1]).0);
            let run = |data: &BoundaryData<F>| -> Result<(f64, f64, VectorField<F>)> {
                let est = estimate_weber_velocity(&series, &domain, data, &grid, t, &mc)?;
                let u = leray_project(&est.mean, &domain)?;
                Ok((f(u.relative_l2_error(&exact)), 3.0 * f(est.std_error.max_abs()), u))
            };
            let (rel, ci, u) = run(&data)?;
            let (rel_drop, _, _) = run(&data.without_boundary_weight())?;
            let mut r = VerificationReport::new(kind, problem, &[]);
            r.dump = Some(render(&u, t)?);
            r.checks.push(Check::new("velocity", Some(rel), rel, ci, 0.05));
            // Passes when the run without boundary weight is at least three
            // times worse, expressed as err <= tol on the ratio's inverse.
            let ratio = if rel_drop > 0.0 { rel / rel_drop } else { f64::INFINITY };
            r.checks.push(Check::new("without_boundary_weight", Some(rel_drop), ratio, 0.0, 1.0 / 3.0));
            Ok(r)
        }
        (RepresentationKind::Vorticity, Problem::ChannelDecay) => {
            let series = channel_series(grid, cfg)?;
            let data = channel_vorticity_data(nu);
            let times = [t * F::lit(0.5), t];
            let mut r = VerificationReport::new(kind, problem, &POINT_COLUMNS);
            for &tt in &times {
                crate::flow::time_index(tt, cfg.dt)?;
                for &y in &PROBE_Y {
                    let y = F::lit(y);
                    let est = estimate_vorticity(&series, &domain, &data, &[F::lit(0.5), y], tt, &mc)?;
                    let oracle = channel_decay(nu, tt, y).1;
                    let (row, err, ci) = pointwise_row(y, tt, &est, oracle, bias);
                    r.rows.push(row);
                    r.checks.push(Check::new(format!("y={}_t={}", f(y), f(tt)), None, err, ci, ci + bias));
                }
            }
            Ok(r)
        }
        (RepresentationKind::ScalarFk, Problem::HeatSlab) => {
            let series = FieldSeries::steady(VectorField::zeros(grid), nu)?;
            let data = heat_slab_data();
            let mut r = VerificationReport::new(kind, problem, &POINT_COLUMNS);
            for &y in &PROBE_Y {
                let y = F::lit(y);
                let est = estimate_scalar_fk(&series, &domain, &data, &[F::lit(0.5), y], t, &mc)?;
                let oracle = heat_slab(nu, t, y, &[F::one()]);
                let (row, err, ci) = pointwise_row(y, t, &est, oracle, bias);
                r.rows.push(row);
                r.checks.push(Check::new(format!("y={}", f(y)), None, err, ci, ci + bias));
            }
            Ok(r)
        }
        (RepresentationKind::Martingale, Problem::ChannelDecay) => {
            let series = channel_series(grid, cfg)?;
            let sol = channel_wbar(&series, &domain, cfg)?;
            let data = BoundaryData::new().with_wbar_series(Arc::new(sol.wbar));
            let stops: Vec<F> = (0..4).map(|k| t * F::lit([0.0, 0.25, 0.5, 0.75][k])).collect();
            let mut r = VerificationReport::new(kind, problem, &["y", "s", "component", "mean", "std_error"]);
            for &y in &[0.1, 0.3, 0.5] {
                let y = F::lit(y);
                let est = check_martingale_identity(&series, &domain, &data, &[F::lit(0.5), y], t, &stops, &mc)?;
                for c in 0..2 {
                    for (s, e) in stops.iter().zip(&est) {
                        r.rows.push(vec![
                            f(y).to_string(),
                            f(*s).to_string(),
                            c.to_string(),
                            f(e.mean[c]).to_string(),
                            f(e.std_error[c]).to_string(),
                        ]);
                    }
                    for i in 0..est.len() {
                        for j in i + 1..est.len() {
                            let err = f((est[i].mean[c] - est[j].mean[c]).abs());
                            let pooled = f(est[i].std_error[c]).hypot(f(est[j].std_error[c]));
                            let name = format!("y={}_c={c}_s={}_vs_s={}", f(y), f(stops[i]), f(stops[j]));
                            r.checks.push(Check::new(name, None, err, 3.0 * pooled, 3.0 * pooled));
                        }
                    }
                }
            }
            Ok(r)
        }
        (RepresentationKind::Circulation, Problem::TaylorGreen) => {
            let series = sampled_series(grid, cfg, move |t, x| taylor_green(nu, t, x))?;
            let pi = F::PI();
            let half = pi * F::lit(0.5);
            let loops = [
                ("centered", CurveSpec::square([pi, pi], pi, 64)?),
                ("corner", CurveSpec::square([half, half], pi, 64)?),
            ];
            let tg0 = BoundaryData::new().with_u0(move |x| taylor_green(nu, F::zero(), x));
            let mut r = VerificationReport::new(kind, problem, &["loop", "mean", "std_error", "oracle"]);
            for (name, curve) in &loops {
                let est = estimate_circulation(&series, &domain, &tg0, curve, t, &mc)?;
                let oracle = loop_integral(&curve.nodes(), |x| taylor_green(nu, t, x), 2);
                let err = f((est.mean[0] - oracle).abs());
                let ci = 3.0 * f(est.std_error[0]);
                r.rows.push(vec![
                    name.to_string(),
                    f(est.mean[0]).to_string(),
                    f(est.std_error[0]).to_string(),
                    f(oracle).to_string(),
                ]);
                r.checks.push(Check::new(*name, None, err, ci, ci));
            }
            // Initial data ∇(sin x sin y): every sample is a closed-loop
            // integral of a gradient.
            let grad = BoundaryData::new().with_u0(|x: &Point<F>| {
                [x[0].cos() * x[1].sin(), x[0].sin() * x[1].cos(), F::zero()]
            });
            let est = estimate_circulation(&series, &domain, &grad, &loops[1].1, t, &mc)?;
            let err = f(est.mean[0].abs() + F::lit(3.0) * est.std_error[0]);
            r.checks.push(Check::new("gradient_loop", None, err, 0.0, GRADIENT_LOOP_TOL));
            Ok(r)
        }
        _ => unreachable!("filtered by SUPPORTED"),
    }
}

/// Quadrature tolerance for closed-loop integrals of gradients.
pub const GRADIENT_LOOP_TOL: f64 = 1e-3;
