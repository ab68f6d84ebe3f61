//! Config-driven experiment runner: a TOML file names a registered
//! experiment, and the run writes CSV tables, grid dumps and a summary.
//!
//! ```toml
//! experiment = "scalar_fk_heat_slab"
//! output = "out/heat_slab"   # optional, relative to the config file
//! seed = 7                   # optional, overrides solver.seed
//!
//! [solver]
//! nu = 1.0
//! t_final = 0.1
//! dt = 1e-4
//! dt_snap = 0.1
//! shape = [4, 9]
//! n_paths = 100000
//!
//! [ladder]                   # dt_ladder and n_ladder only
//! target = "vorticity_channel_decay"
//! y = 0.1
//! levels = [0.01, 0.005, 0.0025]
//! slope = [0.7, 1.3]
//! ```

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use crate::domain::{DomainKind, DomainSpec};
use crate::error::{usage, Error, Result};
use crate::estimator::run_pool;
use crate::field::{divergence, dump, gradient, leray_project, Grid, ScalarField, VectorField};
use crate::flow::{simulate_backward, AnalyticVelocity, RngStream};
use crate::reference::{taylor_green, taylor_green_gradient};
use crate::scalar::Point;
use crate::solver::{
    probe_point, solve_periodic_ns_logged, verify_representation, Problem, RepresentationKind, SolverConfig, SUPPORTED,
};

/// Optional domain block; verification cases carry their own domain and
/// only accept a matching one.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainBlock {
    pub kind: DomainKind,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DomainBlock {
    pub fn build(&self) -> Result<DomainSpec<f64>> {
        DomainSpec::new(self.kind, &self.lower, &self.upper)
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderBlock {
    /// A pointwise verification experiment, e.g. `vorticity_channel_decay`.
    pub target: String,
    /// Wall-normal coordinate of the probe point.
    pub y: f64,
    /// Step sizes (dt ladder) or path counts (n ladder).
    pub levels: Vec<f64>,
    /// Accepted range of the fitted log-log slope.
    #[serde(default)]
    pub slope: Option<[f64; 2]>,
}

/// Initial velocity for `periodic_ns`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialBlock {
    /// Grid dump to start from; Taylor–Green when absent.
    #[serde(default)]
    pub file: Option<PathBuf>,
    /// Relative L2 tolerance against Taylor–Green (ignored for file input).
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Allowed relative energy growth between snapshots.
    #[serde(default = "default_energy_slack")]
    pub energy_slack: f64,
}

fn default_tolerance() -> f64 {
    0.05
}

fn default_energy_slack() -> f64 {
    0.02
}

impl Default for InitialBlock {
    fn default() -> Self {
        Self {
            file: None,
            tolerance: default_tolerance(),
            energy_slack: default_energy_slack(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub domain: Option<DomainBlock>,
    pub solver: SolverConfig<f64>,
    #[serde(default)]
    pub ladder: Option<LadderBlock>,
    #[serde(default)]
    pub initial: Option<InitialBlock>,
    /// Directory relative paths resolve against; set by [`ExperimentConfig::load`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    /// Parses TOML text; errors carry the offending line.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        if let Some(file) = cfg.initial.as_ref().and_then(|i| i.file.as_ref()) {
            let full = cfg.base_dir.join(file);
            if !full.is_file() {
                return Err(Error::Config(format!("initial file {} does not exist", full.display())));
            }
        }
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        let name = self.experiment.as_str();
        if !list_experiments().iter().any(|(n, _)| *n == name) {
            return usage(format!("unknown experiment {name:?}; registered: {}", names().join(", ")));
        }
        let is_ladder = name == "dt_ladder" || name == "n_ladder";
        if is_ladder != self.ladder.is_some() {
            return usage(if is_ladder {
                "ladder experiments need a [ladder] block"
            } else {
                "[ladder] is only valid for dt_ladder and n_ladder"
            });
        }
        if self.initial.is_some() && name != "periodic_ns" {
            return usage("[initial] is only valid for periodic_ns");
        }
        Ok(())
    }

    /// Solver block with the seed override applied.
    fn solver(&self) -> SolverConfig<f64> {
        let mut s = self.solver.clone();
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        s
    }
}

/// Registered experiment names with a one-line description.
pub fn list_experiments() -> Vec<(&'static str, &'static str)> {
    vec![
        ("weber_taylor_green", "projected Weber average on the torus vs Taylor–Green"),
        ("weber_channel_decay", "Weber average with boundary weight in the channel, with and without it"),
        ("vorticity_channel_decay", "channel vorticity at 5 heights and 2 times"),
        ("scalar_fk_heat_slab", "absorbed heat flow in a slab at 5 heights"),
        ("martingale_channel_decay", "boundary-weight averages at 4 stopping levels"),
        ("circulation_taylor_green", "circulation around square loops, plus a gradient loop"),
        ("periodic_ns", "fixed-point Navier–Stokes march on the torus"),
        ("jacobian_taylor_green", "volume defect of the transported Jacobian at dt and dt/2"),
        ("leray_random_fields", "projection identities on random torus fields"),
        ("dt_ladder", "bias against step size at one point, with log-log slope"),
        ("n_ladder", "standard error against path count at one point, with log-log slope"),
    ]
}

fn names() -> Vec<&'static str> {
    list_experiments().into_iter().map(|(n, _)| n).collect()
}

fn parse_pair(name: &str) -> Option<(RepresentationKind, Problem)> {
    SUPPORTED
        .iter()
        .copied()
        .find(|(k, p)| format!("{}_{}", k.name(), p.name()) == name)
}

/// What a run produced.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub summary: String,
    /// Output file name and contents, in write order.
    pub files: Vec<(String, String)>,
}

impl Outcome {
    /// Writes every file plus `summary.txt` under `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (name, body) in &self.files {
            fs::write(dir.join(name), body)?;
        }
        fs::write(dir.join("summary.txt"), &self.summary)?;
        Ok(())
    }
}

fn to_string(write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<String> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(String::from_utf8(buf).expect("outputs are UTF-8"))
}

/// Runs the configured experiment without touching the filesystem
/// (apart from reading an initial-data file).
pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.check()?;
    let solver = cfg.solver();
    let name = cfg.experiment.as_str();
    if let Some((kind, problem)) = parse_pair(name) {
        if let Some(block) = &cfg.domain {
            if block.build()? != problem.domain() {
                return usage(format!("{name} is posed on its own domain; drop or correct [domain]"));
            }
        }
        let report = verify_representation(kind, problem, &solver)?;
        let mut files = vec![("checks.csv".to_string(), to_string(|b| report.write_checks_csv(b))?)];
        if !report.rows.is_empty() {
            files.push(("points.csv".into(), to_string(|b| report.write_detail_csv(b))?));
        }
        if let Some(d) = &report.dump {
            files.push(("velocity.dump".into(), d.clone()));
        }
        return Ok(Outcome {
            passed: report.passed(),
            summary: report.summary(),
            files,
        });
    }
    match name {
        "periodic_ns" => run_periodic_ns(cfg, &solver),
        "jacobian_taylor_green" => run_jacobian(&solver),
        "leray_random_fields" => run_leray(&solver),
        "dt_ladder" | "n_ladder" => {
            let block = cfg.ladder.as_ref().expect("checked");
            let by = if name == "dt_ladder" { LadderParam::Dt } else { LadderParam::N };
            let res = convergence_ladder(block, &solver, by)?;
            Ok(Outcome {
                passed: res.pass,
                summary: res.summary(name),
                files: vec![("ladder.csv".into(), res.csv())],
            })
        }
        _ => unreachable!("registry and dispatch agree"),
    }
}

fn run_periodic_ns(cfg: &ExperimentConfig, solver: &SolverConfig<f64>) -> Result<Outcome> {
    let domain = match &cfg.domain {
        Some(b) => b.build()?,
        None => DomainSpec::torus(solver.shape.len()),
    };
    if domain.kind() != DomainKind::Torus {
        return usage("periodic_ns runs on the torus only");
    }
    let grid = Grid::new(&domain, &solver.shape)?;
    let init = cfg.initial.clone().unwrap_or_default();
    let (u0, oracle) = match &init.file {
        Some(f) => (load_field(&cfg.base_dir.join(f), &grid)?, false),
        None => {
            if domain.dim() != 2 {
                return usage("the Taylor–Green start is two-dimensional; supply [initial] file for 3D");
            }
            (VectorField::from_fn(grid, |x| taylor_green(solver.nu, 0.0, x)), true)
        }
    };
    let (series, log) = solve_periodic_ns_logged(&u0, solver, &domain)?;
    let mut csv = String::from("t,rel_l2,energy,divergence,picard_iterations,last_delta\n");
    let mut worst_rel: f64 = 0.0;
    let mut worst_div: f64 = 0.0;
    let mut growth: f64 = 0.0;
    let mut prev_energy = None;
    for (k, (t, u)) in series.snapshots().enumerate() {
        let rel = if oracle {
            u.relative_l2_error(&VectorField::from_fn(grid, |x| taylor_green(solver.nu, t, x)))
        } else {
            f64::NAN
        };
        let energy = u.l2_norm();
        let div = divergence(u, &domain)?.max_abs();
        let (iters, last) = match k.checked_sub(1).map(|i| &log[i]) {
            Some(d) => (d.len(), d.last().copied().unwrap_or(0.0)),
            None => (0, 0.0),
        };
        let rel_text = if oracle { rel.to_string() } else { String::new() };
        let _ = writeln!(csv, "{t},{rel_text},{energy},{div},{iters},{last}");
        if oracle {
            worst_rel = worst_rel.max(rel);
        }
        worst_div = worst_div.max(div);
        if let Some(p) = prev_energy {
            if p > 0.0 {
                growth = growth.max(energy / p - 1.0);
            }
        }
        prev_energy = Some(energy);
    }
    let mut checks = vec![
        ("divergence", worst_div, 1e-8),
        ("energy_growth", growth, init.energy_slack),
    ];
    if oracle {
        checks.insert(0, ("velocity", worst_rel, init.tolerance));
    }
    let (passed, table, summary) = tabulate("periodic_ns", &checks);
    let (t_end, u_end) = series.snapshot(series.len() - 1);
    let final_dump = to_string(|b| dump::write_vector(b, u_end, t_end))?;
    Ok(Outcome {
        passed,
        summary,
        files: vec![
            ("checks.csv".into(), table),
            ("series.csv".into(), csv),
            ("velocity.dump".into(), final_dump),
        ],
    })
}

/// Turns `(name, err, tol)` triples into a check table and summary.
fn tabulate(title: &str, checks: &[(&str, f64, f64)]) -> (bool, String, String) {
    let passed = checks.iter().all(|c| c.1 <= c.2);
    let mut table = String::from("check,rel_l2,max_err,ci_margin,tolerance,pass\n");
    let mut summary = format!("{title}: {}\n", if passed { "PASS" } else { "FAIL" });
    for (name, err, tol) in checks {
        let pass = err <= tol;
        let _ = writeln!(table, "{name},,{err},0,{tol},{pass}");
        let _ = writeln!(summary, "  [{}] {name}: err {err:.3e} <= {tol:.3e}", if pass { "ok" } else { "FAIL" });
    }
    (passed, table, summary)
}

/// Paths start at every node of the solver grid, `n_paths` per node, and
/// run back from `t_final` on the exact Taylor–Green flow at `dt` and `dt/2`.
fn run_jacobian(solver: &SolverConfig<f64>) -> Result<Outcome> {
    let domain = DomainSpec::torus(2);
    let grid = Grid::new(&domain, &solver.shape)?;
    let nu = solver.nu;
    let src = AnalyticVelocity {
        dim: 2,
        nu,
        velocity: move |x: &Point<f64>, t: f64| taylor_green(nu, t, x),
        gradient: move |x: &Point<f64>, t: f64| taylor_green_gradient(nu, t, x),
    };
    let median_defect = |dt: f64| -> Result<f64> {
        let jobs: Vec<(usize, usize)> = (0..grid.len())
            .flat_map(|node| (0..solver.n_paths).map(move |i| (node, i)))
            .collect();
        let mut defects = run_pool(solver.workers, || {
            jobs.par_iter()
                .map(|&(node, i)| {
                    let x = grid.node(node);
                    let rng = RngStream::new(solver.seed, (node * solver.n_paths + i) as u64);
                    simulate_backward(&src, &domain, &x[..2], solver.t_final, 0.0, dt, rng, solver.exit)
                        .map(|p| (p.jacobian[0][0] * p.jacobian[1][1] - p.jacobian[0][1] * p.jacobian[1][0] - 1.0).abs())
                })
                .collect::<Result<Vec<f64>>>()
        })??;
        defects.sort_by(f64::total_cmp);
        let m = defects.len();
        Ok(if m % 2 == 1 { defects[m / 2] } else { 0.5 * (defects[m / 2 - 1] + defects[m / 2]) })
    };
    let dt = solver.dt;
    let (coarse, fine) = (median_defect(dt)?, median_defect(dt * 0.5)?);
    let ratio = coarse / fine;
    let csv = format!("dt,median_defect\n{dt},{coarse}\n{},{fine}\n", dt * 0.5);
    // The ratio check passes when fine/coarse <= 1/1.7.
    let (passed, table, summary) = tabulate(
        "jacobian_taylor_green",
        &[("median_defect", coarse, 10.0 * dt), ("halving_ratio_inverse", 1.0 / ratio, 1.0 / 1.7)],
    );
    Ok(Outcome {
        passed,
        summary,
        files: vec![("checks.csv".into(), table), ("defect.csv".into(), csv)],
    })
}

/// `n_paths` standard-normal vector fields on the torus grid.
fn run_leray(solver: &SolverConfig<f64>) -> Result<Outcome> {
    let d = solver.shape.len();
    let domain = DomainSpec::torus(d);
    let grid = Grid::new(&domain, &solver.shape)?;
    let noise = |stream: u64| -> Vec<f64> {
        let rng = RngStream::new(solver.seed, stream);
        (0..grid.len() as u64).map(|k| rng.normals::<f64>(k)[0]).collect()
    };
    let mut csv = String::from("field,idempotence,gradient,divergence\n");
    let (mut worst_idem, mut worst_grad, mut worst_div) = (0.0f64, 0.0f64, 0.0f64);
    for f in 0..solver.n_paths {
        let base = (f * (d + 1)) as u64;
        let comps = (0..d)
            .map(|c| ScalarField::from_values(grid, noise(base + c as u64)))
            .collect::<Result<Vec<_>>>()?;
        let v = VectorField::from_components(comps)?;
        let p = leray_project(&v, &domain)?;
        let idem = leray_project(&p, &domain)?.axpby(1.0, &p, -1.0).max_abs();
        let phi = ScalarField::from_values(grid, noise(base + d as u64))?;
        let grad = leray_project(&gradient(&phi, &domain)?, &domain)?.max_abs();
        let div = divergence(&p, &domain)?.max_abs();
        let _ = writeln!(csv, "{f},{idem},{grad},{div}");
        worst_idem = worst_idem.max(idem);
        worst_grad = worst_grad.max(grad);
        worst_div = worst_div.max(div);
    }
    let (passed, table, summary) = tabulate(
        "leray_random_fields",
        &[("idempotence", worst_idem, 1e-10), ("gradient_annihilation", worst_grad, 1e-10), ("divergence", worst_div, 1e-10)],
    );
    Ok(Outcome {
        passed,
        summary,
        files: vec![("checks.csv".into(), table), ("fields.csv".into(), csv)],
    })
}

/// Reads a grid dump whose layout matches `grid`.
fn load_field(path: &Path, grid: &Grid<f64>) -> Result<VectorField<f64>> {
    let text = fs::read(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let d = dump::read(&text[..])?;
    if d.shape != grid.shape() {
        return Err(Error::Config(format!(
            "{}: shape {:?} does not match the solver grid {:?}",
            path.display(),
            d.shape,
            grid.shape()
        )));
    }
    let comps = d.values.first().map_or(0, Vec::len);
    if comps != grid.dim() {
        return Err(Error::Config(format!("{}: expected {} components, found {comps}", path.display(), grid.dim())));
    }
    let fields = (0..comps)
        .map(|c| ScalarField::from_values(*grid, d.values.iter().map(|v| v[c]).collect()))
        .collect::<Result<Vec<_>>>()?;
    VectorField::from_components(fields)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LadderParam {
    Dt,
    N,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LadderRow {
    pub dt: f64,
    pub n: usize,
    pub mean: f64,
    pub std_error: f64,
    pub oracle: f64,
}

impl LadderRow {
    pub fn error(&self) -> f64 {
        (self.mean - self.oracle).abs()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LadderResult {
    pub param: LadderParam,
    pub rows: Vec<LadderRow>,
    pub slope: f64,
    pub range: [f64; 2],
    pub pass: bool,
    /// Why the ladder failed, beyond the slope range.
    pub note: Option<String>,
}

impl LadderResult {
    pub fn csv(&self) -> String {
        let mut s = String::from("level,dt,n,mean,std_error,oracle,error\n");
        for (i, r) in self.rows.iter().enumerate() {
            let _ = writeln!(s, "{i},{},{},{},{},{},{}", r.dt, r.n, r.mean, r.std_error, r.oracle, r.error());
        }
        s
    }

    pub fn summary(&self, name: &str) -> String {
        let mut s = format!(
            "{name}: {}\n  slope {:.4} (accepted {} .. {})\n",
            if self.pass { "PASS" } else { "FAIL" },
            self.slope,
            self.range[0],
            self.range[1]
        );
        if let Some(n) = &self.note {
            let _ = writeln!(s, "  {n}");
        }
        s
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Repeats a point probe across step sizes or path counts and fits the
/// log-log slope of the bias (dt) or of the standard error (n). A dt ladder
/// only counts when the bias at every level stands out of the noise.
pub fn convergence_ladder(block: &LadderBlock, solver: &SolverConfig<f64>, by: LadderParam) -> Result<LadderResult> {
    if block.levels.len() < 3 {
        return usage(format!("a ladder needs at least 3 levels, got {}", block.levels.len()));
    }
    let (kind, problem) = parse_pair(&block.target)
        .ok_or_else(|| Error::Usage(format!("unknown ladder target {:?}", block.target)))?;
    let range = block.slope.unwrap_or(match by {
        LadderParam::Dt => [0.7, 1.3],
        LadderParam::N => [-0.6, -0.4],
    });
    let mut rows = Vec::with_capacity(block.levels.len());
    for &level in &block.levels {
        let mut cfg = solver.clone();
        match by {
            LadderParam::Dt => cfg.dt = level,
            LadderParam::N => {
                if level < 2.0 || level.fract() != 0.0 {
                    return usage(format!("path count {level} is not an integer >= 2"));
                }
                cfg.n_paths = level as usize;
            }
        }
        let p = probe_point(kind, problem, &cfg, block.y)?;
        rows.push(LadderRow {
            dt: cfg.dt,
            n: cfg.n_paths,
            mean: p.mean,
            std_error: p.std_error,
            oracle: p.oracle,
        });
    }
    let xs: Vec<f64> = rows
        .iter()
        .map(|r| match by {
            LadderParam::Dt => r.dt,
            LadderParam::N => r.n as f64,
        })
        .collect();
    let mut note = None;
    let ys: Vec<f64> = match by {
        LadderParam::Dt => {
            if let Some(r) = rows.iter().find(|r| r.error() <= 3.0 * r.std_error) {
                note = Some(format!(
                    "bias unresolved at dt = {}: error {:.3e} within 3 standard errors ({:.3e})",
                    r.dt,
                    r.error(),
                    3.0 * r.std_error
                ));
            }
            rows.iter().map(LadderRow::error).collect()
        }
        LadderParam::N => rows.iter().map(|r| r.std_error).collect(),
    };
    let slope = if ys.iter().all(|&y| y > 0.0) {
        fit_loglog_slope(&xs, &ys)
    } else {
        note.get_or_insert_with(|| "zero error at some level; slope undefined".into());
        f64::NAN
    };
    let pass = note.is_none() && slope >= range[0] && slope <= range[1];
    Ok(LadderResult {
        param: by,
        rows,
        slope,
        range,
        pass,
        note,
    })
}

/// Runs a config file and writes its outputs. `output` overrides the
/// directory named in the file; `seed` and `workers` override the solver.
pub fn run_file(path: &Path, output: Option<&Path>, seed: Option<u64>, workers: Option<usize>) -> Result<Outcome> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = Some(s);
    }
    if let Some(w) = workers {
        cfg.solver.workers = w;
    }
    let dir = match (output, &cfg.output) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(o)) => cfg.base_dir.join(o),
        (None, None) => return usage("no output directory: set `output` in the config or pass one"),
    };
    let outcome = run(&cfg)?;
    outcome.write_to(&dir)?;
    Ok(outcome)
}

/// Writes the registry, one experiment per line.
pub fn print_registry(out: &mut impl Write) -> Result<()> {
    for (n, d) in list_experiments() {
        writeln!(out, "{n:26} {d}")?;
    }
    Ok(())
}
