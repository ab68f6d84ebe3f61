//! Deterministic solvers around the representations: the periodic
//! fixed-point loop, the boundary-weight equation, and end-to-end checks.

mod verify;
mod wbar;

use serde::{Deserialize, Serialize};

use crate::domain::{DomainKind, DomainSpec};
use crate::error::{numeric, usage, Result};
use crate::estimator::{weber_field, McConfig};
use crate::field::{leray_project, FieldSeries, VectorField};
use crate::flow::{time_index, ExitDetection};
use crate::scalar::Real;

pub use verify::{
    probe_point, verify_representation, Check, Probe, Problem, RepresentationKind, VerificationReport, PROBE_Y, SUPPORTED,
};
pub use wbar::{solve_wbar_pde, WallTrace, WbarSolution};

/// Discretisation and sampling parameters for the solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "F: Real + Serialize + serde::de::DeserializeOwned")]
pub struct SolverConfig<F> {
    pub nu: F,
    pub t_final: F,
    /// Path step (and step of the boundary-weight PDE).
    pub dt: F,
    pub dt_snap: F,
    pub shape: Vec<usize>,
    pub n_paths: usize,
    #[serde(default = "default_picard_iters")]
    pub picard_iters: usize,
    #[serde(default = "default_picard_tol")]
    pub picard_tol: F,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub exit: ExitDetection,
}

fn default_picard_iters() -> usize {
    4
}

fn default_picard_tol<F: Real>() -> F {
    F::lit(1e-3)
}

fn default_workers() -> usize {
    1
}

impl<F: Real> SolverConfig<F> {
    pub fn validate(&self) -> Result<()> {
        let positive = [("nu", self.nu), ("t_final", self.t_final), ("dt", self.dt), ("dt_snap", self.dt_snap)];
        for (name, v) in positive {
            if !(v > F::zero()) || !v.is_finite() {
                return usage(format!("{name} must be positive, got {v}"));
            }
        }
        if self.dt > self.dt_snap {
            return usage("dt must not exceed dt_snap");
        }
        if self.picard_iters == 0 {
            return usage("picard_iters must be at least 1");
        }
        if !(self.picard_tol > F::zero()) {
            return usage("picard_tol must be positive");
        }
        if self.n_paths < 2 {
            return usage("n_paths must be at least 2");
        }
        time_index(self.dt_snap, self.dt)?;
        time_index(self.t_final, self.dt_snap)?;
        Ok(())
    }

    pub fn mc(&self) -> McConfig<F> {
        McConfig {
            n: self.n_paths,
            dt: self.dt,
            seed: self.seed,
            workers: self.workers,
            antithetic: false,
            exit: self.exit,
        }
    }

    pub(crate) fn snapshot_count(&self) -> usize {
        (self.t_final / self.dt_snap).round().to_usize().unwrap_or(0)
    }
}

/// Relative L2 change per Picard iterate, one list per snapshot interval.
pub type PicardLog<F> = Vec<Vec<F>>;

/// Marches the periodic fixed point snapshot by snapshot. Each new snapshot
/// is iterated as `u ← P E[∇ᵀA·u_prev(A)]`, with paths run from the new
/// snapshot time back to the previous one through the series extended by
/// the current iterate.
pub fn solve_periodic_ns<F: Real>(
    u0: &VectorField<F>,
    cfg: &SolverConfig<F>,
    domain: &DomainSpec<F>,
) -> Result<FieldSeries<F>> {
    solve_periodic_ns_logged(u0, cfg, domain).map(|(s, _)| s)
}

/// [`solve_periodic_ns`] that also returns the Picard deltas.
pub fn solve_periodic_ns_logged<F: Real>(
    u0: &VectorField<F>,
    cfg: &SolverConfig<F>,
    domain: &DomainSpec<F>,
) -> Result<(FieldSeries<F>, PicardLog<F>)> {
    cfg.validate()?;
    if domain.kind() != DomainKind::Torus {
        return usage("the fixed-point solver needs a periodic domain");
    }
    let start = leray_project(u0, domain)?;
    let grid = *start.grid();
    let mc = cfg.mc();
    let mut series = FieldSeries::new(vec![(F::zero(), start)], cfg.nu)?;
    let mut log = Vec::new();
    for k in 0..cfg.snapshot_count() {
        let t_prev = F::from_usize_lossy(k) * cfg.dt_snap;
        let t_next = F::from_usize_lossy(k + 1) * cfg.dt_snap;
        let (s_index, t_index) = (time_index(t_prev, cfg.dt)?, time_index(t_next, cfg.dt)?);
        let prev = series.snapshot(series.len() - 1).1.clone();
        let mut guess = prev.clone();
        series.push(t_next, guess.clone())?;
        let mut deltas: Vec<F> = Vec::new();
        for _ in 0..cfg.picard_iters {
            series.replace_last(guess.clone());
            let init = |x: &crate::scalar::Point<F>| prev.interpolate_cubic(x);
            let est = weber_field(&series, domain, &grid, t_index, s_index, &init, None, &mc)?;
            let next = leray_project(&est.mean, domain)?;
            let scale = next.l2_norm().max(F::min_positive_value());
            let delta = next.axpby(F::one(), &guess, -F::one()).l2_norm() / scale;
            guess = next;
            deltas.push(delta);
            let m = deltas.len();
            if m >= 3 && deltas[m - 1] > deltas[m - 2] && deltas[m - 2] > deltas[m - 3] {
                return numeric(format!(
                    "Picard iteration diverging at t = {t_next}: deltas {:?}",
                    deltas.iter().map(|d| d.to_f64_lossy()).collect::<Vec<_>>()
                ));
            }
            if delta < cfg.picard_tol {
                break;
            }
        }
        series.replace_last(guess);
        log.push(deltas);
    }
    Ok((series, log))
}
