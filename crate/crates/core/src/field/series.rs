//! Time-indexed velocity snapshots.

use crate::domain::DomainSpec;
use crate::error::{usage, Result};
use crate::scalar::{to_point, Mat, Point, Real};

use super::ops::check_grid;
use super::{Grid, VectorField};

/// Velocity snapshots at uniformly spaced, increasing times together with the
/// viscosity. A series with a single snapshot is treated as steady.
#[derive(Clone, Debug)]
pub struct FieldSeries<F> {
    times: Vec<F>,
    fields: Vec<VectorField<F>>,
    nu: F,
}

impl<F: Real> FieldSeries<F> {
    pub fn new(snapshots: Vec<(F, VectorField<F>)>, nu: F) -> Result<Self> {
        if !(nu > F::zero()) || !nu.is_finite() {
            return usage(format!("viscosity must be positive, got {nu}"));
        }
        if snapshots.is_empty() {
            return usage("a field series needs at least one snapshot");
        }
        let grid = *snapshots[0].1.grid();
        let (times, fields): (Vec<F>, Vec<VectorField<F>>) = snapshots.into_iter().unzip();
        if fields.iter().any(|f| !f.grid().same_layout(&grid)) {
            return usage("snapshots live on different grids");
        }
        if times.len() > 1 {
            let step = times[1] - times[0];
            if !(step > F::zero()) {
                return usage("snapshot times must be strictly increasing");
            }
            for (k, pair) in times.windows(2).enumerate() {
                let gap = pair[1] - pair[0];
                if (gap - step).abs() > F::lit(1e-9) * step.max(F::one()) {
                    return usage(format!("snapshot spacing is not uniform at index {}", k + 1));
                }
            }
        }
        Ok(Self { times, fields, nu })
    }

    pub fn steady(field: VectorField<F>, nu: F) -> Result<Self> {
        Self::new(vec![(F::zero(), field)], nu)
    }

    pub fn nu(&self) -> F {
        self.nu
    }

    pub fn grid(&self) -> &Grid<F> {
        self.fields[0].grid()
    }

    pub fn dim(&self) -> usize {
        self.grid().dim()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn is_steady(&self) -> bool {
        self.times.len() == 1
    }

    pub fn times(&self) -> &[F] {
        &self.times
    }

    pub fn snapshot(&self, k: usize) -> (F, &VectorField<F>) {
        (self.times[k], &self.fields[k])
    }

    pub fn snapshots(&self) -> impl Iterator<Item = (F, &VectorField<F>)> {
        self.times.iter().copied().zip(self.fields.iter())
    }

    pub fn first_time(&self) -> F {
        self.times[0]
    }

    pub fn last_time(&self) -> F {
        *self.times.last().unwrap()
    }

    /// Appends a snapshot one spacing after the last one.
    pub fn push(&mut self, t: F, field: VectorField<F>) -> Result<()> {
        if !field.grid().same_layout(self.grid()) {
            return usage("snapshot lives on a different grid");
        }
        let mut snaps: Vec<_> = self.times.iter().copied().zip(self.fields.drain(..)).collect();
        snaps.push((t, field));
        *self = Self::new(snaps, self.nu)?;
        Ok(())
    }

    /// Replaces the newest snapshot.
    pub fn replace_last(&mut self, field: VectorField<F>) {
        assert!(field.grid().same_layout(self.grid()));
        *self.fields.last_mut().unwrap() = field;
    }

    /// Whether `t` lies in the covered time range (within rounding).
    pub fn covers(&self, t: F) -> bool {
        if self.is_steady() {
            return true;
        }
        let slack = F::lit(1e-9) * (self.times[1] - self.times[0]);
        t >= self.first_time() - slack && t <= self.last_time() + slack
    }

    fn bracket(&self, t: F) -> (usize, F) {
        if self.is_steady() {
            return (0, F::zero());
        }
        let dt = self.times[1] - self.times[0];
        let pos = ((t - self.times[0]) / dt).max(F::zero());
        let last = self.times.len() - 2;
        let k = pos.floor().to_usize().unwrap_or(0).min(last);
        let theta = (pos - F::from_usize_lossy(k)).max(F::zero()).min(F::one());
        (k, theta)
    }

    /// Nodal field at time `t`, blended linearly between snapshots.
    pub fn field_at(&self, t: F) -> VectorField<F> {
        let (k, theta) = self.bracket(t);
        if theta == F::zero() {
            return self.fields[k].clone();
        }
        self.fields[k].axpby(F::one() - theta, &self.fields[k + 1], theta)
    }

    /// Velocity at `x` and `t`, without range checks.
    pub(crate) fn velocity_at(&self, x: &Point<F>, t: F) -> Point<F> {
        let (k, theta) = self.bracket(t);
        let st = self.grid().stencil(x);
        let a = self.fields[k].apply_stencil(&st);
        if theta == F::zero() {
            return a;
        }
        let b = self.fields[k + 1].apply_stencil(&st);
        let mut out = a;
        for i in 0..3 {
            out[i] = a[i] + theta * (b[i] - a[i]);
        }
        out
    }

    /// Velocity gradient `G[i][j] = ∂u_i/∂x_j` by centered differences of the
    /// interpolant with half-cell offsets.
    pub(crate) fn gradient_at(&self, x: &Point<F>, t: F) -> Mat<F> {
        let d = self.dim();
        let mut g = [[F::zero(); 3]; 3];
        for j in 0..d {
            let delta = self.grid().spacing()[j] * F::lit(0.5);
            let mut xp = *x;
            let mut xm = *x;
            xp[j] = xp[j] + delta;
            xm[j] = xm[j] - delta;
            let up = self.velocity_at(&xp, t);
            let um = self.velocity_at(&xm, t);
            for i in 0..d {
                g[i][j] = (up[i] - um[i]) / (delta + delta);
            }
        }
        g
    }
}

/// Velocity of `series` at point `x` and time `t`.
pub fn sample_velocity<F: Real>(series: &FieldSeries<F>, domain: &DomainSpec<F>, x: &[F], t: F) -> Result<Point<F>> {
    check_grid(series.grid(), domain)?;
    if x.len() != domain.dim() {
        return usage(format!("point has {} coordinates, domain is {}-dimensional", x.len(), domain.dim()));
    }
    if !series.covers(t) {
        return usage(format!(
            "time {t} outside the series range [{}, {}]",
            series.first_time(),
            series.last_time()
        ));
    }
    let p = to_point(x).ok_or_else(|| crate::Error::Usage("point has too many coordinates".into()))?;
    Ok(series.velocity_at(&p, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;

    fn constant(g: Grid<f64>, c: [f64; 2]) -> VectorField<f64> {
        VectorField::from_components(vec![
            ScalarField::from_fn(g, |_| c[0]),
            ScalarField::from_fn(g, |_| c[1]),
        ])
        .unwrap()
    }

    #[test]
    fn node_and_snapshot_identity() {
        let d = DomainSpec::<f64>::torus(2);
        let g = Grid::new(&d, &[8, 8]).unwrap();
        let v = VectorField::from_fn(g, |p| [p[0].sin(), p[1].cos() * p[0], 0.0]);
        let s = FieldSeries::new(vec![(0.0, v.clone()), (0.5, v.axpby(2.0, &v, 0.0))], 0.1).unwrap();
        let n = g.flat_index(&[3, 5]);
        let x = g.node(n);
        let got = sample_velocity(&s, &d, &x[..2], 0.0).unwrap();
        assert_eq!(got, v.at(n));
    }

    #[test]
    fn time_midpoint_blends() {
        let d = DomainSpec::<f64>::torus(2);
        let g = Grid::new(&d, &[4, 4]).unwrap();
        let s = FieldSeries::new(vec![(0.0, constant(g, [1.0, -2.0])), (1.0, constant(g, [3.0, 4.0]))], 1.0).unwrap();
        let got = sample_velocity(&s, &d, &[0.3, 1.7], 0.5).unwrap();
        assert!((got[0] - 2.0).abs() < 1e-15 && (got[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_time_rejected() {
        let d = DomainSpec::<f64>::torus(2);
        let g = Grid::new(&d, &[4, 4]).unwrap();
        let s = FieldSeries::new(vec![(0.0, constant(g, [0.0, 0.0])), (1.0, constant(g, [0.0, 0.0]))], 1.0).unwrap();
        assert!(sample_velocity(&s, &d, &[0.0, 0.0], 1.5).is_err());
        assert!(sample_velocity(&s, &d, &[0.0, 0.0], -0.1).is_err());
    }

    #[test]
    fn bad_series_rejected() {
        let d = DomainSpec::<f64>::torus(2);
        let g = Grid::new(&d, &[4, 4]).unwrap();
        let c = constant(g, [0.0, 0.0]);
        assert!(FieldSeries::new(vec![(0.0, c.clone())], 0.0).is_err());
        assert!(FieldSeries::new(vec![(0.0, c.clone()), (0.0, c.clone())], 1.0).is_err());
        assert!(FieldSeries::new(vec![(0.0, c.clone()), (1.0, c.clone()), (3.0, c)], 1.0).is_err());
    }

    #[test]
    fn gradient_of_affine_field_is_exact() {
        let d = DomainSpec::<f64>::new(crate::DomainKind::Rectangle, &[0.0, 0.0], &[1.0, 2.0]).unwrap();
        let g = Grid::new(&d, &[5, 9]).unwrap();
        let v = VectorField::from_fn(g, |p| [1.0 + 2.0 * p[0] - p[1], 0.5 * p[0] + 3.0 * p[1], 0.0]);
        let s = FieldSeries::steady(v, 0.1).unwrap();
        for x in [[0.013, 0.4, 0.0], [0.99, 1.99, 0.0], [0.5, 0.0, 0.0]] {
            let gr = s.gradient_at(&x, 7.0);
            let want = [[2.0f64, -1.0], [0.5, 3.0]];
            for i in 0..2 {
                for j in 0..2 {
                    assert!((gr[i][j] - want[i][j]).abs() < 1e-12);
                }
            }
        }
    }
}
