//! Spatial domains: the periodic torus, an axis-aligned box with walls on
//! every face, and a channel that is periodic along axis 0 only.
//!
//! Points on periodic axes are never wrapped by the path integrator; every
//! routine here accepts unwrapped coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::scalar::{to_point, zero_point, Point, Real, MAX_DIM};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Torus,
    Rectangle,
    ChannelX,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DomainSpec<F> {
    kind: DomainKind,
    dim: usize,
    lower: Point<F>,
    upper: Point<F>,
}

/// Where a path segment leaves the domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossingRecord<F> {
    /// Fraction of the segment travelled before hitting the wall, in (0, 1].
    pub lambda: F,
    /// Crossing point, snapped exactly onto the wall coordinate.
    pub point: Point<F>,
    pub wall_axis: usize,
}

impl<F: Real> DomainSpec<F> {
    pub fn new(kind: DomainKind, lower: &[F], upper: &[F]) -> Result<Self> {
        let dim = lower.len();
        if !(2..=MAX_DIM).contains(&dim) {
            return usage(format!("domain dimension must be 2 or 3, got {dim}"));
        }
        if upper.len() != dim {
            return usage("lower and upper bounds differ in dimension");
        }
        for a in 0..dim {
            if !lower[a].is_finite() || !upper[a].is_finite() || lower[a] >= upper[a] {
                return usage(format!(
                    "axis {a}: bounds must be finite with lower < upper ({} .. {})",
                    lower[a], upper[a]
                ));
            }
        }
        Ok(Self {
            kind,
            dim,
            lower: to_point(lower).unwrap(),
            upper: to_point(upper).unwrap(),
        })
    }

    /// `[0, 2π]^d` torus.
    pub fn torus(dim: usize) -> Self {
        let two_pi = F::PI() + F::PI();
        let hi = vec![two_pi; dim];
        Self::new(DomainKind::Torus, &vec![F::zero(); dim], &hi).expect("valid torus")
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower(&self) -> &[F] {
        &self.lower[..self.dim]
    }

    pub fn upper(&self) -> &[F] {
        &self.upper[..self.dim]
    }

    pub fn length(&self, axis: usize) -> F {
        self.upper[axis] - self.lower[axis]
    }

    pub fn is_periodic(&self, axis: usize) -> bool {
        match self.kind {
            DomainKind::Torus => true,
            DomainKind::Rectangle => false,
            DomainKind::ChannelX => axis == 0,
        }
    }

    pub fn has_walls(&self) -> bool {
        self.kind != DomainKind::Torus
    }

    pub fn walled_axes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.dim).filter(move |&a| !self.is_periodic(a))
    }

    pub(crate) fn check_point(&self, x: &[F]) -> Result<Point<F>> {
        if x.len() != self.dim {
            return usage(format!(
                "point has dimension {}, domain has dimension {}",
                x.len(),
                self.dim
            ));
        }
        Ok(to_point(x).unwrap())
    }

    /// Membership in the open set; periodic coordinates always pass.
    #[inline]
    pub(crate) fn contains_point(&self, x: &Point<F>) -> bool {
        (0..self.dim).all(|a| self.is_periodic(a) || (x[a] > self.lower[a] && x[a] < self.upper[a]))
    }

    /// True when `x` lies on a wall and inside the closed box otherwise.
    pub(crate) fn on_boundary(&self, x: &Point<F>) -> bool {
        let closed = (0..self.dim)
            .all(|a| self.is_periodic(a) || (x[a] >= self.lower[a] && x[a] <= self.upper[a]));
        closed && !self.contains_point(x)
    }

    /// Wraps periodic coordinates into `[lower, upper)`.
    pub fn wrap(&self, x: &Point<F>) -> Point<F> {
        let mut y = *x;
        for a in 0..self.dim {
            if self.is_periodic(a) {
                let len = self.length(a);
                let r = (y[a] - self.lower[a]) / len;
                y[a] = self.lower[a] + (r - r.floor()) * len;
                if y[a] >= self.upper[a] {
                    y[a] = self.lower[a];
                }
            }
        }
        y
    }

    /// Segment crossing against the walls of `self`; see [`boundary_crossing`].
    #[inline]
    pub(crate) fn crossing(&self, x0: &Point<F>, x1: &Point<F>) -> Option<CrossingRecord<F>> {
        let mut best: Option<(F, usize, F)> = None;
        for a in 0..self.dim {
            if self.is_periodic(a) {
                continue;
            }
            let (lo, hi) = (self.lower[a], self.upper[a]);
            let hit = if x1[a] <= lo {
                Some(((x0[a] - lo) / (x0[a] - x1[a]), lo))
            } else if x1[a] >= hi {
                Some(((hi - x0[a]) / (x1[a] - x0[a]), hi))
            } else {
                None
            };
            if let Some((lambda, wall)) = hit {
                let lambda = lambda.min(F::one()).max(F::zero());
                if best.is_none_or(|(b, _, _)| lambda < b) {
                    best = Some((lambda, a, wall));
                }
            }
        }
        best.map(|(lambda, axis, wall)| {
            let mut point = zero_point();
            for a in 0..self.dim {
                point[a] = x0[a] + lambda * (x1[a] - x0[a]);
            }
            point[axis] = wall;
            CrossingRecord {
                lambda,
                point,
                wall_axis: axis,
            }
        })
    }

    /// Distance from `x` to the lower and upper wall of a walled axis.
    #[inline]
    pub(crate) fn wall_distances(&self, x: &Point<F>, axis: usize) -> (F, F) {
        (x[axis] - self.lower[axis], self.upper[axis] - x[axis])
    }

    /// The same domain with every wall moved inward by `delta`.
    pub fn shrunk(&self, delta: F) -> Result<Self> {
        let mut lower = self.lower;
        let mut upper = self.upper;
        for a in self.walled_axes() {
            lower[a] = lower[a] + delta;
            upper[a] = upper[a] - delta;
        }
        Self::new(self.kind, &lower[..self.dim], &upper[..self.dim])
    }
}

/// True iff `x` is strictly inside `domain` on every walled axis.
pub fn contains<F: Real>(domain: &DomainSpec<F>, x: &[F]) -> Result<bool> {
    let p = domain.check_point(x)?;
    Ok(domain.contains_point(&p))
}

/// First exit of the straight segment `x0 -> x1` through a wall.
///
/// Periodic axes are treated as unwrapped. A segment that ends exactly on a
/// wall counts as a crossing with `lambda = 1`.
pub fn boundary_crossing<F: Real>(
    domain: &DomainSpec<F>,
    x0: &[F],
    x1: &[F],
) -> Result<Option<CrossingRecord<F>>> {
    let p0 = domain.check_point(x0)?;
    let p1 = domain.check_point(x1)?;
    if !domain.contains_point(&p0) {
        return usage("segment start lies outside the domain");
    }
    Ok(domain.crossing(&p0, &p1))
}
