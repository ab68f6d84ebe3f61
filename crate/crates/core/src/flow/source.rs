use crate::field::FieldSeries;
use crate::scalar::{Mat, Point, Real};

/// Anything that can drive backward characteristics: a velocity, its spatial
/// gradient `G[i][j] = ∂u_i/∂x_j`, and a viscosity.
pub trait VelocitySource<F: Real>: Sync {
    fn dim(&self) -> usize;
    fn nu(&self) -> F;
    /// Whether the velocity is available at time `t`.
    fn covers(&self, t: F) -> bool;
    fn velocity(&self, x: &Point<F>, t: F) -> Point<F>;
    fn gradient(&self, x: &Point<F>, t: F) -> Mat<F>;
}

impl<F: Real> VelocitySource<F> for FieldSeries<F> {
    fn dim(&self) -> usize {
        FieldSeries::dim(self)
    }

    fn nu(&self) -> F {
        FieldSeries::nu(self)
    }

    fn covers(&self, t: F) -> bool {
        FieldSeries::covers(self, t)
    }

    #[inline]
    fn velocity(&self, x: &Point<F>, t: F) -> Point<F> {
        self.velocity_at(x, t)
    }

    #[inline]
    fn gradient(&self, x: &Point<F>, t: F) -> Mat<F> {
        self.gradient_at(x, t)
    }
}

/// Closed-form velocity given by closures, valid for all times.
pub struct AnalyticVelocity<V, G> {
    pub dim: usize,
    pub nu: f64,
    pub velocity: V,
    pub gradient: G,
}

impl<F, V, G> VelocitySource<F> for AnalyticVelocity<V, G>
where
    F: Real,
    V: Fn(&Point<F>, F) -> Point<F> + Sync,
    G: Fn(&Point<F>, F) -> Mat<F> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn nu(&self) -> F {
        F::lit(self.nu)
    }

    fn covers(&self, _t: F) -> bool {
        true
    }

    fn velocity(&self, x: &Point<F>, t: F) -> Point<F> {
        (self.velocity)(x, t)
    }

    fn gradient(&self, x: &Point<F>, t: F) -> Mat<F> {
        (self.gradient)(x, t)
    }
}
