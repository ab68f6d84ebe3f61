//! Second-order finite differences: centered in the interior and across
//! periodic seams, one-sided second order on wall nodes.

use crate::domain::DomainSpec;
use crate::error::{usage, Result};
use crate::scalar::Real;

use super::{Grid, ScalarField, VectorField};

/// Curl of a 2D field is a scalar; in 3D it is a vector.
#[derive(Clone, Debug, PartialEq)]
pub enum Curl<F> {
    Scalar(ScalarField<F>),
    Vector(VectorField<F>),
}

impl<F: Real> Curl<F> {
    pub fn into_scalar(self) -> Option<ScalarField<F>> {
        match self {
            Curl::Scalar(s) => Some(s),
            Curl::Vector(_) => None,
        }
    }

    pub fn into_vector(self) -> Option<VectorField<F>> {
        match self {
            Curl::Vector(v) => Some(v),
            Curl::Scalar(_) => None,
        }
    }

    pub fn max_abs(&self) -> F {
        match self {
            Curl::Scalar(s) => s.max_abs(),
            Curl::Vector(v) => v.max_abs(),
        }
    }
}

pub(crate) fn check_grid<F: Real>(grid: &Grid<F>, domain: &DomainSpec<F>) -> Result<()> {
    if grid.dim() != domain.dim() {
        return usage("field and domain dimensions differ");
    }
    for a in 0..grid.dim() {
        if grid.is_periodic(a) != domain.is_periodic(a) {
            return usage(format!("axis {a}: field periodicity does not match the domain"));
        }
    }
    Ok(())
}

/// Derivative of nodal values along `axis`.
pub(crate) fn diff_axis<F: Real>(grid: &Grid<F>, values: &[F], axis: usize) -> Vec<F> {
    let n = grid.shape()[axis];
    let stride = grid.stride(axis);
    let h = grid.spacing()[axis];
    let inv2h = F::one() / (h + h);
    let three = F::lit(3.0);
    let four = F::lit(4.0);
    let periodic = grid.is_periodic(axis);
    let mut out = vec![F::zero(); values.len()];
    for (flat, o) in out.iter_mut().enumerate() {
        let m = (flat / stride) % n;
        let base = flat - m * stride;
        let at = |k: usize| values[base + k * stride];
        *o = if periodic {
            (at((m + 1) % n) - at((m + n - 1) % n)) * inv2h
        } else if m == 0 {
            (-three * at(0) + four * at(1) - at(2)) * inv2h
        } else if m == n - 1 {
            (three * at(n - 1) - four * at(n - 2) + at(n - 3)) * inv2h
        } else {
            (at(m + 1) - at(m - 1)) * inv2h
        };
    }
    out
}

pub fn gradient<F: Real>(s: &ScalarField<F>, domain: &DomainSpec<F>) -> Result<VectorField<F>> {
    check_grid(s.grid(), domain)?;
    let grid = *s.grid();
    let comps = (0..grid.dim())
        .map(|a| ScalarField::from_values(grid, diff_axis(&grid, s.values(), a)))
        .collect::<Result<Vec<_>>>()?;
    VectorField::from_components(comps)
}

pub fn divergence<F: Real>(v: &VectorField<F>, domain: &DomainSpec<F>) -> Result<ScalarField<F>> {
    check_grid(v.grid(), domain)?;
    let grid = *v.grid();
    let mut acc = vec![F::zero(); grid.len()];
    for a in 0..grid.dim() {
        let d = diff_axis(&grid, v.component(a).values(), a);
        for (x, y) in acc.iter_mut().zip(d) {
            *x = *x + y;
        }
    }
    ScalarField::from_values(grid, acc)
}

pub fn curl<F: Real>(v: &VectorField<F>, domain: &DomainSpec<F>) -> Result<Curl<F>> {
    check_grid(v.grid(), domain)?;
    let grid = *v.grid();
    let d = |comp: usize, axis: usize| diff_axis(&grid, v.component(comp).values(), axis);
    let sub = |a: Vec<F>, b: Vec<F>| a.into_iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>();
    match grid.dim() {
        2 => Ok(Curl::Scalar(ScalarField::from_values(grid, sub(d(1, 0), d(0, 1)))?)),
        3 => {
            let c0 = sub(d(2, 1), d(1, 2));
            let c1 = sub(d(0, 2), d(2, 0));
            let c2 = sub(d(1, 0), d(0, 1));
            Ok(Curl::Vector(VectorField::from_components(vec![
                ScalarField::from_values(grid, c0)?,
                ScalarField::from_values(grid, c1)?,
                ScalarField::from_values(grid, c2)?,
            ])?))
        }
        d => usage(format!("curl undefined in dimension {d}")),
    }
}

/// Curl of a 2D scalar (stream function or vorticity): `(∂₂ψ, −∂₁ψ)`.
pub fn curl_scalar<F: Real>(s: &ScalarField<F>, domain: &DomainSpec<F>) -> Result<VectorField<F>> {
    check_grid(s.grid(), domain)?;
    let grid = *s.grid();
    if grid.dim() != 2 {
        return usage("scalar curl is only defined in 2D");
    }
    let d1 = diff_axis(&grid, s.values(), 1);
    let d0: Vec<F> = diff_axis(&grid, s.values(), 0).into_iter().map(|x| -x).collect();
    VectorField::from_components(vec![
        ScalarField::from_values(grid, d1)?,
        ScalarField::from_values(grid, d0)?,
    ])
}

/// Max-norm of the divergence over nodes that are not on a wall.
pub fn interior_divergence_max<F: Real>(v: &VectorField<F>, domain: &DomainSpec<F>) -> Result<F> {
    let div = divergence(v, domain)?;
    let grid = *v.grid();
    Ok((0..grid.len())
        .filter(|&i| !grid.is_wall_node(i))
        .fold(F::zero(), |m, i| m.max(div.values()[i].abs())))
}
