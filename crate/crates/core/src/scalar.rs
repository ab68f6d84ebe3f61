//! Scalar abstraction and the small fixed-size point/matrix types used on
//! every hot path.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar usable throughout the crate: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + rustfft::FftNum
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline(always)]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline(always)]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline(always)]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// A point or vector; entries beyond the active dimension are zero.
pub type Point<F> = [F; MAX_DIM];

/// A `d x d` matrix stored in the leading block of a 3x3 array, row-major.
pub type Mat<F> = [[F; MAX_DIM]; MAX_DIM];

pub(crate) fn zero_point<F: Real>() -> Point<F> {
    [F::zero(); MAX_DIM]
}

/// Copies a slice into a padded point, or `None` when it is too long.
pub(crate) fn to_point<F: Real>(x: &[F]) -> Option<Point<F>> {
    if x.len() > MAX_DIM {
        return None;
    }
    let mut p = zero_point();
    p[..x.len()].copy_from_slice(x);
    Some(p)
}

pub(crate) fn identity<F: Real>(d: usize) -> Mat<F> {
    let mut m = [[F::zero(); MAX_DIM]; MAX_DIM];
    for (i, row) in m.iter_mut().enumerate().take(d) {
        row[i] = F::one();
    }
    m
}

pub(crate) fn mat_mul<F: Real>(a: &Mat<F>, b: &Mat<F>, d: usize) -> Mat<F> {
    let mut c = [[F::zero(); MAX_DIM]; MAX_DIM];
    for i in 0..d {
        for j in 0..d {
            let mut acc = F::zero();
            for k in 0..d {
                acc = acc + a[i][k] * b[k][j];
            }
            c[i][j] = acc;
        }
    }
    c
}

/// `a^T v`.
pub(crate) fn mat_t_vec<F: Real>(a: &Mat<F>, v: &Point<F>, d: usize) -> Point<F> {
    let mut out = zero_point();
    for j in 0..d {
        let mut acc = F::zero();
        for i in 0..d {
            acc = acc + a[i][j] * v[i];
        }
        out[j] = acc;
    }
    out
}

pub(crate) fn det<F: Real>(a: &Mat<F>, d: usize) -> F {
    match d {
        1 => a[0][0],
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        _ => {
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        }
    }
}

/// Solves `a x = b` by Cramer's rule (d <= 3). Caller checks the determinant.
pub(crate) fn solve_small<F: Real>(a: &Mat<F>, b: &Point<F>, d: usize) -> Point<F> {
    let det_a = det(a, d);
    let mut x = zero_point();
    for col in 0..d {
        let mut m = *a;
        for row in 0..d {
            m[row][col] = b[row];
        }
        x[col] = det(&m, d) / det_a;
    }
    x
}
