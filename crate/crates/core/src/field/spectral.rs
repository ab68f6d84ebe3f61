//! FFT helpers for periodic axes.
//!
//! Wavenumbers are the symbols of the centered difference stencil,
//! `k̃ = sin(k h) / h`, so spectral projections agree exactly with the
//! finite-difference `divergence`/`gradient`/`curl` operators.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;

use super::Grid;

pub(crate) struct AxisTransforms<F: Real> {
    grid: Grid<F>,
    plans: Vec<Option<(Arc<dyn Fft<F>>, Arc<dyn Fft<F>>)>>,
}

impl<F: Real> AxisTransforms<F> {
    /// Plans transforms along every periodic axis of `grid`.
    pub fn new(grid: &Grid<F>) -> Self {
        let mut planner = FftPlanner::new();
        let plans = (0..grid.dim())
            .map(|a| {
                grid.is_periodic(a).then(|| {
                    let n = grid.shape()[a];
                    (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
                })
            })
            .collect();
        Self { grid: *grid, plans }
    }

    pub fn axis(&self, data: &mut [Complex<F>], axis: usize, inverse: bool) {
        let Some((fwd, inv)) = &self.plans[axis] else {
            return;
        };
        let plan = if inverse { inv } else { fwd };
        let n = self.grid.shape()[axis];
        let stride = self.grid.stride(axis);
        let mut line = vec![Complex::new(F::zero(), F::zero()); n];
        let outer = data.len() / (n * stride);
        for o in 0..outer {
            for s in 0..stride {
                let base = o * n * stride + s;
                for (k, v) in line.iter_mut().enumerate() {
                    *v = data[base + k * stride];
                }
                plan.process(&mut line);
                let scale = if inverse {
                    F::one() / F::from_usize_lossy(n)
                } else {
                    F::one()
                };
                for (k, v) in line.iter().enumerate() {
                    data[base + k * stride] = *v * scale;
                }
            }
        }
    }

    /// Forward transform along every periodic axis.
    pub fn forward(&self, values: &[F]) -> Vec<Complex<F>> {
        let mut data: Vec<Complex<F>> = values.iter().map(|&v| Complex::new(v, F::zero())).collect();
        for a in 0..self.grid.dim() {
            self.axis(&mut data, a, false);
        }
        data
    }

    /// Inverse transform along every periodic axis; returns the real part.
    pub fn inverse(&self, mut data: Vec<Complex<F>>) -> Vec<F> {
        for a in 0..self.grid.dim() {
            self.axis(&mut data, a, true);
        }
        data.into_iter().map(|c| c.re).collect()
    }
}

/// Signed integer wavenumber of FFT bin `m` out of `n`.
pub(crate) fn integer_wavenumber(m: usize, n: usize) -> i64 {
    if m <= n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// Symbol of the centered first difference for bin `m` on a periodic axis.
/// Zero for the mean and (even `n`) the Nyquist bin.
pub(crate) fn centered_symbol<F: Real>(grid: &Grid<F>, axis: usize, m: usize) -> F {
    let n = grid.shape()[axis];
    if m == 0 || (n.is_multiple_of(2) && m == n / 2) {
        return F::zero();
    }
    let h = grid.spacing()[axis];
    let kappa = F::from_i64(integer_wavenumber(m, n)).unwrap();
    let theta = F::TAU() * kappa / F::from_usize_lossy(n);
    theta.sin() / h
}

/// Symbol of the compact three-point second difference, `-(2 - 2cos(kh))/h²`.
pub(crate) fn compact_laplacian_symbol<F: Real>(grid: &Grid<F>, axis: usize, m: usize) -> F {
    let n = grid.shape()[axis];
    let h = grid.spacing()[axis];
    let kappa = F::from_i64(integer_wavenumber(m, n)).unwrap();
    let theta = F::TAU() * kappa / F::from_usize_lossy(n);
    let two = F::lit(2.0);
    -(two - two * theta.cos()) / (h * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;

    #[test]
    fn round_trip_is_identity() {
        let d = DomainSpec::<f64>::torus(2);
        let g = Grid::new(&d, &[8, 6]).unwrap();
        let t = AxisTransforms::new(&g);
        let vals: Vec<f64> = (0..g.len()).map(|i| ((i * 7) % 11) as f64 - 3.0).collect();
        let back = t.inverse(t.forward(&vals));
        for (a, b) in vals.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn symbol_matches_centered_difference() {
        let d = DomainSpec::<f64>::torus(2);
        let g = Grid::new(&d, &[16, 16]).unwrap();
        // e^{i k x} with k = 3: centered difference gives i sin(3h)/h.
        let h = g.spacing()[0];
        assert!((centered_symbol(&g, 0, 3) - (3.0 * h).sin() / h).abs() < 1e-14);
        assert_eq!(centered_symbol(&g, 0, 8), 0.0);
        assert!((centered_symbol(&g, 0, 13) + (3.0 * h).sin() / h).abs() < 1e-13);
    }
}
