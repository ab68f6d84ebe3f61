//! Summation and moment helpers.

use crate::scalar::Real;

/// Pairwise (cascade) summation; error grows like `log n` instead of `n`.
pub fn pairwise_sum<F: Real>(xs: &[F]) -> F {
    const BLOCK: usize = 64;
    if xs.len() <= BLOCK {
        return xs.iter().fold(F::zero(), |a, &b| a + b);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sample mean and standard error of the mean, by two passes.
/// Identical samples (including a single one) have standard error zero.
pub fn mean_and_se<F: Real>(xs: &[F]) -> (F, F) {
    let n = xs.len();
    if n == 0 {
        return (F::nan(), F::nan());
    }
    if xs.iter().all(|&x| x == xs[0]) {
        return (xs[0], F::zero());
    }
    let nf = F::from_usize_lossy(n);
    let mean = pairwise_sum(xs) / nf;
    if n == 1 {
        return (mean, F::zero());
    }
    let dev: Vec<F> = xs.iter().map(|&x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / F::from_usize_lossy(n - 1);
    (mean, (var / nf).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_exact_integer_sum() {
        let xs: Vec<f64> = (1..=10_000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 50_005_000.0);
    }

    #[test]
    fn identical_samples_have_zero_error() {
        let (m, se) = mean_and_se(&[0.1f64; 1000]);
        assert!((m - 0.1).abs() < 1e-15);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn known_moments() {
        let (m, se) = mean_and_se(&[1.0f64, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
