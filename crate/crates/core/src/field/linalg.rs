//! Small dense and sparse solvers backing the Poisson problems.

use crate::error::{numeric, Result};
use crate::scalar::Real;

/// Row-major dense LU factorisation with partial pivoting.
pub(crate) struct DenseLu<F> {
    n: usize,
    lu: Vec<F>,
    perm: Vec<usize>,
}

impl<F: Real> DenseLu<F> {
    pub fn factor(n: usize, mut a: Vec<F>) -> Result<Self> {
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.iter().fold(F::zero(), |m, v| m.max(v.abs()));
        let tiny = scale * F::epsilon() * F::from_usize_lossy(n);
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, a[i * n + k].abs()))
                .fold((k, F::zero()), |b, c| if c.1 > b.1 { c } else { b });
            if pmax <= tiny {
                return numeric(format!("singular matrix at pivot {k} (|pivot| = {pmax:e})"));
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / pivot;
                a[i * n + k] = f;
                if f != F::zero() {
                    for j in k + 1..n {
                        a[i * n + j] = a[i * n + j] - f * a[k * n + j];
                    }
                }
            }
        }
        Ok(Self { n, lu: a, perm })
    }

    pub fn solve(&self, b: &[F]) -> Vec<F> {
        let n = self.n;
        let mut x: Vec<F> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc = acc - self.lu[i * n + j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc = acc - self.lu[i * n + j] * x[j];
            }
            x[i] = acc / self.lu[i * n + i];
        }
        x
    }
}

/// Compressed sparse rows.
#[derive(Clone, Debug)]
pub(crate) struct Csr<F> {
    pub rows: usize,
    pub cols: usize,
    pub ptr: Vec<usize>,
    pub idx: Vec<usize>,
    pub val: Vec<F>,
}

impl<F: Real> Csr<F> {
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, F)>>) -> Self {
        let mut ptr = Vec::with_capacity(rows.len() + 1);
        let mut idx = Vec::new();
        let mut val = Vec::new();
        ptr.push(0);
        for row in &rows {
            let mut row = row.clone();
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    let l = val.len() - 1;
                    val[l] = val[l] + v;
                } else {
                    idx.push(c);
                    val.push(v);
                    last = Some(c);
                }
            }
            ptr.push(idx.len());
        }
        Self {
            rows: rows.len(),
            cols,
            ptr,
            idx,
            val,
        }
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, F)> + '_ {
        (self.ptr[r]..self.ptr[r + 1]).map(move |k| (self.idx[k], self.val[k]))
    }

    pub fn mul(&self, x: &[F]) -> Vec<F> {
        (0..self.rows)
            .map(|r| self.row(r).fold(F::zero(), |acc, (c, v)| acc + v * x[c]))
            .collect()
    }

    pub fn mul_t(&self, y: &[F]) -> Vec<F> {
        let mut out = vec![F::zero(); self.cols];
        for (r, &yr) in y.iter().enumerate() {
            for (c, v) in self.row(r) {
                out[c] = out[c] + v * yr;
            }
        }
        out
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Csr<F>) -> Csr<F> {
        let rows = (0..self.rows)
            .map(|r| {
                let mut acc = Vec::new();
                for (k, a) in self.row(r) {
                    for (c, b) in other.row(k) {
                        acc.push((c, a * b));
                    }
                }
                acc
            })
            .collect();
        Csr::from_rows(other.cols, rows)
    }
}

fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Result of an iterative least-squares solve.
pub(crate) struct LsqSolution<F> {
    pub x: Vec<F>,
    /// `||A x - b|| / ||b||`.
    pub relative_residual: F,
    pub iterations: usize,
}

/// CGLS for `min ||A x - b||`, started at zero so it converges to the
/// minimum-norm solution. Stops when the normal-equation residual drops by
/// `tol` relative to its initial value.
pub(crate) fn cgls<F: Real>(a: &Csr<F>, b: &[F], tol: F, max_iter: usize) -> LsqSolution<F> {
    let mut x = vec![F::zero(); a.cols];
    let mut r = b.to_vec();
    let mut s = a.mul_t(&r);
    let mut p = s.clone();
    let mut gamma = dot(&s, &s);
    let gamma0 = gamma;
    let mut it = 0;
    while it < max_iter && gamma > tol * tol * gamma0 && gamma > F::zero() {
        let q = a.mul(&p);
        let qq = dot(&q, &q);
        if qq == F::zero() {
            break;
        }
        let alpha = gamma / qq;
        for (xi, pi) in x.iter_mut().zip(&p) {
            *xi = *xi + alpha * *pi;
        }
        for (ri, qi) in r.iter_mut().zip(&q) {
            *ri = *ri - alpha * *qi;
        }
        s = a.mul_t(&r);
        let gamma_new = dot(&s, &s);
        let beta = gamma_new / gamma;
        for (pi, si) in p.iter_mut().zip(&s) {
            *pi = *si + beta * *pi;
        }
        gamma = gamma_new;
        it += 1;
    }
    let bn = dot(b, b).sqrt();
    let rn = dot(&r, &r).sqrt();
    LsqSolution {
        x,
        relative_residual: if bn > F::zero() { rn / bn } else { rn },
        iterations: it,
    }
}

/// Thomas algorithm for a tridiagonal system; `lower[0]` and `upper[n-1]` unused.
pub(crate) fn solve_tridiagonal<F: Real>(lower: &[F], diag: &[F], upper: &[F], rhs: &mut [F]) {
    let n = diag.len();
    let mut c = vec![F::zero(); n];
    let mut beta = diag[0];
    rhs[0] = rhs[0] / beta;
    for i in 1..n {
        c[i - 1] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * c[i - 1];
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] = rhs[i] - c[i] * rhs[i + 1];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_small_system() {
        let a = vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0];
        let lu = DenseLu::factor(3, a.clone()).unwrap();
        let x = lu.solve(&[3.0, 2.0, 4.0]);
        for r in 0..3 {
            let ax: f64 = (0..3).map(|c| a[r * 3 + c] * x[c]).sum();
            assert!((ax - [3.0, 2.0, 4.0][r]).abs() < 1e-12);
        }
    }

    #[test]
    fn lu_reports_singular() {
        assert!(DenseLu::factor(2, vec![1.0, 2.0, 2.0, 4.0]).is_err());
    }

    #[test]
    fn cgls_finds_min_norm_solution() {
        // x0 + x1 = 2 has min-norm solution (1, 1).
        let a = Csr::from_rows(2, vec![vec![(0, 1.0f64), (1, 1.0)]]);
        let s = cgls(&a, &[2.0], 1e-12, 50);
        assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.x[1] - 1.0).abs() < 1e-12);
        assert!(s.relative_residual < 1e-12);
    }

    #[test]
    fn tridiagonal_matches_dense() {
        let lower = [0.0f64, -1.0, -1.0, -1.0];
        let diag = [2.0, 2.0, 2.0, 2.0];
        let upper = [-1.0, -1.0, -1.0, 0.0];
        let mut rhs = [1.0, 0.0, 0.0, 1.0];
        solve_tridiagonal(&lower, &diag, &upper, &mut rhs);
        for v in rhs {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }
}
