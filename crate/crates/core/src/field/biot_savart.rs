//! Velocity recovery from vorticity, `u = (−Δ)⁻¹ curl ω`.

use rustfft::num_complex::Complex;

use crate::domain::{DomainKind, DomainSpec};
use crate::error::{numeric, usage, Result};
use crate::scalar::Real;

use super::linalg::{cgls, solve_tridiagonal, Csr};
use super::ops::{check_grid, curl, curl_scalar, Curl};
use super::spectral::{centered_symbol, compact_laplacian_symbol, AxisTransforms};
use super::{Grid, ScalarField, VectorField};

/// Solves for the velocity whose curl is `omega`.
///
/// On the torus the result is exactly divergence free and its discrete curl
/// reproduces `omega` up to the unresolvable Nyquist content. On walled
/// domains each component solves a Dirichlet problem with zero wall values.
pub fn inverse_curl<F: Real>(omega: &Curl<F>, domain: &DomainSpec<F>) -> Result<VectorField<F>> {
    let grid = match omega {
        Curl::Scalar(s) => *s.grid(),
        Curl::Vector(v) => *v.grid(),
    };
    check_grid(&grid, domain)?;
    match (omega, grid.dim()) {
        (Curl::Scalar(_), 3) | (Curl::Vector(_), 2) => {
            return usage("vorticity must be scalar in 2D and a vector in 3D")
        }
        _ => {}
    }
    if domain.kind() == DomainKind::Torus {
        return Ok(match omega {
            Curl::Scalar(w) => {
                let scale = w.max_abs().max(F::one());
                if w.mean().abs() > F::lit(1e-10) * scale {
                    return usage(format!("vorticity has nonzero mean {:e} on the torus", w.mean()));
                }
                torus_2d(w)
            }
            Curl::Vector(w) => torus_3d(w),
        });
    }
    let rhs = match omega {
        Curl::Scalar(w) => curl_scalar(w, domain)?,
        Curl::Vector(w) => curl(w, domain)?.into_vector().expect("3D curl is a vector"),
    };
    let comps = rhs
        .components()
        .iter()
        .map(|c| {
            if domain.kind() == DomainKind::ChannelX && grid.dim() == 2 {
                Ok(dirichlet_channel_2d(c))
            } else {
                dirichlet_sparse(c)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    VectorField::from_components(comps)
}

fn torus_2d<F: Real>(w: &ScalarField<F>) -> VectorField<F> {
    let grid = *w.grid();
    let tr = AxisTransforms::new(&grid);
    let spec = tr.forward(w.values());
    let mut ux = spec.clone();
    let mut uy = spec;
    for i in 0..grid.len() {
        let m = grid.multi_index(i);
        let kx = centered_symbol(&grid, 0, m[0]);
        let ky = centered_symbol(&grid, 1, m[1]);
        let k2 = kx * kx + ky * ky;
        if k2 == F::zero() {
            ux[i] = Complex::new(F::zero(), F::zero());
            uy[i] = ux[i];
            continue;
        }
        let psi = ux[i] / k2;
        let i_psi = Complex::new(-psi.im, psi.re);
        ux[i] = i_psi * ky;
        uy[i] = -i_psi * kx;
    }
    let comps = vec![
        ScalarField::from_values(grid, tr.inverse(ux)).unwrap(),
        ScalarField::from_values(grid, tr.inverse(uy)).unwrap(),
    ];
    VectorField::from_components(comps).unwrap()
}

fn torus_3d<F: Real>(w: &VectorField<F>) -> VectorField<F> {
    let grid = *w.grid();
    let tr = AxisTransforms::new(&grid);
    let spec: Vec<Vec<Complex<F>>> = w.components().iter().map(|c| tr.forward(c.values())).collect();
    let zero = Complex::new(F::zero(), F::zero());
    let mut out = vec![vec![zero; grid.len()]; 3];
    for i in 0..grid.len() {
        let m = grid.multi_index(i);
        let k: Vec<F> = (0..3).map(|a| centered_symbol(&grid, a, m[a])).collect();
        let k2 = k.iter().fold(F::zero(), |s, &x| s + x * x);
        if k2 == F::zero() {
            continue;
        }
        for a in 0..3 {
            let (b, c) = ((a + 1) % 3, (a + 2) % 3);
            let cross = spec[c][i] * k[b] - spec[b][i] * k[c];
            out[a][i] = Complex::new(-cross.im, cross.re) / k2;
        }
    }
    let comps = out
        .into_iter()
        .map(|s| ScalarField::from_values(grid, tr.inverse(s)).unwrap())
        .collect();
    VectorField::from_components(comps).unwrap()
}

/// `−Δ u = f` with `u = 0` on the walls, FFT in x and a tridiagonal solve per mode.
fn dirichlet_channel_2d<F: Real>(f: &ScalarField<F>) -> ScalarField<F> {
    let grid = *f.grid();
    let (nx, ny) = (grid.shape()[0], grid.shape()[1]);
    let hy = grid.spacing()[1];
    let tr = AxisTransforms::new(&grid);
    let mut data: Vec<Complex<F>> = f.values().iter().map(|&x| Complex::new(x, F::zero())).collect();
    tr.axis(&mut data, 0, false);
    let inv_h2 = F::one() / (hy * hy);
    for mx in 0..nx {
        let lam = -compact_laplacian_symbol(&grid, 0, mx);
        let base = mx * ny;
        // Interior unknowns only; wall values are zero.
        let n = ny - 2;
        let lower = vec![-inv_h2; n];
        let upper = vec![-inv_h2; n];
        let diag = vec![F::lit(2.0) * inv_h2 + lam; n];
        let mut re: Vec<F> = (1..ny - 1).map(|j| data[base + j].re).collect();
        let mut im: Vec<F> = (1..ny - 1).map(|j| data[base + j].im).collect();
        solve_tridiagonal(&lower, &diag, &upper, &mut re);
        solve_tridiagonal(&lower, &diag, &upper, &mut im);
        data[base] = Complex::new(F::zero(), F::zero());
        data[base + ny - 1] = data[base];
        for j in 1..ny - 1 {
            data[base + j] = Complex::new(re[j - 1], im[j - 1]);
        }
    }
    tr.axis(&mut data, 0, true);
    ScalarField::from_values(grid, data.into_iter().map(|z| z.re).collect()).unwrap()
}

/// Compact (three-point per axis) negative Laplacian with identity rows on wall nodes.
pub(crate) fn dirichlet_laplacian<F: Real>(grid: &Grid<F>) -> Csr<F> {
    let d = grid.dim();
    let rows = (0..grid.len())
        .map(|i| {
            if grid.is_wall_node(i) {
                return vec![(i, F::one())];
            }
            let m = grid.multi_index(i);
            let mut row = Vec::with_capacity(2 * d + 1);
            let mut centre = F::zero();
            for a in 0..d {
                let n = grid.shape()[a];
                let s = grid.stride(a);
                let h = grid.spacing()[a];
                let c = F::one() / (h * h);
                centre = centre + c + c;
                let base = i - m[a] * s;
                let lo = (m[a] + n - 1) % n;
                let hi = (m[a] + 1) % n;
                row.push((base + lo * s, -c));
                row.push((base + hi * s, -c));
            }
            row.push((i, centre));
            row
        })
        .collect();
    Csr::from_rows(grid.len(), rows)
}

fn dirichlet_sparse<F: Real>(f: &ScalarField<F>) -> Result<ScalarField<F>> {
    let grid = *f.grid();
    let a = dirichlet_laplacian(&grid);
    let rhs: Vec<F> = (0..grid.len())
        .map(|i| if grid.is_wall_node(i) { F::zero() } else { f.values()[i] })
        .collect();
    let sol = cgls(&a, &rhs, F::lit(1e-12), 50 * grid.len());
    if sol.relative_residual > F::lit(1e-10) {
        return numeric(format!(
            "Dirichlet Poisson solve stalled at relative residual {:e}",
            sol.relative_residual
        ));
    }
    ScalarField::from_values(grid, sol.x)
}
