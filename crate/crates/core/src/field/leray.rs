//! Leray–Hodge projection onto discretely divergence-free fields.
//!
//! Torus: exact spectral projection with centered-difference symbols.
//! Walled domains: `v - ∇φ` where `φ` makes the centered divergence vanish at
//! every interior node and the normal component vanish on every wall node
//! (edge and corner nodes get the divergence condition instead).
//! On collocated grids that system is only compatible when walled axes carry
//! an odd number of nodes.

use rustfft::num_complex::Complex;

use crate::domain::{DomainKind, DomainSpec};
use crate::error::{numeric, usage, Result};
use crate::scalar::Real;

use super::linalg::{cgls, Csr, DenseLu};
use super::ops::check_grid;
use super::spectral::{centered_symbol, AxisTransforms};
use super::{Grid, ScalarField, VectorField};

/// Relative residual above which a walled projection is reported as failed.
const RESIDUAL_LIMIT: f64 = 1e-8;

pub fn leray_project<F: Real>(v: &VectorField<F>, domain: &DomainSpec<F>) -> Result<VectorField<F>> {
    check_grid(v.grid(), domain)?;
    match domain.kind() {
        DomainKind::Torus => Ok(project_torus(v)),
        _ => {
            let grid = v.grid();
            for a in domain.walled_axes() {
                if grid.shape()[a].is_multiple_of(2) {
                    return usage(format!(
                        "walled axis {a} has {} nodes; the collocated projection needs an odd count",
                        grid.shape()[a]
                    ));
                }
            }
            if domain.kind() == DomainKind::ChannelX && grid.dim() == 2 {
                project_channel_2d(v)
            } else {
                project_walled_sparse(v)
            }
        }
    }
}

fn project_torus<F: Real>(v: &VectorField<F>) -> VectorField<F> {
    let grid = *v.grid();
    let d = grid.dim();
    let tr = AxisTransforms::new(&grid);
    let mut spec: Vec<Vec<Complex<F>>> = v.components().iter().map(|c| tr.forward(c.values())).collect();
    for i in 0..grid.len() {
        let m = grid.multi_index(i);
        let mut k = [F::zero(); 3];
        let mut k2 = F::zero();
        for a in 0..d {
            k[a] = centered_symbol(&grid, a, m[a]);
            k2 = k2 + k[a] * k[a];
        }
        if k2 == F::zero() {
            continue;
        }
        let mut dot = Complex::new(F::zero(), F::zero());
        for a in 0..d {
            dot = dot + spec[a][i] * k[a];
        }
        for a in 0..d {
            spec[a][i] = spec[a][i] - dot * (k[a] / k2);
        }
    }
    let comps = spec
        .into_iter()
        .map(|s| ScalarField::from_values(grid, tr.inverse(s)).unwrap())
        .collect();
    VectorField::from_components(comps).unwrap()
}

/// One-dimensional derivative stencil rows for a walled axis with `n` nodes.
fn wall_axis_rows<F: Real>(n: usize, h: F) -> Vec<Vec<(usize, F)>> {
    let inv2h = F::one() / (h + h);
    (0..n)
        .map(|i| {
            if i == 0 {
                vec![(0, -F::lit(3.0) * inv2h), (1, F::lit(4.0) * inv2h), (2, -inv2h)]
            } else if i == n - 1 {
                vec![(n - 1, F::lit(3.0) * inv2h), (n - 2, -F::lit(4.0) * inv2h), (n - 3, inv2h)]
            } else {
                vec![(i - 1, -inv2h), (i + 1, inv2h)]
            }
        })
        .collect()
}

fn project_channel_2d<F: Real>(v: &VectorField<F>) -> Result<VectorField<F>> {
    let grid = *v.grid();
    let (nx, ny) = (grid.shape()[0], grid.shape()[1]);
    let hy = grid.spacing()[1];
    let tr = AxisTransforms::new(&grid);
    let to_complex = |s: &ScalarField<F>| -> Vec<Complex<F>> {
        let mut c: Vec<Complex<F>> = s.values().iter().map(|&x| Complex::new(x, F::zero())).collect();
        tr.axis(&mut c, 0, false);
        c
    };
    let mut vx = to_complex(v.component(0));
    let mut vy = to_complex(v.component(1));

    let g = wall_axis_rows(ny, hy);
    // Dense G_y and D_y G_y.
    let mut gd = vec![F::zero(); ny * ny];
    for (i, row) in g.iter().enumerate() {
        for &(j, w) in row {
            gd[i * ny + j] = w;
        }
    }
    let mut dg = vec![F::zero(); ny * ny];
    for i in 1..ny - 1 {
        for &(k, w) in &g[i] {
            for j in 0..ny {
                dg[i * ny + j] = dg[i * ny + j] + w * gd[k * ny + j];
            }
        }
    }

    let mut worst = F::zero();
    for mx in 0..nx {
        let kx = centered_symbol(&grid, 0, mx);
        let singular = kx == F::zero();
        let size = if singular { ny + 1 } else { ny };
        let mut a = vec![F::zero(); size * size];
        for i in 0..ny {
            for j in 0..ny {
                a[i * size + j] = if i == 0 || i == ny - 1 { gd[i * ny + j] } else { dg[i * ny + j] };
            }
            if i != 0 && i != ny - 1 {
                a[i * size + i] = a[i * size + i] - kx * kx;
            }
        }
        if singular {
            for j in 0..ny {
                a[j * size + ny] = F::one();
                a[ny * size + j] = F::one();
            }
        }
        let base = mx * ny;
        let mut rhs_re = vec![F::zero(); size];
        let mut rhs_im = vec![F::zero(); size];
        for i in 0..ny {
            let r = if i == 0 || i == ny - 1 {
                vy[base + i]
            } else {
                let dy = g[i]
                    .iter()
                    .fold(Complex::new(F::zero(), F::zero()), |acc, &(k, w)| acc + vy[base + k] * w);
                // i k̃ v̂x
                dy + Complex::new(-vx[base + i].im * kx, vx[base + i].re * kx)
            };
            rhs_re[i] = r.re;
            rhs_im[i] = r.im;
        }
        let lu = DenseLu::factor(size, a.clone())?;
        let phi_re = lu.solve(&rhs_re);
        let phi_im = lu.solve(&rhs_im);
        if singular {
            // The Lagrange multiplier measures the incompatible part of the data.
            let norm = rhs_re
                .iter()
                .chain(&rhs_im)
                .fold(F::zero(), |m, x| m.max(x.abs()))
                .max(F::epsilon());
            worst = worst.max(phi_re[ny].abs().max(phi_im[ny].abs()) / norm);
        }
        for i in 0..ny {
            let phi = |k: usize| Complex::new(phi_re[k], phi_im[k]);
            let gy = g[i]
                .iter()
                .fold(Complex::new(F::zero(), F::zero()), |acc, &(k, w)| acc + phi(k) * w);
            vy[base + i] = vy[base + i] - gy;
            let p = phi(i);
            vx[base + i] = vx[base + i] - Complex::new(-p.im * kx, p.re * kx);
        }
    }
    if worst > F::lit(RESIDUAL_LIMIT) {
        return numeric(format!(
            "incompatible Neumann data in Leray projection (relative residual {worst:e})"
        ));
    }
    tr.axis(&mut vx, 0, true);
    tr.axis(&mut vy, 0, true);
    let back = |c: Vec<Complex<F>>| ScalarField::from_values(grid, c.into_iter().map(|z| z.re).collect());
    VectorField::from_components(vec![back(vx)?, back(vy)?])
}

/// Derivative operator along `axis` on the whole grid.
pub(crate) fn derivative_matrix<F: Real>(grid: &Grid<F>, axis: usize) -> Csr<F> {
    let n = grid.shape()[axis];
    let stride = grid.stride(axis);
    let h = grid.spacing()[axis];
    let inv2h = F::one() / (h + h);
    let line = if grid.is_periodic(axis) {
        (0..n)
            .map(|i| vec![((i + n - 1) % n, -inv2h), ((i + 1) % n, inv2h)])
            .collect()
    } else {
        wall_axis_rows(n, h)
    };
    let rows = (0..grid.len())
        .map(|flat| {
            let m = (flat / stride) % n;
            let base = flat - m * stride;
            line[m].iter().map(|&(k, w)| (base + k * stride, w)).collect()
        })
        .collect();
    Csr::from_rows(grid.len(), rows)
}

fn project_walled_sparse<F: Real>(v: &VectorField<F>) -> Result<VectorField<F>> {
    let grid = *v.grid();
    let d = grid.dim();
    let derivs: Vec<Csr<F>> = (0..d).map(|a| derivative_matrix(&grid, a)).collect();
    let second: Vec<Csr<F>> = derivs.iter().map(|g| g.matmul(g)).collect();
    let mut rows: Vec<Vec<(usize, F)>> = Vec::new();
    let mut rhs: Vec<F> = Vec::new();
    for i in 0..grid.len() {
        let m = grid.multi_index(i);
        let walls: Vec<usize> = (0..d)
            .filter(|&a| !grid.is_periodic(a) && (m[a] == 0 || m[a] + 1 == grid.shape()[a]))
            .collect();
        // Edges and corners carry the divergence equation; a normal-flow
        // condition for every wall there makes the system incompatible.
        if walls.len() != 1 {
            let mut row = Vec::new();
            let mut b = F::zero();
            for a in 0..d {
                row.extend(second[a].row(i));
                b = b + derivs[a]
                    .row(i)
                    .fold(F::zero(), |acc, (c, w)| acc + w * v.component(a).values()[c]);
            }
            rows.push(row);
            rhs.push(b);
        } else {
            let a = walls[0];
            rows.push(derivs[a].row(i).collect());
            rhs.push(v.component(a).values()[i]);
        }
    }
    let system = Csr::from_rows(grid.len(), rows);
    let sol = cgls(&system, &rhs, F::lit(1e-13), 50 * grid.len());
    if sol.relative_residual > F::lit(RESIDUAL_LIMIT) {
        return numeric(format!(
            "walled Leray projection did not converge: relative residual {:e} after {} iterations",
            sol.relative_residual, sol.iterations
        ));
    }
    let comps = (0..d)
        .map(|a| {
            let g = derivs[a].mul(&sol.x);
            let vals = v.component(a).values().iter().zip(g).map(|(&x, y)| x - y).collect();
            ScalarField::from_values(grid, vals)
        })
        .collect::<Result<Vec<_>>>()?;
    VectorField::from_components(comps)
}
