use crate::domain::DomainSpec;
use crate::error::{usage, Result};
use crate::scalar::{zero_point, Point, Real, MAX_DIM};

/// Uniform tensor grid over a domain.
///
/// Periodic axes store one period without the duplicate endpoint
/// (`h = L / n`); walled axes include both walls (`h = L / (n - 1)`).
/// Node values are stored row-major with axis 0 varying slowest.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid<F> {
    dim: usize,
    shape: [usize; MAX_DIM],
    spacing: Point<F>,
    origin: Point<F>,
    periodic: [bool; MAX_DIM],
}

/// Interpolation weights for one query point: up to 2^d nodes.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Stencil<F> {
    pub idx: [usize; 8],
    pub w: [F; 8],
    pub len: usize,
}

impl<F: Real> Grid<F> {
    pub fn new(domain: &DomainSpec<F>, shape: &[usize]) -> Result<Self> {
        let dim = domain.dim();
        if shape.len() != dim {
            return usage(format!(
                "grid shape has {} axes, domain has {dim}",
                shape.len()
            ));
        }
        let mut g = Self {
            dim,
            shape: [1; MAX_DIM],
            spacing: zero_point(),
            origin: zero_point(),
            periodic: [false; MAX_DIM],
        };
        for a in 0..dim {
            let n = shape[a];
            let periodic = domain.is_periodic(a);
            let min_nodes = if periodic { 4 } else { 3 };
            if n < min_nodes {
                return usage(format!("axis {a} needs at least {min_nodes} nodes, got {n}"));
            }
            let cells = if periodic { n } else { n - 1 };
            g.shape[a] = n;
            g.periodic[a] = periodic;
            g.origin[a] = domain.lower()[a];
            g.spacing[a] = domain.length(a) / F::from_usize_lossy(cells);
        }
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape[..self.dim]
    }

    pub fn spacing(&self) -> &[F] {
        &self.spacing[..self.dim]
    }

    pub fn origin(&self) -> &[F] {
        &self.origin[..self.dim]
    }

    pub fn is_periodic(&self, axis: usize) -> bool {
        self.periodic[axis]
    }

    pub fn len(&self) -> usize {
        self.shape[..self.dim].iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stride of `axis` in the flat layout.
    pub(crate) fn stride(&self, axis: usize) -> usize {
        self.shape[axis + 1..self.dim].iter().product()
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        let mut idx = 0;
        for a in 0..self.dim {
            idx = idx * self.shape[a] + multi[a];
        }
        idx
    }

    pub fn multi_index(&self, mut flat: usize) -> [usize; MAX_DIM] {
        let mut m = [0; MAX_DIM];
        for a in (0..self.dim).rev() {
            m[a] = flat % self.shape[a];
            flat /= self.shape[a];
        }
        m
    }

    pub fn node(&self, flat: usize) -> Point<F> {
        let m = self.multi_index(flat);
        let mut p = zero_point();
        for a in 0..self.dim {
            p[a] = self.origin[a] + F::from_usize_lossy(m[a]) * self.spacing[a];
        }
        p
    }

    /// Coordinates of every node in flat order.
    pub fn nodes(&self) -> Vec<Point<F>> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    /// True when the node sits on a wall of some walled axis.
    pub fn is_wall_node(&self, flat: usize) -> bool {
        let m = self.multi_index(flat);
        (0..self.dim).any(|a| !self.periodic[a] && (m[a] == 0 || m[a] + 1 == self.shape[a]))
    }

    /// Cell index and fractional offset along one axis. Periodic axes wrap;
    /// walled axes clamp to the first/last cell and extrapolate linearly.
    #[inline(always)]
    fn locate(&self, axis: usize, x: F) -> (usize, usize, F) {
        let n = self.shape[axis];
        let r = (x - self.origin[axis]) / self.spacing[axis];
        let fl = r.floor();
        let frac = r - fl;
        if self.periodic[axis] {
            let nf = F::from_usize_lossy(n);
            let mut i = fl - (fl / nf).floor() * nf;
            if i >= nf {
                i = i - nf;
            }
            let i0 = i.to_usize().unwrap_or(0).min(n - 1);
            (i0, (i0 + 1) % n, frac)
        } else {
            let max_cell = (n - 2) as i64;
            let i = fl.to_i64().unwrap_or(0).clamp(0, max_cell);
            let frac = r - F::from_i64(i).unwrap();
            (i as usize, i as usize + 1, frac)
        }
    }

    #[inline]
    pub(crate) fn stencil(&self, x: &Point<F>) -> Stencil<F> {
        let mut st = Stencil {
            idx: [0; 8],
            w: [F::zero(); 8],
            len: 1,
        };
        st.w[0] = F::one();
        for a in 0..self.dim {
            let (i0, i1, f) = self.locate(a, x[a]);
            let stride = self.stride(a);
            let len = st.len;
            for k in 0..len {
                let base = st.idx[k];
                let w = st.w[k];
                st.idx[k] = base + i0 * stride;
                st.w[k] = w * (F::one() - f);
                st.idx[k + len] = base + i1 * stride;
                st.w[k + len] = w * f;
            }
            st.len = 2 * len;
        }
        st
    }

    /// Four-point cubic Lagrange weights along every axis; periodic axes
    /// only. Returns `(flat indices, weights)` of the `4^dim` nodes.
    pub(crate) fn cubic_stencil(&self, x: &Point<F>) -> (Vec<usize>, Vec<F>) {
        debug_assert!(self.periodic[..self.dim].iter().all(|&p| p));
        let mut idx = vec![0usize];
        let mut w = vec![F::one()];
        let six = F::lit(6.0);
        let two = F::lit(2.0);
        for a in 0..self.dim {
            let n = self.shape[a];
            let (i0, _, t) = self.locate(a, x[a]);
            let one = F::one();
            let ws = [
                -t * (t - one) * (t - two) / six,
                (t + one) * (t - one) * (t - two) / two,
                -(t + one) * t * (t - two) / two,
                (t + one) * t * (t - one) / six,
            ];
            let stride = self.stride(a);
            let mut idx2 = Vec::with_capacity(idx.len() * 4);
            let mut w2 = Vec::with_capacity(idx.len() * 4);
            for (k, &wk) in ws.iter().enumerate() {
                let node = (i0 + n + k - 1) % n;
                for (b, &wb) in idx.iter().zip(&w) {
                    idx2.push(b + node * stride);
                    w2.push(wb * wk);
                }
            }
            idx = idx2;
            w = w2;
        }
        (idx, w)
    }

    pub(crate) fn same_layout(&self, other: &Self) -> bool {
        self.dim == other.dim && self.shape == other.shape && self.periodic == other.periodic
    }
}

/// Real values on the nodes of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField<F> {
    grid: Grid<F>,
    values: Vec<F>,
}

impl<F: Real> ScalarField<F> {
    pub fn zeros(grid: Grid<F>) -> Self {
        Self {
            values: vec![F::zero(); grid.len()],
            grid,
        }
    }

    pub fn from_values(grid: Grid<F>, values: Vec<F>) -> Result<Self> {
        if values.len() != grid.len() {
            return usage(format!(
                "expected {} node values, got {}",
                grid.len(),
                values.len()
            ));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid<F>, f: impl Fn(&Point<F>) -> F) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.node(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid<F> {
        &self.grid
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [F] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<F> {
        self.values
    }

    /// Multilinear interpolation (linear extrapolation past walls).
    pub fn interpolate(&self, x: &[F]) -> F {
        let mut p = zero_point();
        p[..x.len().min(MAX_DIM)].copy_from_slice(&x[..x.len().min(MAX_DIM)]);
        let st = self.grid.stencil(&p);
        (0..st.len).fold(F::zero(), |acc, k| acc + st.w[k] * self.values[st.idx[k]])
    }

    pub fn max_abs(&self) -> F {
        self.values.iter().fold(F::zero(), |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> F {
        crate::estimator::stats::pairwise_sum(&self.values) / F::from_usize_lossy(self.values.len())
    }
}

/// `d` scalar components sharing one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField<F> {
    components: Vec<ScalarField<F>>,
}

impl<F: Real> VectorField<F> {
    pub fn zeros(grid: Grid<F>) -> Self {
        Self {
            components: (0..grid.dim()).map(|_| ScalarField::zeros(grid)).collect(),
        }
    }

    pub fn from_components(components: Vec<ScalarField<F>>) -> Result<Self> {
        let Some(first) = components.first() else {
            return usage("vector field needs at least one component");
        };
        let grid = *first.grid();
        if components.len() != grid.dim() {
            return usage(format!(
                "{} components for a {}-dimensional grid",
                components.len(),
                grid.dim()
            ));
        }
        if components.iter().any(|c| c.grid() != &grid) {
            return usage("vector components live on different grids");
        }
        Ok(Self { components })
    }

    pub fn from_fn(grid: Grid<F>, f: impl Fn(&Point<F>) -> Point<F>) -> Self {
        let d = grid.dim();
        let nodes = grid.nodes();
        let vals: Vec<Point<F>> = nodes.iter().map(f).collect();
        let components = (0..d)
            .map(|c| ScalarField {
                grid,
                values: vals.iter().map(|v| v[c]).collect(),
            })
            .collect();
        Self { components }
    }

    pub fn grid(&self) -> &Grid<F> {
        self.components[0].grid()
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &ScalarField<F> {
        &self.components[i]
    }

    pub fn component_mut(&mut self, i: usize) -> &mut ScalarField<F> {
        &mut self.components[i]
    }

    pub fn components(&self) -> &[ScalarField<F>] {
        &self.components
    }

    pub fn at(&self, flat: usize) -> Point<F> {
        let mut p = zero_point();
        for (c, comp) in self.components.iter().enumerate() {
            p[c] = comp.values[flat];
        }
        p
    }

    pub fn set(&mut self, flat: usize, v: &Point<F>) {
        for (c, comp) in self.components.iter_mut().enumerate() {
            comp.values[flat] = v[c];
        }
    }

    pub fn interpolate(&self, x: &[F]) -> Point<F> {
        let mut p = zero_point();
        p[..x.len().min(MAX_DIM)].copy_from_slice(&x[..x.len().min(MAX_DIM)]);
        self.interpolate_point(&p)
    }

    #[inline]
    pub(crate) fn interpolate_point(&self, p: &Point<F>) -> Point<F> {
        let st = self.grid().stencil(p);
        self.apply_stencil(&st)
    }

    /// Cubic interpolation on a fully periodic grid.
    pub(crate) fn interpolate_cubic(&self, p: &Point<F>) -> Point<F> {
        let (idx, w) = self.grid().cubic_stencil(p);
        let mut out = zero_point();
        for (c, comp) in self.components.iter().enumerate() {
            out[c] = idx.iter().zip(&w).fold(F::zero(), |acc, (&i, &wi)| acc + wi * comp.values[i]);
        }
        out
    }

    #[inline(always)]
    pub(crate) fn apply_stencil(&self, st: &Stencil<F>) -> Point<F> {
        let mut out = zero_point();
        for (c, comp) in self.components.iter().enumerate() {
            let mut acc = F::zero();
            for k in 0..st.len {
                acc = acc + st.w[k] * comp.values[st.idx[k]];
            }
            out[c] = acc;
        }
        out
    }

    /// Elementwise `a * self + b * other`.
    pub fn axpby(&self, a: F, other: &Self, b: F) -> Self {
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(x, y)| ScalarField {
                grid: x.grid,
                values: x
                    .values
                    .iter()
                    .zip(&y.values)
                    .map(|(&u, &v)| a * u + b * v)
                    .collect(),
            })
            .collect();
        Self { components }
    }

    /// Discrete L2 norm, `sqrt(sum |v|^2 * cell volume)`.
    pub fn l2_norm(&self) -> F {
        let vol: F = self.grid().spacing().iter().fold(F::one(), |a, &h| a * h);
        let sq: Vec<F> = (0..self.grid().len())
            .map(|i| {
                self.components
                    .iter()
                    .fold(F::zero(), |acc, c| acc + c.values[i] * c.values[i])
            })
            .collect();
        (crate::estimator::stats::pairwise_sum(&sq) * vol).sqrt()
    }

    /// `||self - other|| / ||other||` in the discrete L2 norm.
    pub fn relative_l2_error(&self, reference: &Self) -> F {
        let diff = self.axpby(F::one(), reference, -F::one());
        diff.l2_norm() / reference.l2_norm()
    }

    pub fn max_abs(&self) -> F {
        self.components
            .iter()
            .fold(F::zero(), |m, c| m.max(c.max_abs()))
    }
}
