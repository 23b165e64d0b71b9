use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::measures::GridMeasure;
use crate::numeric::support_gradient;
use crate::scalar::Scalar;

/// Vector field sampled at the grid nodes, one component vector per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityField<S> {
    grid: Grid<S>,
    components: Vec<Vec<S>>,
}

impl<S: Scalar> VelocityField<S> {
    pub fn new(grid: Grid<S>, components: Vec<Vec<S>>) -> Result<Self> {
        if components.len() != grid.dimension() || components.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::InvalidArgument("velocity components do not match the grid".into()));
        }
        Ok(Self { grid, components })
    }

    pub fn zeros(grid: Grid<S>) -> Self {
        Self { grid, components: vec![vec![S::zero(); grid.len()]; grid.dimension()] }
    }

    /// `∇φ` on `support` (zero elsewhere).
    pub fn gradient_of(grid: Grid<S>, potential: &[S], support: &[bool]) -> Self {
        Self { grid, components: support_gradient(&grid, potential, support) }
    }

    /// Field given pointwise by `f(x)`, which returns one value per axis.
    pub fn from_fn(grid: Grid<S>, f: impl Fn(&[S]) -> Vec<S>) -> Self {
        let values: Vec<Vec<S>> = (0..grid.len()).map(|k| f(&grid.point(k))).collect();
        let components = (0..grid.dimension()).map(|a| values.iter().map(|v| v[a]).collect()).collect();
        Self { grid, components }
    }

    pub fn grid(&self) -> &Grid<S> {
        &self.grid
    }

    pub fn component(&self, axis: usize) -> &[S] {
        &self.components[axis]
    }

    /// `⟨u, v⟩_{L²(μ)}`, restricted to nodes above the density floor.
    pub fn inner(&self, other: &Self, mu: &GridMeasure<S>) -> Result<S> {
        self.grid.ensure_same(&other.grid)?;
        self.grid.ensure_same(mu.grid())?;
        let support = mu.support();
        Ok(mu
            .weights()
            .iter()
            .enumerate()
            .filter(|(k, _)| support[*k])
            .map(|(k, &w)| {
                w * self
                    .components
                    .iter()
                    .zip(&other.components)
                    .map(|(a, b)| a[k] * b[k])
                    .sum::<S>()
            })
            .sum())
    }

    /// `‖v‖²_{L²(μ)}`.
    pub fn norm_squared(&self, mu: &GridMeasure<S>) -> Result<S> {
        self.inner(self, mu)
    }

    /// Largest Euclidean norm over the nodes in `support`.
    pub fn max_norm(&self, support: &[bool]) -> S {
        (0..self.grid.len())
            .filter(|&k| support[k])
            .map(|k| self.components.iter().map(|c| c[k] * c[k]).sum::<S>().sqrt())
            .fold(S::zero(), |a, b| if b > a { b } else { a })
    }

    /// Pointwise `a·self + b·other`.
    pub fn combine(&self, a: S, other: &Self, b: S) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(x, y)| x.iter().zip(y).map(|(&p, &q)| a * p + b * q).collect())
            .collect();
        Ok(Self { grid: self.grid, components })
    }

    /// Linear interpolation of a 1D field at an arbitrary abscissa.
    /// `None` outside `[-L, L]`.
    pub fn interpolate_1d(&self, x: S) -> Option<S> {
        let l = self.grid.half_width();
        if !(x >= -l && x <= l) {
            return None;
        }
        let h = self.grid.spacing();
        let pos = (x + l) / h;
        let n = self.grid.points();
        let i = pos.floor().to_usize().unwrap_or(0).min(n - 2);
        let frac = pos - S::from_usize_lossy(i);
        let c = &self.components[0];
        Some(c[i] + frac * (c[i + 1] - c[i]))
    }
}
