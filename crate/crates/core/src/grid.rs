//! Uniform tensor grids on `[-L, L]^d`, `d ∈ {1, 2}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Smallest admissible number of points per axis.
pub const MIN_POINTS: usize = 8;

/// Uniform grid with `points` nodes per axis on `[-half_width, half_width]`.
///
/// Nodes are stored in row-major order: in 2D the flat index of node
/// `(i, j)` is `i * points + j`, with `i` indexing the first coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid<S> {
    dimension: usize,
    half_width: S,
    points: usize,
}

impl<S: Scalar> Grid<S> {
    pub fn new(dimension: usize, half_width: S, points: usize) -> Result<Self> {
        if dimension != 1 && dimension != 2 {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dimension}")));
        }
        if points < MIN_POINTS {
            return Err(Error::InvalidGrid(format!("need at least {MIN_POINTS} points per axis, got {points}")));
        }
        if !(half_width > S::zero()) || !half_width.is_finite() {
            return Err(Error::InvalidGrid(format!("half width must be positive and finite, got {half_width}")));
        }
        Ok(Self { dimension, half_width, points })
    }

    /// Default 1D grid: `L = 8`, `N = 513`.
    pub fn default_1d() -> Self {
        Self { dimension: 1, half_width: S::lit(8.0), points: 513 }
    }

    /// Default 2D grid: `L = 6`, `N = 65` per axis.
    pub fn default_2d() -> Self {
        Self { dimension: 2, half_width: S::lit(6.0), points: 65 }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn half_width(&self) -> S {
        self.half_width
    }

    /// Points per axis.
    pub fn points(&self) -> usize {
        self.points
    }

    /// Total number of nodes, `points^dimension`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Spacing `h = 2L / (N - 1)`.
    pub fn spacing(&self) -> S {
        (self.half_width + self.half_width) / S::from_usize_lossy(self.points - 1)
    }

    /// Quadrature weight of one node, `h^d`.
    pub fn cell_volume(&self) -> S {
        self.spacing().powi(self.dimension as i32)
    }

    /// Coordinates of one axis, `x_i = -L + i h`.
    pub fn axis_points(&self) -> Vec<S> {
        let h = self.spacing();
        (0..self.points).map(|i| -self.half_width + S::from_usize_lossy(i) * h).collect()
    }

    /// Flat-index distance between neighbours along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        if self.dimension == 2 && axis == 0 {
            self.points
        } else {
            1
        }
    }

    /// Index along `axis` of flat node `k`.
    pub fn axis_index(&self, k: usize, axis: usize) -> usize {
        (k / self.stride(axis)) % self.points
    }

    /// Coordinate along `axis` of flat node `k`.
    pub fn coordinate(&self, k: usize, axis: usize) -> S {
        -self.half_width + S::from_usize_lossy(self.axis_index(k, axis)) * self.spacing()
    }

    /// All coordinates of flat node `k` (length = dimension).
    pub fn point(&self, k: usize) -> Vec<S> {
        (0..self.dimension).map(|a| self.coordinate(k, a)).collect()
    }

    /// `|x_k|²`.
    pub fn norm_squared(&self, k: usize) -> S {
        (0..self.dimension).map(|a| self.coordinate(k, a).powi(2)).sum()
    }

    /// `|x_k - x_l|²`.
    pub fn distance_squared(&self, k: usize, l: usize) -> S {
        (0..self.dimension)
            .map(|a| (self.coordinate(k, a) - self.coordinate(l, a)).powi(2))
            .sum()
    }

    /// Whether node `k` lies on one of the two outermost layers along some axis.
    pub fn is_near_boundary(&self, k: usize) -> bool {
        (0..self.dimension).any(|a| {
            let i = self.axis_index(k, a);
            i < 2 || i + 2 >= self.points
        })
    }

    /// Errors unless both grids are identical.
    pub fn ensure_same(&self, other: &Self) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn ensure_one_dimensional(&self, what: &'static str) -> Result<()> {
        if self.dimension == 1 {
            Ok(())
        } else {
            Err(Error::Unsupported(what))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_nodes() {
        let g = Grid::new(1, 8.0_f64, 513).unwrap();
        assert_eq!(g.spacing(), 1.0 / 32.0);
        let xs = g.axis_points();
        assert_eq!(xs[0], -8.0);
        assert_eq!(xs[256], 0.0);
        assert_eq!(xs[512], 8.0);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Grid::new(3, 1.0_f64, 16).is_err());
        assert!(Grid::new(1, 1.0_f64, 7).is_err());
        assert!(Grid::new(1, -1.0_f64, 16).is_err());
    }

    #[test]
    fn two_dimensional_indexing_is_row_major() {
        let g = Grid::new(2, 1.0_f64, 9).unwrap();
        assert_eq!(g.len(), 81);
        let k = 3 * 9 + 5;
        assert_eq!(g.axis_index(k, 0), 3);
        assert_eq!(g.axis_index(k, 1), 5);
        assert_eq!(g.stride(0), 9);
        assert!(g.is_near_boundary(9 + 5));
        assert!(!g.is_near_boundary(4 * 9 + 4));
    }
}
