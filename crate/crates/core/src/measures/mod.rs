//! Probability measures discretized on uniform grids, their reference
//! measures, and the scalar functionals evaluated on them.

mod functionals;
mod velocity;
mod wasserstein;

pub use functionals::{admissible, fisher_info, relative_entropy, second_moment, BOUNDARY_MASS_LIMIT};
pub use velocity::VelocityField;
pub use wasserstein::{wasserstein_1d, wasserstein_1d_with, QuantileFunction, DEFAULT_QUANTILE_POINTS};

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::{density_floor, Scalar};

/// Largest mass a specification may leave outside the grid.
pub const TAIL_MASS_LIMIT: f64 = 1e-10;

/// One Gaussian bump of a mixture.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureComponent<S> {
    pub weight: S,
    /// One entry per grid axis.
    pub mean: Vec<S>,
    pub variance: S,
}

/// How to populate a [`GridMeasure`].
#[derive(Clone, Debug, PartialEq)]
pub enum MeasureSpec<S> {
    /// Isotropic Gaussian; `mean` has one entry per axis.
    Gaussian { mean: Vec<S>, variance: S },
    Mixture(Vec<MixtureComponent<S>>),
    /// Density values at the grid nodes, row-major.
    Tabulated(Vec<S>),
}

impl<S: Scalar> MeasureSpec<S> {
    pub fn gaussian_1d(mean: S, variance: S) -> Self {
        MeasureSpec::Gaussian { mean: vec![mean], variance }
    }
}

/// Probability measure on a grid: nonnegative node weights summing to one.
///
/// Weights and Lebesgue densities are related by `w_k = ρ_k h^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridMeasure<S> {
    grid: Grid<S>,
    weights: Vec<S>,
    normalization: S,
}

impl<S: Scalar> GridMeasure<S> {
    /// Builds a measure from a specification. Fails when the grid misses
    /// more than [`TAIL_MASS_LIMIT`] of the specified mass, or when a
    /// tabulated density is negative.
    pub fn from_spec(spec: &MeasureSpec<S>, grid: Grid<S>) -> Result<Self> {
        let density = match spec {
            MeasureSpec::Gaussian { mean, variance } => {
                check_tail(gaussian_tail_mass(&grid, mean, *variance)?)?;
                gaussian_density(&grid, mean, *variance)
            }
            MeasureSpec::Mixture(components) => {
                if components.is_empty() {
                    return Err(Error::InvalidArgument("empty mixture".into()));
                }
                let total: S = components.iter().map(|c| c.weight).sum();
                if !(total > S::zero()) || components.iter().any(|c| c.weight < S::zero()) {
                    return Err(Error::InvalidArgument("mixture weights must be nonnegative with positive sum".into()));
                }
                let mut tail = 0.0;
                let mut density = vec![S::zero(); grid.len()];
                for c in components {
                    let share = c.weight / total;
                    tail += share.as_f64() * gaussian_tail_mass(&grid, &c.mean, c.variance)?;
                    for (d, g) in density.iter_mut().zip(gaussian_density(&grid, &c.mean, c.variance)) {
                        *d = *d + share * g;
                    }
                }
                check_tail(tail)?;
                density
            }
            MeasureSpec::Tabulated(values) => {
                if values.len() != grid.len() {
                    return Err(Error::Table(format!(
                        "expected {} values, got {}",
                        grid.len(),
                        values.len()
                    )));
                }
                if let Some((row, v)) = values.iter().enumerate().find(|(_, v)| !(**v >= S::zero())) {
                    return Err(Error::NegativeDensity { row, value: v.as_f64() });
                }
                values.clone()
            }
        };
        Self::from_density(grid, &density)
    }

    /// Weights `ρ_k h^d`, renormalized to sum to one.
    pub fn from_density(grid: Grid<S>, density: &[S]) -> Result<Self> {
        let vol = grid.cell_volume();
        let raw: Vec<S> = density.iter().map(|&d| d * vol).collect();
        Self::from_weights(grid, raw)
    }

    /// Normalizes arbitrary nonnegative weights. The applied factor is kept
    /// in [`normalization`](Self::normalization).
    pub fn from_weights(grid: Grid<S>, mut weights: Vec<S>) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} weights, got {}",
                grid.len(),
                weights.len()
            )));
        }
        for (k, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFinite(k));
            }
            if w < S::zero() {
                return Err(Error::NegativeDensity { row: k, value: w.as_f64() });
            }
        }
        let total: S = weights.iter().copied().sum();
        if !(total > S::zero()) {
            return Err(Error::InvalidArgument("measure has zero total mass".into()));
        }
        let normalization = S::one() / total;
        for w in &mut weights {
            *w = *w / total;
        }
        Ok(Self { grid, weights, normalization })
    }

    /// All mass on the node closest to `point`.
    pub fn dirac(grid: Grid<S>, k: usize) -> Result<Self> {
        let mut w = vec![S::zero(); grid.len()];
        *w.get_mut(k).ok_or_else(|| Error::InvalidArgument(format!("node {k} out of range")))? = S::one();
        Self::from_weights(grid, w)
    }

    pub fn grid(&self) -> &Grid<S> {
        &self.grid
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    /// Factor the raw weights were multiplied by to reach unit mass.
    pub fn normalization(&self) -> S {
        self.normalization
    }

    pub fn total_mass(&self) -> S {
        self.weights.iter().copied().sum()
    }

    /// Density against Lebesgue measure, `w_k / h^d`.
    pub fn density(&self) -> Vec<S> {
        let vol = self.grid.cell_volume();
        self.weights.iter().map(|&w| w / vol).collect()
    }

    /// `ln(w_k / h^d)`, `-inf` on empty nodes.
    pub fn log_density(&self) -> Vec<S> {
        let log_vol = self.grid.cell_volume().ln();
        self.weights
            .iter()
            .map(|&w| if w > S::zero() { w.ln() - log_vol } else { S::neg_infinity() })
            .collect()
    }

    /// Nodes whose density exceeds the density floor.
    pub fn support(&self) -> Vec<bool> {
        let cut = density_floor::<S>() * self.grid.cell_volume();
        self.weights.iter().map(|&w| w > cut).collect()
    }

    /// `∫ φ dμ`.
    pub fn integrate(&self, phi: &[S]) -> S {
        self.weights.iter().zip(phi).map(|(&w, &f)| w * f).sum()
    }

    /// Total-variation distance `½ Σ |w - w'|`.
    pub fn total_variation(&self, other: &Self) -> Result<S> {
        self.grid.ensure_same(&other.grid)?;
        let s: S = self.weights.iter().zip(&other.weights).map(|(&a, &b)| (a - b).abs()).sum();
        Ok(s / S::lit(2.0))
    }

    /// `Σ |w - w'|`.
    pub fn l1_distance(&self, other: &Self) -> Result<S> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self.weights.iter().zip(&other.weights).map(|(&a, &b)| (a - b).abs()).sum())
    }

    /// Mean along each axis.
    pub fn mean(&self) -> Vec<S> {
        (0..self.grid.dimension())
            .map(|a| self.weights.iter().enumerate().map(|(k, &w)| w * self.grid.coordinate(k, a)).sum())
            .collect()
    }

    /// Mass inside the closed ball `|x| ≤ radius`.
    pub fn ball_mass(&self, radius: S) -> S {
        let r2 = radius * radius;
        self.weights
            .iter()
            .enumerate()
            .filter(|(k, _)| self.grid.norm_squared(*k) <= r2)
            .map(|(_, &w)| w)
            .sum()
    }
}

/// Kind of reference measure `m`.
#[derive(Clone, Debug, PartialEq)]
pub enum ReferenceKind<S> {
    Lebesgue,
    /// Isotropic Gaussian with the same mean on every axis.
    Gaussian { mean: S, variance: S },
    /// Tabulated density, e.g. a grid measure used as its own reference.
    Custom,
}

/// Reference measure with its (log) density at the grid nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceMeasure<S> {
    kind: ReferenceKind<S>,
    grid: Grid<S>,
    log_density: Vec<S>,
}

impl<S: Scalar> ReferenceMeasure<S> {
    pub fn lebesgue(grid: Grid<S>) -> Self {
        Self { kind: ReferenceKind::Lebesgue, grid, log_density: vec![S::zero(); grid.len()] }
    }

    pub fn gaussian(grid: Grid<S>, mean: S, variance: S) -> Result<Self> {
        if !(variance > S::zero()) {
            return Err(Error::InvalidArgument(format!("variance must be positive, got {variance}")));
        }
        let d = S::from_usize_lossy(grid.dimension());
        let two = S::lit(2.0);
        let log_norm = -d / two * (two * S::PI() * variance).ln();
        let log_density = (0..grid.len())
            .map(|k| {
                let r2: S = (0..grid.dimension()).map(|a| (grid.coordinate(k, a) - mean).powi(2)).sum();
                log_norm - r2 / (two * variance)
            })
            .collect();
        Ok(Self { kind: ReferenceKind::Gaussian { mean, variance }, grid, log_density })
    }

    /// Uses a grid measure's own density as the reference.
    pub fn from_measure(measure: &GridMeasure<S>) -> Self {
        Self { kind: ReferenceKind::Custom, grid: *measure.grid(), log_density: measure.log_density() }
    }

    /// Reference from a tabulated log density. Every entry must be finite
    /// or `-inf`.
    pub fn custom(grid: Grid<S>, log_density: Vec<S>) -> Result<Self> {
        if log_density.len() != grid.len() {
            return Err(Error::InvalidArgument("reference length does not match grid".into()));
        }
        if let Some(k) = log_density.iter().position(|v| v.is_nan() || *v == S::infinity()) {
            return Err(Error::NonFinite(k));
        }
        Ok(Self { kind: ReferenceKind::Custom, grid, log_density })
    }

    pub fn kind(&self) -> &ReferenceKind<S> {
        &self.kind
    }

    pub fn grid(&self) -> &Grid<S> {
        &self.grid
    }

    pub fn log_density(&self) -> &[S] {
        &self.log_density
    }

    pub fn density(&self) -> Vec<S> {
        self.log_density.iter().map(|v| v.exp()).collect()
    }

    /// `ln(m_k h^d)`: log quadrature weights of the reference.
    pub fn log_weights(&self) -> Vec<S> {
        let log_vol = self.grid.cell_volume().ln();
        self.log_density.iter().map(|&v| v + log_vol).collect()
    }

    /// Mass the reference places on the grid, `Σ m_k h^d`.
    pub fn grid_mass(&self) -> S {
        self.log_weights().into_iter().map(|v| v.exp()).sum()
    }

    /// For a probability reference, the mass lost to grid truncation,
    /// `1 - Σ m_k h^d`. `None` for Lebesgue (infinite mass).
    pub fn truncation_loss(&self) -> Option<S> {
        match self.kind {
            ReferenceKind::Lebesgue => None,
            _ => Some(S::one() - self.grid_mass()),
        }
    }

    /// Radon-Nikodym derivative `dμ/dm` at every node, in log form.
    pub fn log_relative_density(&self, measure: &GridMeasure<S>) -> Result<Vec<S>> {
        self.grid.ensure_same(measure.grid())?;
        Ok(measure
            .log_density()
            .into_iter()
            .zip(&self.log_density)
            .map(|(lp, &lr)| if lp == S::neg_infinity() { lp } else { lp - lr })
            .collect())
    }
}

fn gaussian_density<S: Scalar>(grid: &Grid<S>, mean: &[S], variance: S) -> Vec<S> {
    let two = S::lit(2.0);
    let d = S::from_usize_lossy(grid.dimension());
    let norm = (two * S::PI() * variance).powf(-d / two);
    (0..grid.len())
        .map(|k| {
            let r2: S = (0..grid.dimension()).map(|a| (grid.coordinate(k, a) - mean[a]).powi(2)).sum();
            norm * (-r2 / (two * variance)).exp()
        })
        .collect()
}

/// Mass of an isotropic Gaussian outside the grid's box.
fn gaussian_tail_mass<S: Scalar>(grid: &Grid<S>, mean: &[S], variance: S) -> Result<f64> {
    if mean.len() != grid.dimension() {
        return Err(Error::InvalidArgument(format!(
            "mean has {} coordinates, grid has dimension {}",
            mean.len(),
            grid.dimension()
        )));
    }
    if !(variance > S::zero()) {
        return Err(Error::InvalidArgument(format!("variance must be positive, got {variance}")));
    }
    let l = grid.half_width().as_f64();
    let scale = (2.0 * variance.as_f64()).sqrt();
    let inside: f64 = mean
        .iter()
        .map(|m| {
            let m = m.as_f64();
            1.0 - 0.5 * erfc((l - m) / scale) - 0.5 * erfc((l + m) / scale)
        })
        .product();
    Ok((1.0 - inside).max(0.0))
}

fn check_tail(tail_mass: f64) -> Result<()> {
    if tail_mass >= TAIL_MASS_LIMIT {
        Err(Error::TailMass { tail_mass, threshold: TAIL_MASS_LIMIT })
    } else {
        Ok(())
    }
}
