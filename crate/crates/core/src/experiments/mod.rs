//! Numerical harnesses for the cost-derivative formula, continuity of the
//! entropic cost under truncation, the Gaussian contraction inequality,
//! Talagrand-type bounds, the Jacobian equation along flow maps, and a
//! closed-form Gaussian oracle.
//!
//! Each harness returns a report that can be flattened into CSV rows and a
//! list of named [`Check`]s.

mod continuity;
mod contraction;
mod derivative;
mod monge_ampere;
mod talagrand;

pub use continuity::{continuity_sweep, ContinuityRecord, ContinuitySweep};
pub use contraction::{contraction_check, ContractionReport, ContractionRow, CONTRACTION_SLACK, ENTROPY_GAP_POINTS};
pub use derivative::{derivative_check, DerivativeOptions, DerivativeRecord, RELATIVE_ERROR_FLOOR};
pub use monge_ampere::{monge_ampere_check, MongeAmpereReport, DROPPED_MASS_LIMIT};
pub use talagrand::{talagrand_check, TalagrandBranch, TalagrandReport, TalagrandRow, TALAGRAND_SCAN_POINTS};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::GridMeasure;
use crate::scalar::Scalar;

/// Smallest share of mass the truncation ball must keep.
pub const TRUNCATION_MASS_MIN: f64 = 1e-3;

/// One asserted inequality or tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value <= threshold`.
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, passed: value <= threshold }
    }

    /// Passes when `value >= threshold`.
    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, passed: value >= threshold }
    }
}

/// A harness outcome: CSV rows plus named checks.
pub trait Harness {
    type Row: Serialize;

    fn rows(&self) -> Vec<Self::Row>;

    fn checks(&self) -> Vec<Check>;

    fn passed(&self) -> bool {
        self.checks().iter().all(|c| c.passed)
    }

    fn failures(&self) -> Vec<Check> {
        self.checks().into_iter().filter(|c| !c.passed).collect()
    }
}

/// Measure restricted to a ball, with the factor that renormalized it.
#[derive(Clone, Debug)]
pub struct Truncated<S> {
    pub measure: GridMeasure<S>,
    pub radius: S,
    /// `α = 1 / μ(B(0, R))`.
    pub alpha: S,
}

/// `α 𝟙_{B(0,R)} μ`. The ball must keep at least [`TRUNCATION_MASS_MIN`]
/// of the mass; a ball containing every node returns `μ` itself.
pub fn truncate_renormalize<S: Scalar>(mu: &GridMeasure<S>, radius: S) -> Result<Truncated<S>> {
    let grid = *mu.grid();
    let r2 = radius * radius;
    let inside: Vec<bool> = (0..grid.len()).map(|k| grid.norm_squared(k) <= r2).collect();
    if inside.iter().all(|&b| b) {
        return Ok(Truncated { measure: mu.clone(), radius, alpha: S::one() });
    }
    let mass = mu.ball_mass(radius);
    if !(mass >= S::lit(TRUNCATION_MASS_MIN)) {
        return Err(Error::MassCondition { radius: radius.as_f64(), mass: mass.as_f64(), required: TRUNCATION_MASS_MIN });
    }
    let weights = mu.weights().iter().zip(&inside).map(|(&w, &b)| if b { w } else { S::zero() }).collect();
    let measure = GridMeasure::from_weights(grid, weights)?;
    let alpha = measure.normalization();
    Ok(Truncated { measure, radius, alpha })
}

/// Closed-form quantities for one-dimensional Gaussians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GaussianQuery {
    /// `H(N(m, σ²) | Leb) = -½ ln(2πσ²) - ½`.
    Entropy { mean: f64, variance: f64 },
    /// `𝓘(N(m, σ²)) = 1/σ²` against Lebesgue measure.
    Fisher { mean: f64, variance: f64 },
    /// Variance after heat flow for time `t`: `σ² + 2t`.
    HeatVariance { variance: f64, time: f64 },
    /// `W₂ = √((m₁ - m₂)² + (σ₁ - σ₂)²)`.
    Wasserstein { mean_a: f64, variance_a: f64, mean_b: f64, variance_b: f64 },
}

pub fn gaussian_oracle(query: GaussianQuery) -> Result<f64> {
    let positive = |v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::InvalidArgument(format!("variance must be positive, got {v}")))
        }
    };
    Ok(match query {
        GaussianQuery::Entropy { variance, .. } => {
            -0.5 * (2.0 * std::f64::consts::PI * positive(variance)?).ln() - 0.5
        }
        GaussianQuery::Fisher { variance, .. } => 1.0 / positive(variance)?,
        GaussianQuery::HeatVariance { variance, time } => {
            if !(time >= 0.0) {
                return Err(Error::InvalidTime(time));
            }
            positive(variance)? + 2.0 * time
        }
        GaussianQuery::Wasserstein { mean_a, variance_a, mean_b, variance_b } => {
            let (sa, sb) = (positive(variance_a)?.sqrt(), positive(variance_b)?.sqrt());
            ((mean_a - mean_b).powi(2) + (sa - sb).powi(2)).sqrt()
        }
    })
}
