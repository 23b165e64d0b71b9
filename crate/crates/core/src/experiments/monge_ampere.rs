use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::{Check, Harness};
use crate::interpolation::{flow_map, MeasureCurve};
use crate::measures::{relative_entropy, ReferenceMeasure};
use crate::scalar::Scalar;

/// Mass whose trajectories may leave the grid before the check fails.
pub const DROPPED_MASS_LIMIT: f64 = 1e-8;
/// Accepted gap between the two sides of the Jacobian equation.
pub const GAP_LIMIT: f64 = 1e-2;

#[derive(Clone, Debug, Serialize)]
pub struct MongeAmpereReport {
    pub from: f64,
    pub to: f64,
    /// `H(φ#μ_t | Leb)`, from the pushed cells of the grid.
    pub pushed_entropy: f64,
    /// `H(μ_t | Leb) - ∫ ln φ' dμ_t`.
    pub jacobian_side: f64,
    pub gap: f64,
    /// `H(μ_s | Leb)` of the curve itself, which `φ#μ_t` should reproduce.
    pub target_entropy: f64,
    pub target_gap: f64,
    pub dropped_mass: f64,
}

impl Harness for MongeAmpereReport {
    type Row = MongeAmpereReport;

    fn rows(&self) -> Vec<MongeAmpereReport> {
        vec![self.clone()]
    }

    fn checks(&self) -> Vec<Check> {
        vec![Check::at_most("jacobian_equation_gap", self.gap, GAP_LIMIT)]
    }
}

/// Both sides of `H(φ#μ_t | Leb) = H(μ_t | Leb) - ∫ ln φ' dμ_t` for the flow
/// map `φ = T_{t→s}` of a 1D curve sampled at `t` and `s`.
///
/// The left side pushes every grid cell `[x_i - h/2, x_i + h/2]` through `φ`
/// and evaluates `Σ w_i ln(w_i / |φ(cell_i)|)`. The right side takes `φ'` by
/// central differences over `x_i ± h`. Cells whose trajectories leave the
/// grid are dropped; their total mass must stay below
/// [`DROPPED_MASS_LIMIT`].
pub fn monge_ampere_check<S: Scalar>(curve: &MeasureCurve<S>, t: S, s: S) -> Result<MongeAmpereReport> {
    let grid = *curve.grid();
    grid.ensure_one_dimensional("the Jacobian-equation check")?;
    let index = |tau: S| {
        curve
            .times()
            .iter()
            .position(|&x| x == tau)
            .ok_or_else(|| Error::InvalidArgument(format!("{tau} is not a sample time of the curve")))
    };
    let (i, j) = (index(t)?, index(s)?);
    let mu = curve.measure(i);
    let leb = ReferenceMeasure::lebesgue(grid);
    let entropy = relative_entropy(mu, &leb)?.as_f64();
    let target_entropy = relative_entropy(curve.measure(j), &leb)?.as_f64();
    if t == s {
        return Ok(MongeAmpereReport {
            from: t.as_f64(),
            to: s.as_f64(),
            pushed_entropy: entropy,
            jacobian_side: entropy,
            gap: 0.0,
            target_entropy,
            target_gap: (entropy - target_entropy).abs(),
            dropped_mass: 0.0,
        });
    }
    let h = grid.spacing();
    let half = h / S::lit(2.0);
    let support = mu.support();

    let mut pushed = 0.0;
    let mut jacobian = 0.0;
    let mut dropped = 0.0;
    for (k, (&w, x)) in mu.weights().iter().zip(grid.axis_points()).enumerate() {
        if !support[k] {
            continue;
        }
        let w = w.as_f64();
        let map = |y: S| flow_map(curve, t, s, y);
        let cell = map(x + half).and_then(|b| map(x - half).map(|a| b - a));
        let slope = map(x + h).and_then(|b| map(x - h).map(|a| (b - a) / (h + h)));
        match (cell, slope) {
            (Ok(width), Ok(slope)) => {
                pushed += w * (w / width.as_f64()).ln();
                jacobian += w * slope.as_f64().ln();
            }
            (Err(Error::ExitedGrid { .. }), _)
            | (_, Err(Error::ExitedGrid { .. }))
            | (Err(Error::InvalidArgument(_)), _)
            | (_, Err(Error::InvalidArgument(_))) => dropped += w,
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    }
    if dropped > DROPPED_MASS_LIMIT {
        return Err(Error::MassEscaped { defect: dropped, limit: DROPPED_MASS_LIMIT });
    }
    let jacobian_side = entropy - jacobian;
    Ok(MongeAmpereReport {
        from: t.as_f64(),
        to: s.as_f64(),
        pushed_entropy: pushed,
        jacobian_side,
        gap: (pushed - jacobian_side).abs(),
        target_entropy,
        target_gap: (pushed - target_entropy).abs(),
        dropped_mass: dropped,
    })
}
