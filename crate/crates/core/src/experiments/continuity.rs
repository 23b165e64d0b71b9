use serde::Serialize;

use crate::error::Result;
use crate::experiments::{truncate_renormalize, Check, Harness};
use crate::interpolation::dynamic_cost;
use crate::measures::{self, wasserstein_1d, GridMeasure};
use crate::scalar::Scalar;
use crate::schroedinger::{solve_schroedinger_system, SolverOptions};
use crate::semigroup::Generator;

/// Slack allowed in the monotonicity of the cost gaps.
pub const MONOTONE_SLACK: f64 = 1e-4;
/// Largest accepted gap at the last radius.
pub const FINAL_GAP_LIMIT: f64 = 1e-3;
/// Relative headroom for `𝓘` and `𝓕` of the truncations over the limit values.
pub const BOUND_HEADROOM: f64 = 0.5;

#[derive(Clone, Debug, Serialize)]
pub struct ContinuityRecord {
    /// `None` for the untruncated marginals.
    pub radius: Option<f64>,
    pub alpha_mu: f64,
    pub alpha_nu: f64,
    /// `C_T(μ_R, ν_R)`; `None` when the solve failed.
    pub cost: Option<f64>,
    /// `|C_T(μ_R, ν_R) - C_T(μ, ν)|`.
    pub gap: Option<f64>,
    pub fisher_mu: f64,
    pub fisher_nu: f64,
    pub entropy_mu: f64,
    pub entropy_nu: f64,
    /// `W₂(μ_R, μ)` (1D only).
    pub w2_mu: Option<f64>,
    pub w2_nu: Option<f64>,
    /// `max |ln f - ln g|` when `μ_R = ν_R`, where the system is symmetric.
    pub swap_asymmetry: Option<f64>,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ContinuitySweep {
    pub horizon: f64,
    pub records: Vec<ContinuityRecord>,
    pub reference: ContinuityRecord,
}

impl Harness for ContinuitySweep {
    type Row = ContinuityRecord;

    fn rows(&self) -> Vec<ContinuityRecord> {
        let mut rows = self.records.clone();
        rows.push(self.reference.clone());
        rows
    }

    fn checks(&self) -> Vec<Check> {
        let mut checks = Vec::new();
        let converged = self.reference.converged && self.records.iter().all(|r| r.converged);
        checks.push(Check::at_least("all_solves_converged", f64::from(u8::from(converged)), 1.0));
        let gaps: Vec<f64> = self.records.iter().map(|r| r.gap.unwrap_or(f64::INFINITY)).collect();
        let worst_rise = gaps.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        if gaps.len() > 1 {
            checks.push(Check::at_most("gap_monotone_nonincreasing", worst_rise, MONOTONE_SLACK));
        }
        if let Some(&last) = gaps.last() {
            checks.push(Check::at_most("final_gap", last, FINAL_GAP_LIMIT));
        }
        let r = &self.reference;
        let bound = |limit: f64| limit.abs() + BOUND_HEADROOM * limit.abs().max(1.0);
        let column = |name: &str, get: fn(&ContinuityRecord) -> f64, limit: f64| {
            let worst = self.records.iter().map(|rec| get(rec).abs()).fold(0.0, f64::max);
            Check::at_most(format!("{name}_bounded"), worst, bound(limit))
        };
        checks.push(column("fisher_mu", |x| x.fisher_mu, r.fisher_mu));
        checks.push(column("fisher_nu", |x| x.fisher_nu, r.fisher_nu));
        checks.push(column("entropy_mu", |x| x.entropy_mu, r.entropy_mu));
        checks.push(column("entropy_nu", |x| x.entropy_nu, r.entropy_nu));
        checks
    }
}

fn record<S: Scalar>(
    mu: &GridMeasure<S>,
    nu: &GridMeasure<S>,
    radius: Option<S>,
    generator: &Generator<S>,
    horizon: S,
    opts: &SolverOptions,
    samples: usize,
) -> Result<(ContinuityRecord, Option<f64>)> {
    let (mu_r, nu_r, alpha_mu, alpha_nu) = match radius {
        Some(r) => {
            let a = truncate_renormalize(mu, r)?;
            let b = truncate_renormalize(nu, r)?;
            (a.measure, b.measure, a.alpha.as_f64(), b.alpha.as_f64())
        }
        None => (mu.clone(), nu.clone(), 1.0, 1.0),
    };
    let reference = generator.reference();
    let one_d = mu.grid().dimension() == 1;
    let mut rec = ContinuityRecord {
        radius: radius.map(Scalar::as_f64),
        alpha_mu,
        alpha_nu,
        cost: None,
        gap: None,
        fisher_mu: measures::fisher_info(&mu_r, reference)?.as_f64(),
        fisher_nu: measures::fisher_info(&nu_r, reference)?.as_f64(),
        entropy_mu: measures::relative_entropy(&mu_r, reference)?.as_f64(),
        entropy_nu: measures::relative_entropy(&nu_r, reference)?.as_f64(),
        w2_mu: if one_d { Some(wasserstein_1d(&mu_r, mu)?.as_f64()) } else { None },
        w2_nu: if one_d { Some(wasserstein_1d(&nu_r, nu)?.as_f64()) } else { None },
        swap_asymmetry: None,
        converged: false,
        error: None,
    };
    let outcome = solve_schroedinger_system(&mu_r, &nu_r, generator, horizon, opts)
        .and_then(|pot| dynamic_cost(&pot, samples).map(|c| (pot, c)));
    match outcome {
        Ok((pot, cost)) => {
            rec.converged = true;
            rec.cost = Some(cost.value);
            if mu_r == nu_r {
                let gap = pot
                    .log_f()
                    .iter()
                    .zip(pot.log_g())
                    .filter(|(a, _)| a.is_finite())
                    .map(|(&a, &b)| (a - b).abs().as_f64())
                    .fold(0.0, f64::max);
                rec.swap_asymmetry = Some(gap);
            }
            Ok((rec, Some(cost.value)))
        }
        Err(e) => {
            rec.error = Some(e.to_string());
            Ok((rec, None))
        }
    }
}

/// Truncates both marginals to each radius, solves, and records the cost
/// `C_T` together with the Fisher information, entropy and `W₂` distance to
/// the untruncated marginals. A failed solve is recorded, not propagated.
pub fn continuity_sweep<S: Scalar>(
    mu: &GridMeasure<S>,
    nu: &GridMeasure<S>,
    generator: &Generator<S>,
    horizon: S,
    radii: &[S],
    opts: &SolverOptions,
    samples: usize,
) -> Result<ContinuitySweep> {
    let (mut reference, limit) = record(mu, nu, None, generator, horizon, opts, samples)?;
    reference.gap = limit.map(|_| 0.0);
    let mut records = Vec::with_capacity(radii.len());
    for &r in radii {
        let (mut rec, cost) = record(mu, nu, Some(r), generator, horizon, opts, samples)?;
        rec.gap = match (cost, limit) {
            (Some(c), Some(l)) => Some((c - l).abs()),
            _ => None,
        };
        records.push(rec);
    }
    Ok(ContinuitySweep { horizon: horizon.as_f64(), records, reference })
}
