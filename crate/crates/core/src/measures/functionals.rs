use crate::error::{Error, Result};
use crate::measures::{GridMeasure, ReferenceMeasure};
use crate::numeric::{support_extent, support_gradient};
use crate::scalar::Scalar;

/// Mass allowed on the two outermost node layers for a measure to count as
/// admissible.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-8;

/// `H(p|r) = Σ w_k ln(ρ_p(x_k) / ρ_r(x_k))`, with `0 ln 0 = 0`.
///
/// Negative values are legitimate when `r` has infinite mass (Lebesgue).
pub fn relative_entropy<S: Scalar>(p: &GridMeasure<S>, r: &ReferenceMeasure<S>) -> Result<S> {
    p.grid().ensure_same(r.grid())?;
    let support = p.support();
    let log_p = p.log_density();
    let mut acc = S::zero();
    for (k, ((&w, &lp), &lr)) in p.weights().iter().zip(&log_p).zip(r.log_density()).enumerate() {
        if !support[k] {
            continue;
        }
        if lr == S::neg_infinity() {
            return Err(Error::InfiniteEntropy { node: k });
        }
        acc = acc + w * (lp - lr);
    }
    Ok(acc)
}

/// `I(μ) = Σ w_k |∇ ln(dμ/dm)(x_k)|²`, gradient by central differences
/// (one-sided at the support edge). Nodes under the density floor
/// contribute nothing.
pub fn fisher_info<S: Scalar>(mu: &GridMeasure<S>, m: &ReferenceMeasure<S>) -> Result<S> {
    let support = mu.support();
    for (axis, nodes) in support_extent(mu.grid(), &support).into_iter().enumerate() {
        if nodes < 3 {
            return Err(Error::ThinSupport { axis, nodes });
        }
    }
    let log_ratio = m.log_relative_density(mu)?;
    let grad = support_gradient(mu.grid(), &log_ratio, &support);
    Ok(mu
        .weights()
        .iter()
        .enumerate()
        .filter(|(k, _)| support[*k])
        .map(|(k, &w)| w * grad.iter().map(|g| g[k] * g[k]).sum::<S>())
        .sum())
}

/// `Σ w_k |x_k|²`.
pub fn second_moment<S: Scalar>(mu: &GridMeasure<S>) -> S {
    let g = mu.grid();
    mu.weights().iter().enumerate().map(|(k, &w)| w * g.norm_squared(k)).sum()
}

/// Grid proxy for membership in the finite-entropy, finite-moment class:
/// entropy and second moment finite, and less than [`BOUNDARY_MASS_LIMIT`]
/// on the two outermost node layers of each axis.
pub fn admissible<S: Scalar>(mu: &GridMeasure<S>, m: &ReferenceMeasure<S>) -> bool {
    let entropy_ok = matches!(relative_entropy(mu, m), Ok(v) if v.is_finite());
    let moment_ok = second_moment(mu).is_finite();
    let g = mu.grid();
    let boundary: S = mu
        .weights()
        .iter()
        .enumerate()
        .filter(|(k, _)| g.is_near_boundary(*k))
        .map(|(_, &w)| w)
        .sum();
    entropy_ok && moment_ok && boundary < S::lit(BOUNDARY_MASS_LIMIT)
}
