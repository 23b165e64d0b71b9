use crate::error::{Error, Result};
use crate::measures::GridMeasure;
use crate::scalar::Scalar;

/// Default number of midpoints on the `u ∈ (0, 1)` grid.
pub const DEFAULT_QUANTILE_POINTS: usize = 16_384;

/// Quantile function of a 1D grid measure whose node masses are spread
/// uniformly over their cells `[x_k - h/2, x_k + h/2]`, so the CDF is
/// piecewise linear.
#[derive(Clone, Debug)]
pub struct QuantileFunction<S> {
    left_edge: S,
    spacing: S,
    weights: Vec<S>,
    /// `cumulative[k] = Σ_{j<k} w_j`, length `N + 1`.
    cumulative: Vec<S>,
}

impl<S: Scalar> QuantileFunction<S> {
    pub fn new(mu: &GridMeasure<S>) -> Result<Self> {
        mu.grid().ensure_one_dimensional("the 1D quantile coupling")?;
        let h = mu.grid().spacing();
        let mut cumulative = Vec::with_capacity(mu.weights().len() + 1);
        let mut acc = S::zero();
        cumulative.push(acc);
        for &w in mu.weights() {
            acc = acc + w;
            cumulative.push(acc);
        }
        Ok(Self {
            left_edge: -mu.grid().half_width() - h / S::lit(2.0),
            spacing: h,
            weights: mu.weights().to_vec(),
            cumulative,
        })
    }

    /// `F^{-1}(u)` for `u ∈ [0, 1]`.
    pub fn eval(&self, u: S) -> S {
        let total = *self.cumulative.last().expect("nonempty");
        let u = u.max(S::zero()).min(total);
        // first cell whose cumulative upper end reaches u with positive mass
        let mut lo = 0usize;
        let mut hi = self.weights.len() - 1;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.cumulative[mid + 1] < u {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        let mut k = lo;
        while self.weights[k] == S::zero() && k + 1 < self.weights.len() {
            k += 1;
        }
        let frac = if self.weights[k] > S::zero() {
            ((u - self.cumulative[k]) / self.weights[k]).max(S::zero()).min(S::one())
        } else {
            S::zero()
        };
        self.left_edge + (S::from_usize_lossy(k) + frac) * self.spacing
    }

    /// Quantiles at the midpoints `u_j = (j + ½)/count`.
    pub fn midpoints(&self, count: usize) -> Vec<S> {
        let c = S::from_usize_lossy(count);
        (0..count)
            .map(|j| self.eval((S::from_usize_lossy(j) + S::lit(0.5)) / c))
            .collect()
    }
}

/// `W₂(μ, ν)` in 1D through the quantile coupling on
/// [`DEFAULT_QUANTILE_POINTS`] midpoints.
pub fn wasserstein_1d<S: Scalar>(mu: &GridMeasure<S>, nu: &GridMeasure<S>) -> Result<S> {
    wasserstein_1d_with(mu, nu, DEFAULT_QUANTILE_POINTS)
}

/// `W₂(μ, ν) = (∫₀¹ |F_μ⁻¹ - F_ν⁻¹|² du)^{1/2}` by the midpoint rule on
/// `points ≥ 10⁴` values of `u`.
pub fn wasserstein_1d_with<S: Scalar>(mu: &GridMeasure<S>, nu: &GridMeasure<S>, points: usize) -> Result<S> {
    if points < 10_000 {
        return Err(Error::InvalidArgument(format!("need at least 10^4 quantile points, got {points}")));
    }
    mu.grid().ensure_same(nu.grid())?;
    let qa = QuantileFunction::new(mu)?.midpoints(points);
    let qb = QuantileFunction::new(nu)?.midpoints(points);
    let sum: S = qa.iter().zip(&qb).map(|(&a, &b)| (a - b) * (a - b)).sum();
    Ok((sum / S::from_usize_lossy(points)).sqrt())
}
