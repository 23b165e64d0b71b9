//! Small numerical kernels: log-sum-exp, quadrature rules and
//! finite-difference gradients restricted to a support mask.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Scalar;

/// `log Σ exp(v)`, with the maximum subtracted first. Returns `-inf` when
/// every entry is `-inf` (empty support).
pub fn log_sum_exp<S: Scalar>(values: impl IntoIterator<Item = S> + Clone) -> S {
    let max = values
        .clone()
        .into_iter()
        .fold(S::neg_infinity(), |acc, v| if v > acc { v } else { acc });
    if max == S::neg_infinity() {
        return max;
    }
    if max == S::infinity() {
        return max;
    }
    let sum: S = values.into_iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Composite Simpson rule on equally spaced samples. Requires an odd number
/// of samples, at least 3.
pub fn simpson<S: Scalar>(values: &[S], step: S) -> Result<S> {
    let n = values.len();
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "Simpson rule needs an odd sample count >= 3, got {n}"
        )));
    }
    let two = S::lit(2.0);
    let four = S::lit(4.0);
    let mut acc = values[0] + values[n - 1];
    for (i, &v) in values.iter().enumerate().take(n - 1).skip(1) {
        acc = acc + if i % 2 == 1 { four * v } else { two * v };
    }
    Ok(acc * step / S::lit(3.0))
}

/// Trapezoid rule on arbitrary (sorted) abscissae.
pub fn trapezoid<S: Scalar>(xs: &[S], ys: &[S]) -> S {
    debug_assert_eq!(xs.len(), ys.len());
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) / S::lit(2.0))
        .sum()
}

/// Gradient of a nodal scalar field, one component per axis.
///
/// Central differences where both neighbours along an axis lie in `support`,
/// one-sided differences at support edges, zero outside the support or where
/// a node is isolated along that axis.
pub fn support_gradient<S: Scalar>(grid: &Grid<S>, values: &[S], support: &[bool]) -> Vec<Vec<S>> {
    let h = grid.spacing();
    let two_h = h + h;
    let n = grid.points();
    let len = grid.len();
    (0..grid.dimension())
        .map(|axis| {
            let stride = grid.stride(axis);
            let mut out = vec![S::zero(); len];
            for (k, slot) in out.iter_mut().enumerate() {
                if !support[k] {
                    continue;
                }
                let i = grid.axis_index(k, axis);
                let left = i > 0 && support[k - stride];
                let right = i + 1 < n && support[k + stride];
                *slot = match (left, right) {
                    (true, true) => (values[k + stride] - values[k - stride]) / two_h,
                    (false, true) => (values[k + stride] - values[k]) / h,
                    (true, false) => (values[k] - values[k - stride]) / h,
                    (false, false) => S::zero(),
                };
            }
            out
        })
        .collect()
}

/// Number of distinct axis positions occupied by the support, per axis.
pub fn support_extent<S: Scalar>(grid: &Grid<S>, support: &[bool]) -> Vec<usize> {
    (0..grid.dimension())
        .map(|axis| {
            let mut seen = vec![false; grid.points()];
            for (k, &inside) in support.iter().enumerate() {
                if inside {
                    seen[grid.axis_index(k, axis)] = true;
                }
            }
            seen.into_iter().filter(|&s| s).count()
        })
        .collect()
}
