use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::{Check, Harness};
use crate::interpolation::dynamic_cost;
use crate::measures::GridMeasure;
use crate::numeric::trapezoid;
use crate::scalar::Scalar;
use crate::schroedinger::{solve_schroedinger_system, SolverOptions};
use crate::semigroup::{entropy_f, evolve_with, Generator};

/// Relative slack of the contraction inequality.
pub const CONTRACTION_SLACK: f64 = 0.01;
/// Points of the trapezoid rule for the entropy-gap integral on `[0, t]`.
pub const ENTROPY_GAP_POINTS: usize = 201;

#[derive(Clone, Debug, Serialize)]
pub struct ContractionRow {
    pub t: f64,
    /// `C(P_t* μ, P_t* ν)`.
    pub cost: f64,
    /// `∫₀ᵗ (𝓕(P_u* μ) - 𝓕(P_u* ν))² du`.
    pub gap_integral: f64,
    /// `C(μ, ν) - gap_integral`.
    pub bound: f64,
    pub slack: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ContractionReport {
    pub initial_cost: f64,
    pub rows: Vec<ContractionRow>,
}

impl Harness for ContractionReport {
    type Row = ContractionRow;

    fn rows(&self) -> Vec<ContractionRow> {
        self.rows.clone()
    }

    fn checks(&self) -> Vec<Check> {
        let mut checks: Vec<Check> = self
            .rows
            .iter()
            .map(|r| Check {
                name: format!("contraction_t={}", r.t),
                value: r.cost,
                threshold: r.bound + CONTRACTION_SLACK * r.bound.abs(),
                passed: r.passed,
            })
            .collect();
        let mut previous = self.initial_cost;
        let mut worst = f64::NEG_INFINITY;
        for r in &self.rows {
            worst = worst.max(r.cost - previous - CONTRACTION_SLACK * previous.abs());
            previous = r.cost;
        }
        if !self.rows.is_empty() {
            checks.push(Check::at_most("cost_nonincreasing_in_t", worst, 0.0));
        }
        checks
    }
}

/// Evaluates `C(P_t* μ, P_t* ν) ≤ C(μ, ν) - ∫₀ᵗ (𝓕(P_u* μ) - 𝓕(P_u* ν))² du`
/// along the 1D heat flow, for increasing `times`. Costs use horizon `T`.
pub fn contraction_check<S: Scalar>(
    mu: &GridMeasure<S>,
    nu: &GridMeasure<S>,
    horizon: S,
    times: &[S],
    opts: &SolverOptions,
    samples: usize,
) -> Result<ContractionReport> {
    let grid = *mu.grid();
    grid.ensure_one_dimensional("the contraction check")?;
    grid.ensure_same(nu.grid())?;
    if times.iter().any(|t| !(*t > S::zero())) || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("times must be positive and strictly increasing".into()));
    }
    let generator = Generator::laplacian(grid);
    let cost = |a: &GridMeasure<S>, b: &GridMeasure<S>| -> Result<f64> {
        let pot = solve_schroedinger_system(a, b, &generator, horizon, opts)?;
        Ok(dynamic_cost(&pot, samples)?.value)
    };
    let entropy_gap = |u: S| -> Result<f64> {
        if u == S::zero() {
            return Ok((entropy_f(mu, &generator)? - entropy_f(nu, &generator)?).as_f64());
        }
        let kernel = generator.kernel_matrix(u)?;
        let a = evolve_with(&kernel, mu)?.measure;
        let b = evolve_with(&kernel, nu)?.measure;
        Ok((entropy_f(&a, &generator)? - entropy_f(&b, &generator)?).as_f64())
    };

    let initial_cost = cost(mu, nu)?;
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let kernel = generator.kernel_matrix(t)?;
        let mu_t = evolve_with(&kernel, mu)?.measure;
        let nu_t = evolve_with(&kernel, nu)?.measure;
        let cost_t = cost(&mu_t, &nu_t)?;
        let last = ENTROPY_GAP_POINTS - 1;
        let us: Vec<S> = (0..ENTROPY_GAP_POINTS).map(|k| t * S::from_usize_lossy(k) / S::from_usize_lossy(last)).collect();
        let squares = us.iter().map(|&u| entropy_gap(u).map(|g| g * g)).collect::<Result<Vec<f64>>>()?;
        let xs: Vec<f64> = us.iter().map(|u| u.as_f64()).collect();
        let gap_integral = trapezoid(&xs, &squares);
        let bound = initial_cost - gap_integral;
        let slack = bound - cost_t;
        rows.push(ContractionRow {
            t: t.as_f64(),
            cost: cost_t,
            gap_integral,
            bound,
            slack,
            passed: cost_t <= bound + CONTRACTION_SLACK * bound.abs(),
        });
    }
    Ok(ContractionReport { initial_cost, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::measures::MeasureSpec;

    fn gauss(grid: Grid<f64>, mean: f64, var: f64) -> GridMeasure<f64> {
        GridMeasure::from_spec(&MeasureSpec::gaussian_1d(mean, var), grid).unwrap()
    }

    #[test]
    fn variance_gap_gives_a_positive_correction() {
        let grid = Grid::new(1, 10.0, 641).unwrap();
        let report =
            contraction_check(&gauss(grid, 0.0, 1.0), &gauss(grid, 0.0, 2.25), 1.0, &[0.1, 0.5], &SolverOptions::default(), 33)
                .unwrap();
        assert!(report.passed(), "{report:?}");
        assert!(report.rows.iter().all(|r| r.gap_integral > 0.0));
        assert!(report.rows[1].gap_integral > report.rows[0].gap_integral);
    }

    #[test]
    fn identical_marginals_have_no_correction() {
        let grid = Grid::new(1, 8.0, 513).unwrap();
        let mu = gauss(grid, 0.5, 1.0);
        let report = contraction_check(&mu, &mu, 1.0, &[0.1, 0.25], &SolverOptions::default(), 33).unwrap();
        assert!(report.rows.iter().all(|r| r.gap_integral == 0.0 && r.bound == report.initial_cost));
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn rejects_bad_times_and_dimensions() {
        let grid = Grid::new(1, 8.0, 129).unwrap();
        let mu = gauss(grid, 0.0, 1.0);
        let opts = SolverOptions::default();
        assert!(contraction_check(&mu, &mu, 1.0, &[0.0], &opts, 33).is_err());
        assert!(contraction_check(&mu, &mu, 1.0, &[0.5, 0.25], &opts, 33).is_err());
        let plane = Grid::new(2, 8.0, 33).unwrap();
        let m2 = GridMeasure::from_spec(&MeasureSpec::Gaussian { mean: vec![0.0, 0.0], variance: 1.0 }, plane).unwrap();
        assert!(matches!(contraction_check(&m2, &m2, 1.0, &[0.1], &opts, 33), Err(Error::Unsupported(_))));
    }
}
