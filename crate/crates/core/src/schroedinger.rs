//! Log-domain iterative proportional fitting for the Schrödinger system
//!
//! ```text
//! dμ/dm = f · P_T g,    dν/dm = g · P_T f,
//! ```
//!
//! the optimal plan `γ = f ⊗ g · R₀ᵀ` with `dR₀ᵀ = p_T(x, y) dm(x) dm(y)`,
//! and the Schrödinger cost `H(γ | R₀ᵀ)`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::GridMeasure;
use crate::numeric::log_sum_exp;
use crate::scalar::Scalar;
use crate::semigroup::{self, row_lse, Generator, KernelMatrix};

/// Largest plan [`EntropicPlan::materialize`] agrees to build.
pub const MAX_PLAN_PAIRS: usize = 100_000_000;

/// Consecutive iterations without any residual decrease before the solver
/// declares a plateau.
const PLATEAU_WINDOW: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Stop once the L¹ marginal residual on weights drops below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 100_000 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    /// `Σ |γ(·, Y) - μ|` after the final update.
    pub residual_mu: f64,
    /// `Σ |γ(X, ·) - ν|` after the final update.
    pub residual_nu: f64,
    /// Constant `c` added to `ln f` (and subtracted from `ln g`) to equalize
    /// `∫ f dm` and `∫ g dm`.
    pub gauge_shift: f64,
    /// μ-marginal residual at the start of every iteration.
    pub residual_trace: Vec<f64>,
    pub kernel_under_resolved: bool,
}

/// Solution `(f, g)` of the Schrödinger system for one marginal pair and horizon.
#[derive(Clone, Debug)]
pub struct SchroedingerPotentials<S> {
    log_f: Vec<S>,
    log_g: Vec<S>,
    generator: Generator<S>,
    horizon: S,
    mu: GridMeasure<S>,
    nu: GridMeasure<S>,
    kernel: Arc<KernelMatrix<S>>,
    diagnostics: SolverDiagnostics,
}

impl<S: Scalar> SchroedingerPotentials<S> {
    pub fn log_f(&self) -> &[S] {
        &self.log_f
    }

    pub fn log_g(&self) -> &[S] {
        &self.log_g
    }

    pub fn generator(&self) -> &Generator<S> {
        &self.generator
    }

    pub fn horizon(&self) -> S {
        self.horizon
    }

    pub fn mu(&self) -> &GridMeasure<S> {
        &self.mu
    }

    pub fn nu(&self) -> &GridMeasure<S> {
        &self.nu
    }

    pub fn kernel(&self) -> &Arc<KernelMatrix<S>> {
        &self.kernel
    }

    pub fn diagnostics(&self) -> &SolverDiagnostics {
        &self.diagnostics
    }

    /// Same solution with `(ln f + c, ln g - c)`. The plan is unchanged.
    pub fn gauge_shifted(&self, c: S) -> Self {
        let mut out = self.clone();
        for v in &mut out.log_f {
            *v = *v + c;
        }
        for v in &mut out.log_g {
            *v = *v - c;
        }
        out
    }

    /// Marginals `(Σ_j γ_ij, Σ_i γ_ij)` of the plan the potentials define.
    pub fn plan_marginals(&self) -> (Vec<S>, Vec<S>) {
        plan_marginals(&self.kernel, &self.log_f, &self.log_g)
    }
}

fn log_rn_derivative<S: Scalar>(mu: &GridMeasure<S>, log_m: &[S]) -> Vec<S> {
    mu.weights()
        .iter()
        .zip(log_m)
        .map(|(&w, &m)| if w > S::zero() { w.ln() - m } else { S::neg_infinity() })
        .collect()
}

fn add<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

/// `ln P_T exp(ψ)` for every node, with `ψ` already carrying `ln m`.
fn lse_rows<S: Scalar>(kernel: &KernelMatrix<S>, shifted: &[S]) -> Vec<S> {
    (0..kernel.size()).map(|i| row_lse(kernel.log_row(i), shifted)).collect()
}

fn plan_marginals<S: Scalar>(kernel: &KernelMatrix<S>, log_f: &[S], log_g: &[S]) -> (Vec<S>, Vec<S>) {
    let lm = kernel.log_m_weights();
    let pg = lse_rows(kernel, &add(log_g, lm));
    let pf = lse_rows(kernel, &add(log_f, lm));
    let rows = (0..lm.len()).map(|i| (log_f[i] + lm[i] + pg[i]).exp()).map(nan_to_zero).collect();
    let cols = (0..lm.len()).map(|j| (log_g[j] + lm[j] + pf[j]).exp()).map(nan_to_zero).collect();
    (rows, cols)
}

fn nan_to_zero<S: Scalar>(v: S) -> S {
    if v.is_nan() {
        S::zero()
    } else {
        v
    }
}

fn l1<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(&x, &y)| (x - y).abs()).sum()
}

/// Solves the Schrödinger system for `(μ, ν)` at horizon `T` by alternating
/// log-domain updates, starting from `ln g ≡ 0`.
pub fn solve_schroedinger_system<S: Scalar>(
    mu: &GridMeasure<S>,
    nu: &GridMeasure<S>,
    generator: &Generator<S>,
    horizon: S,
    opts: &SolverOptions,
) -> Result<SchroedingerPotentials<S>> {
    let kernel = Arc::new(generator.kernel_matrix(horizon)?);
    solve_with_kernel(mu, nu, generator, kernel, opts)
}

/// As [`solve_schroedinger_system`], reusing a kernel built for the same
/// generator (its time is the horizon).
pub fn solve_with_kernel<S: Scalar>(
    mu: &GridMeasure<S>,
    nu: &GridMeasure<S>,
    generator: &Generator<S>,
    kernel: Arc<KernelMatrix<S>>,
    opts: &SolverOptions,
) -> Result<SchroedingerPotentials<S>> {
    let grid = generator.grid();
    grid.ensure_same(mu.grid())?;
    grid.ensure_same(nu.grid())?;
    grid.ensure_same(kernel.grid())?;
    for (marginal, m) in [("μ", mu), ("ν", nu)] {
        if !semigroup::admissible(m, generator) {
            return Err(Error::NotAdmissible { marginal });
        }
    }
    let lm = kernel.log_m_weights().to_vec();
    let log_rho_mu = log_rn_derivative(mu, &lm);
    let log_rho_nu = log_rn_derivative(nu, &lm);
    let tol = S::lit(opts.tol);

    let mut log_g = vec![S::zero(); lm.len()];
    let mut log_f = vec![S::zero(); lm.len()];
    let mut trace = Vec::new();
    let mut best = f64::INFINITY;
    let mut stale = 0usize;
    let mut converged = false;
    let mut iterations = 0usize;

    for it in 0..opts.max_iter {
        let pg = lse_rows(&kernel, &add(&log_g, &lm));
        if it > 0 {
            let residual: S = (0..lm.len())
                .map(|i| {
                    let row = nan_to_zero((log_f[i] + lm[i] + pg[i]).exp());
                    (row - mu.weights()[i]).abs()
                })
                .sum();
            let r = residual.as_f64();
            trace.push(r);
            if !r.is_finite() {
                break;
            }
            if residual < tol {
                converged = true;
                iterations = it;
                break;
            }
            if r < best {
                best = r;
                stale = 0;
            } else {
                stale += 1;
                if stale >= PLATEAU_WINDOW {
                    break;
                }
            }
        }
        log_f = log_rho_mu.iter().zip(&pg).map(|(&r, &p)| r - p).collect();
        let pf = lse_rows(&kernel, &add(&log_f, &lm));
        log_g = log_rho_nu.iter().zip(&pf).map(|(&r, &p)| r - p).collect();
        iterations = it + 1;
    }
    if !converged {
        let last = trace.last().copied().unwrap_or(f64::NAN);
        return Err(Error::NotConverged { iterations, last, trace });
    }

    let two = S::lit(2.0);
    let int_f = log_sum_exp(log_f.iter().zip(&lm).map(|(&a, &b)| a + b));
    let int_g = log_sum_exp(log_g.iter().zip(&lm).map(|(&a, &b)| a + b));
    let shift = (int_g - int_f) / two;
    for v in &mut log_f {
        *v = *v + shift;
    }
    for v in &mut log_g {
        *v = *v - shift;
    }

    let (rows, cols) = plan_marginals(&kernel, &log_f, &log_g);
    let diagnostics = SolverDiagnostics {
        iterations,
        residual_mu: l1(&rows, mu.weights()).as_f64(),
        residual_nu: l1(&cols, nu.weights()).as_f64(),
        gauge_shift: shift.as_f64(),
        residual_trace: trace,
        kernel_under_resolved: kernel.under_resolved(),
    };
    Ok(SchroedingerPotentials {
        log_f,
        log_g,
        generator: generator.clone(),
        horizon: kernel.time(),
        mu: mu.clone(),
        nu: nu.clone(),
        kernel,
        diagnostics,
    })
}

/// `H(γ | R₀ᵀ) = Σ_ij γ_ij (ln f_i + ln g_j)`: the density of `γ` against
/// the reference coupling is exactly `f ⊗ g`.
pub fn schroedinger_cost<S: Scalar>(pot: &SchroedingerPotentials<S>) -> S {
    let (rows, cols) = pot.plan_marginals();
    let side = |mass: &[S], log: &[S]| -> S {
        mass.iter().zip(log).filter(|(&w, _)| w > S::zero()).map(|(&w, &l)| w * l).sum()
    };
    side(&rows, &pot.log_f) + side(&cols, &pot.log_g)
}

/// Optimal plan `γ_ij = f_i p_T(x_i, x_j) g_j m_i m_j`, evaluated on demand.
#[derive(Clone, Copy, Debug)]
pub struct EntropicPlan<'a, S> {
    pot: &'a SchroedingerPotentials<S>,
}

impl<'a, S: Scalar> EntropicPlan<'a, S> {
    /// Log-density of `γ` against `m ⊗ m`.
    pub fn log_density(&self, i: usize, j: usize) -> S {
        self.pot.log_f[i] + self.pot.kernel.log_entry(i, j) + self.pot.log_g[j]
    }

    pub fn weight(&self, i: usize, j: usize) -> S {
        let lm = self.pot.kernel.log_m_weights();
        nan_to_zero((self.log_density(i, j) + lm[i] + lm[j]).exp())
    }

    /// Row-major weights `γ_ij`; refuses more than [`MAX_PLAN_PAIRS`] entries.
    pub fn materialize(&self) -> Result<Vec<S>> {
        let n = self.pot.kernel.size();
        let pairs = n.saturating_mul(n);
        if pairs > MAX_PLAN_PAIRS {
            return Err(Error::PlanTooLarge { pairs, limit: MAX_PLAN_PAIRS });
        }
        let mut out = Vec::with_capacity(pairs);
        for i in 0..n {
            for j in 0..n {
                out.push(self.weight(i, j));
            }
        }
        Ok(out)
    }

    pub fn marginals(&self) -> (Vec<S>, Vec<S>) {
        self.pot.plan_marginals()
    }

    pub fn total_mass(&self) -> S {
        self.marginals().0.into_iter().sum()
    }
}

/// Lazy view of the optimal plan.
pub fn plan_density<S: Scalar>(pot: &SchroedingerPotentials<S>) -> EntropicPlan<'_, S> {
    EntropicPlan { pot }
}

/// Outcome of restricting the optimal plan to `B(0, R)²`.
#[derive(Clone, Debug, Serialize)]
pub struct RestrictionReport {
    pub radius: f64,
    pub mass_mu: f64,
    pub mass_nu: f64,
    /// `γ(B × B)`, the renormalization of the restricted plan.
    pub restricted_mass: f64,
    /// `Σ |γ_R - γ*|` against the freshly solved plan for the restricted marginals.
    pub plan_l1: f64,
    /// `|H(γ_R | R₀ᵀ) - Sch(μ_R, ν_R)|`.
    pub cost_gap: f64,
}

/// Restricts `γ` to `B(0, R)²`, renormalizes it to a probability, solves the
/// Schrödinger problem afresh between its marginals, and compares plans and
/// costs. Both balls must carry at least half of each marginal.
pub fn restriction_check<S: Scalar>(
    pot: &SchroedingerPotentials<S>,
    radius: S,
    opts: &SolverOptions,
) -> Result<RestrictionReport> {
    let mass_mu = pot.mu.ball_mass(radius);
    let mass_nu = pot.nu.ball_mass(radius);
    for mass in [mass_mu, mass_nu] {
        if mass < S::lit(0.5) {
            return Err(Error::MassCondition { radius: radius.as_f64(), mass: mass.as_f64(), required: 0.5 });
        }
    }
    let grid = *pot.generator.grid();
    let r2 = radius * radius;
    let inside: Vec<bool> = (0..grid.len()).map(|k| grid.norm_squared(k) <= r2).collect();
    if inside.iter().all(|&b| b) {
        return Ok(RestrictionReport {
            radius: radius.as_f64(),
            mass_mu: mass_mu.as_f64(),
            mass_nu: mass_nu.as_f64(),
            restricted_mass: 1.0,
            plan_l1: 0.0,
            cost_gap: 0.0,
        });
    }
    let mask = |log: &[S]| -> Vec<S> {
        log.iter().zip(&inside).map(|(&v, &b)| if b { v } else { S::neg_infinity() }).collect()
    };
    let mut log_f = mask(&pot.log_f);
    let log_g = mask(&pot.log_g);
    let (rows, _) = plan_marginals(&pot.kernel, &log_f, &log_g);
    let z: S = rows.iter().copied().sum();
    let log_z = z.ln();
    for v in &mut log_f {
        *v = *v - log_z;
    }
    let (rows, cols) = plan_marginals(&pot.kernel, &log_f, &log_g);
    let mu_r = GridMeasure::from_weights(grid, rows.clone())?;
    let nu_r = GridMeasure::from_weights(grid, cols.clone())?;
    let fresh = solve_with_kernel(&mu_r, &nu_r, &pot.generator, pot.kernel.clone(), opts)?;

    let restricted = SchroedingerPotentials { log_f: log_f.clone(), log_g: log_g.clone(), ..pot.clone() };
    let a = plan_density(&restricted);
    let b = plan_density(&fresh);
    let n = grid.len();
    let mut plan_l1 = S::zero();
    for i in 0..n {
        for j in 0..n {
            plan_l1 = plan_l1 + (a.weight(i, j) - b.weight(i, j)).abs();
        }
    }
    let h_restricted: S = rows
        .iter()
        .zip(&log_f)
        .filter(|(&w, _)| w > S::zero())
        .map(|(&w, &l)| w * l)
        .sum::<S>()
        + cols.iter().zip(&log_g).filter(|(&w, _)| w > S::zero()).map(|(&w, &l)| w * l).sum::<S>();
    let cost_gap = (h_restricted - schroedinger_cost(&fresh)).abs();
    Ok(RestrictionReport {
        radius: radius.as_f64(),
        mass_mu: mass_mu.as_f64(),
        mass_nu: mass_nu.as_f64(),
        restricted_mass: z.as_f64(),
        plan_l1: plan_l1.as_f64(),
        cost_gap: cost_gap.as_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::measures::MeasureSpec;

    fn grid() -> Grid<f64> {
        Grid::new(1, 8.0, 257).unwrap()
    }

    fn gauss(mean: f64, var: f64) -> GridMeasure<f64> {
        GridMeasure::from_spec(&MeasureSpec::gaussian_1d(mean, var), grid()).unwrap()
    }

    #[test]
    fn symmetric_pair_has_equal_potentials() {
        // The stopping rule bounds the residual in mass, so at the default
        // tolerance the potentials agree to ~1e-9 in the far tails only.
        let mu = gauss(0.0, 1.5);
        let opts = SolverOptions { tol: 1e-12, ..SolverOptions::default() };
        let pot = solve_schroedinger_system(&mu, &mu, &Generator::laplacian(grid()), 1.0, &opts).unwrap();
        let worst = pot.log_f().iter().zip(pot.log_g()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn stationary_ou_pair_has_constant_potentials_and_zero_cost() {
        let generator = Generator::ornstein_uhlenbeck(grid()).unwrap();
        let m = gauss(0.0, 1.0);
        for t in [0.5, 2.0] {
            let pot = solve_schroedinger_system(&m, &m, &generator, t, &SolverOptions::default()).unwrap();
            let spread = |v: &[f64]| {
                let (lo, hi) = v.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
                hi - lo
            };
            // log potentials are flat up to the grid-edge truncation of P_T
            let f_inner = &pot.log_f()[64..=192];
            assert!(spread(f_inner) < 1e-10, "{}", spread(f_inner));
            assert!(schroedinger_cost(&pot).abs() < 1e-9);
        }
    }

    #[test]
    fn plan_marginals_and_mass() {
        let pot = solve_schroedinger_system(
            &gauss(-1.0, 1.0),
            &gauss(1.0, 1.0),
            &Generator::laplacian(grid()),
            1.0,
            &SolverOptions::default(),
        )
        .unwrap();
        let plan = plan_density(&pot);
        let (rows, _) = plan.marginals();
        assert!(l1(&rows, pot.mu().weights()) < 1e-10);
        assert!((plan.total_mass() - 1.0).abs() < 1e-8);
        let dense = plan.materialize().unwrap();
        assert_eq!(dense.len(), 257 * 257);
        assert!(dense.iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn non_convergence_carries_the_trace() {
        let opts = SolverOptions { tol: 1e-14, max_iter: 3 };
        let err = solve_schroedinger_system(&gauss(-1.0, 1.0), &gauss(1.0, 1.0), &Generator::laplacian(grid()), 1.0, &opts)
            .unwrap_err();
        match err {
            Error::NotConverged { iterations, trace, .. } => {
                assert_eq!(iterations, 3);
                assert_eq!(trace.len(), 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn restriction_to_the_full_grid_is_exact() {
        let pot = solve_schroedinger_system(
            &gauss(-1.0, 1.0),
            &gauss(1.0, 1.0),
            &Generator::laplacian(grid()),
            1.0,
            &SolverOptions::default(),
        )
        .unwrap();
        let report = restriction_check(&pot, 100.0, &SolverOptions::default()).unwrap();
        assert_eq!(report.plan_l1, 0.0);
        assert_eq!(report.cost_gap, 0.0);
        assert!(matches!(
            restriction_check(&pot, 0.2, &SolverOptions::default()),
            Err(Error::MassCondition { .. })
        ));
    }
}
