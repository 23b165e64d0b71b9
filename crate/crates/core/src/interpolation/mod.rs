//! Entropic interpolations `μ_s = P_s f · P_{T-s} g · m` between the
//! marginals of a solved Schrödinger system, their velocities
//! `v_s = ∇(ln P_{T-s} g - ln P_s f)`, the dynamic cost
//! `C_T = ∫₀ᵀ ‖v_s‖²_{L²(μ_s)} + 𝓘(μ_s) ds` and the identity
//! `Sch_T = C_T / 4 + (𝓕(μ) + 𝓕(ν)) / 2`.

mod curve;

pub use curve::{flow_map, flow_pushforward_check, CurveKind, MeasureCurve, PushforwardReport};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{self, GridMeasure, VelocityField};
use crate::numeric::{simpson, support_extent};
use crate::scalar::Scalar;
use crate::schroedinger::{schroedinger_cost, solve_schroedinger_system, SchroedingerPotentials, SolverOptions};
use crate::semigroup::{row_lse, Evolved, Generator, GeneratorKind, KernelMatrix, MASS_DEFECT_LIMIT};

/// Default number of time samples for the dynamic cost.
pub const DEFAULT_SAMPLES: usize = 65;
/// Fewest samples accepted by [`dynamic_cost`].
pub const MIN_SAMPLES: usize = 33;
/// Relative slack allowed by the convexity flag of [`entropy_profile`].
pub const CONVEXITY_TOLERANCE: f64 = 0.05;

/// `ln P_t exp(ψ)` at every node, identity at `t = 0`.
fn log_semigroup<S: Scalar>(pot: &SchroedingerPotentials<S>, t: S, log_phi: &[S]) -> Result<Vec<S>> {
    if t == S::zero() {
        return Ok(log_phi.to_vec());
    }
    if t == pot.horizon() {
        return Ok(apply_log_with(pot.kernel(), log_phi));
    }
    let kernel = pot.generator().kernel_matrix(t)?;
    Ok(apply_log_with(&kernel, log_phi))
}

fn apply_log_with<S: Scalar>(kernel: &KernelMatrix<S>, log_phi: &[S]) -> Vec<S> {
    let shifted: Vec<S> = log_phi.iter().zip(kernel.log_m_weights()).map(|(&a, &b)| a + b).collect();
    (0..kernel.size()).map(|i| row_lse(kernel.log_row(i), &shifted)).collect()
}

fn check_time<S: Scalar>(pot: &SchroedingerPotentials<S>, s: S) -> Result<()> {
    if !(s >= S::zero() && s <= pot.horizon()) {
        return Err(Error::InvalidArgument(format!("interpolation time {s} outside [0, {}]", pot.horizon())));
    }
    Ok(())
}

/// `(ln P_s f, ln P_{T-s} g)`.
fn log_factors<S: Scalar>(pot: &SchroedingerPotentials<S>, s: S) -> Result<(Vec<S>, Vec<S>)> {
    check_time(pot, s)?;
    let pf = log_semigroup(pot, s, pot.log_f())?;
    let pg = log_semigroup(pot, pot.horizon() - s, pot.log_g())?;
    Ok((pf, pg))
}

fn measure_from_factors<S: Scalar>(pot: &SchroedingerPotentials<S>, pf: &[S], pg: &[S]) -> Result<Evolved<S>> {
    let lm = pot.kernel().log_m_weights();
    let raw: Vec<S> = (0..lm.len())
        .map(|k| {
            let v = (pf[k] + pg[k] + lm[k]).exp();
            if v.is_nan() {
                S::zero()
            } else {
                v
            }
        })
        .collect();
    let mass: S = raw.iter().copied().sum();
    let defect = (S::one() - mass).abs();
    if defect > S::lit(MASS_DEFECT_LIMIT) {
        return Err(Error::MassEscaped { defect: defect.as_f64(), limit: MASS_DEFECT_LIMIT });
    }
    Ok(Evolved { measure: GridMeasure::from_weights(*pot.generator().grid(), raw)?, defect })
}

fn velocity_from_factors<S: Scalar>(mu_s: &GridMeasure<S>, pf: &[S], pg: &[S]) -> Result<VelocityField<S>> {
    let support = mu_s.support();
    for (axis, nodes) in support_extent(mu_s.grid(), &support).into_iter().enumerate() {
        if nodes < 3 {
            return Err(Error::ThinSupport { axis, nodes });
        }
    }
    let potential: Vec<S> = pg
        .iter()
        .zip(pf)
        .zip(&support)
        .map(|((&g, &f), &inside)| if inside { g - f } else { S::zero() })
        .collect();
    Ok(VelocityField::gradient_of(*mu_s.grid(), &potential, &support))
}

/// `μ_s` for `0 ≤ s ≤ T`, renormalized; `defect` is the mass discrepancy
/// before renormalization.
pub fn interpolate<S: Scalar>(pot: &SchroedingerPotentials<S>, s: S) -> Result<Evolved<S>> {
    let (pf, pg) = log_factors(pot, s)?;
    measure_from_factors(pot, &pf, &pg)
}

/// `v_s = ∇(ln P_{T-s} g - ln P_s f)` on the effective support of `μ_s`,
/// zero elsewhere.
pub fn velocity<S: Scalar>(pot: &SchroedingerPotentials<S>, s: S) -> Result<VelocityField<S>> {
    let (pf, pg) = log_factors(pot, s)?;
    let mu_s = measure_from_factors(pot, &pf, &pg)?.measure;
    velocity_from_factors(&mu_s, &pf, &pg)
}

/// One time sample of an entropic interpolation.
#[derive(Clone, Debug)]
pub struct PathSample<S> {
    pub s: S,
    pub measure: GridMeasure<S>,
    pub velocity: VelocityField<S>,
    pub defect: S,
    /// `𝓕(μ_s)`.
    pub entropy: S,
    /// `𝓘(μ_s)`.
    pub fisher: S,
    /// `‖v_s‖²_{L²(μ_s)}`.
    pub kinetic: S,
}

/// Entropic interpolation sampled at `S` equally spaced times.
#[derive(Clone, Debug)]
pub struct InterpolationPath<S> {
    pub potentials: SchroedingerPotentials<S>,
    pub samples: Vec<PathSample<S>>,
}

impl<S: Scalar> InterpolationPath<S> {
    /// Samples `s_k = k T / (count - 1)`. At the endpoints, entropy and
    /// Fisher information are those of the marginals themselves.
    pub fn new(pot: &SchroedingerPotentials<S>, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidArgument("a path needs at least two samples".into()));
        }
        let generator = pot.generator();
        let reference = generator.reference();
        let horizon = pot.horizon();
        let last = count - 1;
        let mut samples = Vec::with_capacity(count);
        for k in 0..count {
            let s = if k == last { horizon } else { horizon * S::from_usize_lossy(k) / S::from_usize_lossy(last) };
            let (pf, pg) = log_factors(pot, s)?;
            let Evolved { measure, defect } = measure_from_factors(pot, &pf, &pg)?;
            let velocity = velocity_from_factors(&measure, &pf, &pg)?;
            let kinetic = velocity.norm_squared(&measure)?;
            let endpoint = match k {
                0 => Some(pot.mu()),
                k if k == last => Some(pot.nu()),
                _ => None,
            };
            let own = endpoint.unwrap_or(&measure);
            let entropy = measures::relative_entropy(own, reference)?;
            let fisher = measures::fisher_info(own, reference)?;
            samples.push(PathSample { s, measure, velocity, defect, entropy, fisher, kinetic });
        }
        Ok(Self { potentials: pot.clone(), samples })
    }

    pub fn times(&self) -> Vec<S> {
        self.samples.iter().map(|p| p.s).collect()
    }

    pub fn step(&self) -> S {
        self.potentials.horizon() / S::from_usize_lossy(self.samples.len() - 1)
    }

    /// The path as a [`MeasureCurve`] for flow-map computations.
    pub fn to_curve(&self) -> Result<MeasureCurve<S>> {
        MeasureCurve::new(
            CurveKind::Custom,
            self.times(),
            self.samples.iter().map(|p| p.measure.clone()).collect(),
            self.samples.iter().map(|p| p.velocity.clone()).collect(),
        )
    }
}

/// Row of the per-sample integrand table.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PathRow {
    pub s: f64,
    pub entropy: f64,
    pub fisher: f64,
    pub kinetic: f64,
    pub integrand: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DynamicCost {
    /// `C_T`.
    pub value: f64,
    /// `∫₀ᵀ ‖v_s‖² ds` alone.
    pub kinetic: f64,
    pub samples: usize,
    pub table: Vec<PathRow>,
}

/// `C_T` by composite Simpson over `samples` (odd, ≥ 33) equally spaced
/// times on the entropic interpolation.
pub fn dynamic_cost<S: Scalar>(pot: &SchroedingerPotentials<S>, samples: usize) -> Result<DynamicCost> {
    if samples < MIN_SAMPLES || samples.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("sample count must be odd and at least {MIN_SAMPLES}, got {samples}")));
    }
    let path = InterpolationPath::new(pot, samples)?;
    dynamic_cost_of_path(&path)
}

/// [`dynamic_cost`] on an already sampled path.
pub fn dynamic_cost_of_path<S: Scalar>(path: &InterpolationPath<S>) -> Result<DynamicCost> {
    let step = path.step();
    let integrand: Vec<S> = path.samples.iter().map(|p| p.kinetic + p.fisher).collect();
    let kinetic: Vec<S> = path.samples.iter().map(|p| p.kinetic).collect();
    let value = simpson(&integrand, step)?;
    let kinetic_total = simpson(&kinetic, step)?;
    let table = path
        .samples
        .iter()
        .zip(&integrand)
        .map(|(p, &i)| PathRow {
            s: p.s.as_f64(),
            entropy: p.entropy.as_f64(),
            fisher: p.fisher.as_f64(),
            kinetic: p.kinetic.as_f64(),
            integrand: i.as_f64(),
        })
        .collect();
    Ok(DynamicCost { value: value.as_f64(), kinetic: kinetic_total.as_f64(), samples: path.samples.len(), table })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BbsOptions {
    pub solver: SolverOptions,
    pub samples: usize,
}

impl Default for BbsOptions {
    fn default() -> Self {
        Self { solver: SolverOptions::default(), samples: DEFAULT_SAMPLES }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BbsReport {
    pub horizon: f64,
    pub sch: f64,
    pub c_dynamic: f64,
    pub entropy_mu: f64,
    pub entropy_nu: f64,
    /// `Sch_T - C_T / 4 - (𝓕(μ) + 𝓕(ν)) / 2`.
    pub signed_residual: f64,
    pub residual: f64,
    /// Set when `T ≠ 1`: the identity is then an extension of the unit-time
    /// statement.
    pub extended_horizon: bool,
}

/// Both sides of `Sch_T = C_T / 4 + (𝓕(μ) + 𝓕(ν)) / 2` for a solved system.
pub fn bbs_from_potentials<S: Scalar>(pot: &SchroedingerPotentials<S>, samples: usize) -> Result<BbsReport> {
    let cost = dynamic_cost(pot, samples)?;
    let reference = pot.generator().reference();
    let sch = schroedinger_cost(pot).as_f64();
    let entropy_mu = measures::relative_entropy(pot.mu(), reference)?.as_f64();
    let entropy_nu = measures::relative_entropy(pot.nu(), reference)?.as_f64();
    let signed = sch - cost.value / 4.0 - (entropy_mu + entropy_nu) / 2.0;
    Ok(BbsReport {
        horizon: pot.horizon().as_f64(),
        sch,
        c_dynamic: cost.value,
        entropy_mu,
        entropy_nu,
        signed_residual: signed,
        residual: signed.abs(),
        extended_horizon: pot.horizon() != S::one(),
    })
}

/// Solves the system for `(μ, ν)` and evaluates the identity residual.
pub fn bbs_residual<S: Scalar>(
    mu: &GridMeasure<S>,
    nu: &GridMeasure<S>,
    generator: &Generator<S>,
    horizon: S,
    opts: &BbsOptions,
) -> Result<BbsReport> {
    let pot = solve_schroedinger_system(mu, nu, generator, horizon, &opts.solver)?;
    bbs_from_potentials(&pot, opts.samples)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProfileRow {
    pub s: f64,
    pub entropy: f64,
    pub fisher: f64,
    /// Central first difference of `𝓕(μ_s)`; `None` at the endpoints.
    pub first_difference: Option<f64>,
    pub second_difference: Option<f64>,
    /// `second ≥ first² + 𝓘² - tol`, with `tol` relative to the right-hand
    /// side. Only evaluated for the 1D Laplacian.
    pub convex: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyProfile {
    pub rows: Vec<ProfileRow>,
    /// Second-order one-sided difference of `s ↦ 𝓕(μ_s)` at `s = 0`.
    pub initial_slope: f64,
    /// `⟨∇ ln(dμ/dm), v₀⟩_{L²(μ)}`, the chain-rule prediction of the slope.
    pub initial_slope_chain_rule: f64,
}

impl EntropyProfile {
    pub fn all_convex(&self) -> bool {
        self.rows.iter().all(|r| r.convex != Some(false))
    }
}

/// Entropy along the interpolation with first and second central
/// differences. On the 1D Laplacian each interior sample is flagged against
/// `d²𝓕 ≥ (d𝓕)² + 𝓘²`, the curvature-dimension `CD(0, 1)` consequence of the
/// Newton equation.
pub fn entropy_profile<S: Scalar>(pot: &SchroedingerPotentials<S>, samples: usize) -> Result<EntropyProfile> {
    let generator = pot.generator();
    generator.grid().ensure_one_dimensional("entropy profiles")?;
    if samples < 3 {
        return Err(Error::InvalidArgument("entropy profile needs at least three samples".into()));
    }
    let check_convexity = generator.kind() == GeneratorKind::Laplacian { dimension: 1 };
    let path = InterpolationPath::new(pot, samples)?;
    let step = path.step().as_f64();
    let f: Vec<f64> = path.samples.iter().map(|p| p.entropy.as_f64()).collect();
    let n = f.len();
    let rows = path
        .samples
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let fisher = p.fisher.as_f64();
            let interior = k > 0 && k + 1 < n;
            let first = interior.then(|| (f[k + 1] - f[k - 1]) / (2.0 * step));
            let second = interior.then(|| (f[k + 1] - 2.0 * f[k] + f[k - 1]) / (step * step));
            let convex = match (first, second) {
                (Some(d1), Some(d2)) if check_convexity => {
                    let rhs = d1 * d1 + fisher * fisher;
                    Some(d2 >= rhs - CONVEXITY_TOLERANCE * rhs.abs())
                }
                _ => None,
            };
            ProfileRow {
                s: p.s.as_f64(),
                entropy: f[k],
                fisher,
                first_difference: first,
                second_difference: second,
                convex,
            }
        })
        .collect();
    let initial_slope = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * step);
    let mu = pot.mu();
    let log_ratio = generator.reference().log_relative_density(mu)?;
    let gradient = VelocityField::gradient_of(*mu.grid(), &log_ratio, &mu.support());
    let chain = gradient.inner(&path.samples[0].velocity, mu)?.as_f64();
    Ok(EntropyProfile { rows, initial_slope, initial_slope_chain_rule: chain })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::measures::{wasserstein_1d, MeasureSpec};

    fn grid() -> Grid<f64> {
        Grid::new(1, 8.0, 257).unwrap()
    }

    fn gauss(mean: f64, var: f64) -> GridMeasure<f64> {
        GridMeasure::from_spec(&MeasureSpec::gaussian_1d(mean, var), grid()).unwrap()
    }

    fn pair() -> SchroedingerPotentials<f64> {
        solve_schroedinger_system(&gauss(-1.0, 1.0), &gauss(1.0, 1.0), &Generator::laplacian(grid()), 1.0, &SolverOptions::default())
            .unwrap()
    }

    #[test]
    fn endpoints_reproduce_the_marginals() {
        let pot = pair();
        let start = interpolate(&pot, 0.0).unwrap().measure;
        let end = interpolate(&pot, 1.0).unwrap().measure;
        assert!(start.l1_distance(pot.mu()).unwrap() < 1e-10);
        assert!(end.l1_distance(pot.nu()).unwrap() < 1e-10);
        assert!(interpolate(&pot, 1.5).is_err());
    }

    #[test]
    fn midpoint_velocity_of_a_symmetric_pair_is_odd() {
        let mu = gauss(0.0, 1.0);
        let pot =
            solve_schroedinger_system(&mu, &mu, &Generator::laplacian(grid()), 1.0, &SolverOptions::default()).unwrap();
        let v = velocity(&pot, 0.5).unwrap();
        let c = v.component(0);
        let n = c.len();
        let worst = (0..n).map(|i| (c[i] + c[n - 1 - i]).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn mean_moves_with_the_velocity() {
        let pot = pair();
        let ds = 1e-3;
        let x: Vec<f64> = grid().axis_points();
        let m = |s: f64| interpolate(&pot, s).unwrap().measure.integrate(&x);
        let rate = (m(0.4 + ds) - m(0.4 - ds)) / (2.0 * ds);
        let mu = interpolate(&pot, 0.4).unwrap().measure;
        let flux = mu.integrate(velocity(&pot, 0.4).unwrap().component(0));
        assert!((rate - flux).abs() < 1e-3, "{rate} vs {flux}");
    }

    #[test]
    fn dynamic_cost_rejects_bad_sample_counts() {
        let pot = pair();
        assert!(dynamic_cost(&pot, 64).is_err());
        assert!(dynamic_cost(&pot, 31).is_err());
    }

    #[test]
    fn kinetic_part_dominates_the_transport_cost() {
        let pot = pair();
        let cost = dynamic_cost(&pot, 33).unwrap();
        let w2 = wasserstein_1d(pot.mu(), pot.nu()).unwrap();
        assert!(cost.kinetic >= w2 * w2 - 1e-2, "{} vs {}", cost.kinetic, w2 * w2);
        assert!(cost.value >= -1e-12);
    }

    #[test]
    fn stationary_ou_path_is_constant() {
        let generator = Generator::ornstein_uhlenbeck(grid()).unwrap();
        let m = gauss(0.0, 1.0);
        let pot = solve_schroedinger_system(&m, &m, &generator, 1.0, &SolverOptions::default()).unwrap();
        let mid = interpolate(&pot, 0.3).unwrap().measure;
        assert!(mid.l1_distance(&m).unwrap() < 1e-9);
        let cost = dynamic_cost(&pot, 33).unwrap();
        assert!(cost.value.abs() < 1e-8, "{}", cost.value);
        let report = bbs_from_potentials(&pot, 33).unwrap();
        assert!(report.residual < 1e-8);
        assert!(!report.extended_horizon);
        let profile = entropy_profile(&pot, 33).unwrap();
        for row in &profile.rows {
            if let (Some(a), Some(b)) = (row.first_difference, row.second_difference) {
                assert!(a.abs() < 1e-8 && b.abs() < 1e-6, "{a} {b}");
            }
            assert!(row.convex.is_none());
        }
    }
}
