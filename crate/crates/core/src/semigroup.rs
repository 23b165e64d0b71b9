//! Heat kernels and the semigroup actions `P_t`, `P_t*` for the Laplacian on
//! ℝ¹/ℝ² and the 1D Ornstein-Uhlenbeck generator.
//!
//! Both generators are written `L = Δ - ⟨∇W, ∇⟩`: the Laplacian kernel is
//! `(4πt)^{-d/2} exp(-|x-y|²/4t)` against Lebesgue measure and the
//! Ornstein-Uhlenbeck kernel (`W = x²/2`) is the Mehler kernel against
//! `m = N(0, 1)`. Kernels are dense matrices stored as logarithms.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::interpolation::{CurveKind, MeasureCurve};
use crate::measures::{self, GridMeasure, ReferenceMeasure, VelocityField};
use crate::numeric::log_sum_exp;
use crate::scalar::Scalar;

/// Largest tolerated mass loss when pushing a measure through `P_t*`.
pub const MASS_DEFECT_LIMIT: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeneratorKind {
    Laplacian { dimension: usize },
    OrnsteinUhlenbeck,
}

/// Diffusion generator together with its reversible measure and
/// curvature-dimension constants `CD(ρ, n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator<S> {
    kind: GeneratorKind,
    reference: ReferenceMeasure<S>,
    cd_rho: S,
    /// `None` stands for `n = ∞`.
    cd_n: Option<S>,
}

impl<S: Scalar> Generator<S> {
    /// `L = Δ` on the grid's ℝ^d; `m` = Lebesgue, `CD(0, d)`.
    pub fn laplacian(grid: Grid<S>) -> Self {
        Self {
            kind: GeneratorKind::Laplacian { dimension: grid.dimension() },
            reference: ReferenceMeasure::lebesgue(grid),
            cd_rho: S::zero(),
            cd_n: Some(S::from_usize_lossy(grid.dimension())),
        }
    }

    /// `L = Δ - x·∇` on ℝ; `m = N(0, 1)`, `CD(1, ∞)`.
    pub fn ornstein_uhlenbeck(grid: Grid<S>) -> Result<Self> {
        grid.ensure_one_dimensional("the Ornstein-Uhlenbeck generator")?;
        Ok(Self {
            kind: GeneratorKind::OrnsteinUhlenbeck,
            reference: ReferenceMeasure::gaussian(grid, S::zero(), S::one())?,
            cd_rho: S::one(),
            cd_n: None,
        })
    }

    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    pub fn grid(&self) -> &Grid<S> {
        self.reference.grid()
    }

    pub fn reference(&self) -> &ReferenceMeasure<S> {
        &self.reference
    }

    pub fn cd_rho(&self) -> S {
        self.cd_rho
    }

    pub fn cd_dimension(&self) -> Option<S> {
        self.cd_n
    }

    /// Standard deviation per axis of the transition law after time `t`.
    pub fn kernel_width(&self, t: S) -> S {
        match self.kind {
            GeneratorKind::Laplacian { .. } => (S::lit(2.0) * t).sqrt(),
            GeneratorKind::OrnsteinUhlenbeck => (S::one() - (S::lit(-2.0) * t).exp()).sqrt(),
        }
    }

    /// Whether the kernel at time `t` spans at least two grid cells.
    pub fn resolves(&self, t: S) -> bool {
        self.kernel_width(t) >= S::lit(2.0) * self.grid().spacing()
    }

    pub fn kernel_matrix(&self, t: S) -> Result<KernelMatrix<S>> {
        KernelMatrix::new(self, t)
    }
}

/// `p_t(x_i, x_j)` for every node pair, as a density against `m`, in log form.
#[derive(Clone, Debug)]
pub struct KernelMatrix<S> {
    time: S,
    grid: Grid<S>,
    log_entries: Vec<S>,
    log_m_weights: Vec<S>,
    under_resolved: bool,
}

impl<S: Scalar> KernelMatrix<S> {
    pub fn new(generator: &Generator<S>, t: S) -> Result<Self> {
        if !(t > S::zero()) || !t.is_finite() {
            return Err(Error::InvalidTime(t.as_f64()));
        }
        let grid = *generator.grid();
        let n = grid.len();
        let mut log_entries = vec![S::zero(); n * n];
        let two = S::lit(2.0);
        match generator.kind() {
            GeneratorKind::Laplacian { dimension } => {
                let h = grid.spacing();
                let four_t = S::lit(4.0) * t;
                let offsets: Vec<S> = (0..grid.points())
                    .map(|d| (S::from_usize_lossy(d) * h).powi(2) / four_t)
                    .collect();
                let log_norm = -S::from_usize_lossy(dimension) / two * (S::PI() * four_t).ln();
                for i in 0..n {
                    for j in i..n {
                        let mut e = log_norm;
                        for a in 0..dimension {
                            let (ia, ja) = (grid.axis_index(i, a), grid.axis_index(j, a));
                            e = e - offsets[ia.abs_diff(ja)];
                        }
                        log_entries[i * n + j] = e;
                        log_entries[j * n + i] = e;
                    }
                }
            }
            GeneratorKind::OrnsteinUhlenbeck => {
                let xs = grid.axis_points();
                let r = (-t).exp();
                let r2 = r * r;
                let q = S::one() - r2;
                let log_norm = -q.ln() / two;
                for i in 0..n {
                    for j in i..n {
                        let (x, y) = (xs[i], xs[j]);
                        let e = log_norm - (r2 * (x * x + y * y) - two * r * x * y) / (two * q);
                        log_entries[i * n + j] = e;
                        log_entries[j * n + i] = e;
                    }
                }
            }
        }
        Ok(Self {
            time: t,
            grid,
            log_entries,
            log_m_weights: generator.reference().log_weights(),
            under_resolved: !generator.resolves(t),
        })
    }

    pub fn time(&self) -> S {
        self.time
    }

    pub fn grid(&self) -> &Grid<S> {
        &self.grid
    }

    /// Set when the kernel is narrower than two grid cells.
    pub fn under_resolved(&self) -> bool {
        self.under_resolved
    }

    pub fn size(&self) -> usize {
        self.grid.len()
    }

    pub fn log_entry(&self, i: usize, j: usize) -> S {
        self.log_entries[i * self.size() + j]
    }

    pub fn entry(&self, i: usize, j: usize) -> S {
        self.log_entry(i, j).exp()
    }

    pub fn log_row(&self, i: usize) -> &[S] {
        let n = self.size();
        &self.log_entries[i * n..(i + 1) * n]
    }

    /// `ln(m_j h^d)`.
    pub fn log_m_weights(&self) -> &[S] {
        &self.log_m_weights
    }

    /// `Σ_j p_t(x_i, x_j) m_j h^d`; equals one up to grid truncation.
    pub fn row_mass(&self, i: usize) -> S {
        log_sum_exp(self.log_row(i).iter().zip(&self.log_m_weights).map(|(&k, &m)| k + m)).exp()
    }

    /// `(P_t φ)_i = Σ_j p_t(x_i, x_j) φ_j m_j`.
    pub fn apply(&self, phi: &[S]) -> Result<Vec<S>> {
        check_finite(phi)?;
        let weighted: Vec<S> = phi.iter().zip(&self.log_m_weights).map(|(&f, &m)| f * m.exp()).collect();
        Ok((0..self.size())
            .map(|i| self.log_row(i).iter().zip(&weighted).map(|(&k, &f)| k.exp() * f).sum())
            .collect())
    }

    /// `ln P_t exp(ψ)` by row-wise log-sum-exp. Entries of `ψ` may be `-inf`.
    pub fn apply_log(&self, log_phi: &[S]) -> Result<Vec<S>> {
        if let Some(k) = log_phi.iter().position(|v| v.is_nan() || *v == S::infinity()) {
            return Err(Error::NonFinite(k));
        }
        let shifted: Vec<S> = log_phi.iter().zip(&self.log_m_weights).map(|(&f, &m)| f + m).collect();
        Ok((0..self.size()).map(|i| row_lse(self.log_row(i), &shifted)).collect())
    }

    /// Unnormalized weights of `P_t* μ`: `w'_j = m_j Σ_i w_i p_t(x_i, x_j)`.
    pub fn adjoint_raw(&self, weights: &[S]) -> Vec<S> {
        let n = self.size();
        let mut out = vec![S::zero(); n];
        for (i, &w) in weights.iter().enumerate() {
            if w == S::zero() {
                continue;
            }
            for (o, &k) in out.iter_mut().zip(self.log_row(i)) {
                *o = *o + w * k.exp();
            }
        }
        for (o, &m) in out.iter_mut().zip(&self.log_m_weights) {
            *o = *o * m.exp();
        }
        out
    }
}

/// `ln Σ_j exp(a_j + b_j)` with the running maximum subtracted.
pub(crate) fn row_lse<S: Scalar>(a: &[S], b: &[S]) -> S {
    let mut max = S::neg_infinity();
    for (&x, &y) in a.iter().zip(b) {
        let v = x + y;
        if v > max {
            max = v;
        }
    }
    if max == S::neg_infinity() {
        return max;
    }
    let mut sum = S::zero();
    for (&x, &y) in a.iter().zip(b) {
        let v = x + y;
        if v > S::neg_infinity() {
            sum = sum + (v - max).exp();
        }
    }
    max + sum.ln()
}

fn check_finite<S: Scalar>(values: &[S]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(k) => Err(Error::NonFinite(k)),
        None => Ok(()),
    }
}

/// `P_t φ`; the identity for `t = 0`.
pub fn apply_pt<S: Scalar>(generator: &Generator<S>, t: S, phi: &[S]) -> Result<Vec<S>> {
    check_finite(phi)?;
    if t == S::zero() {
        return Ok(phi.to_vec());
    }
    generator.kernel_matrix(t)?.apply(phi)
}

/// `ln P_t exp(ψ)`; the identity for `t = 0`.
pub fn apply_pt_log<S: Scalar>(generator: &Generator<S>, t: S, log_phi: &[S]) -> Result<Vec<S>> {
    if t == S::zero() {
        if let Some(k) = log_phi.iter().position(|v| v.is_nan() || *v == S::infinity()) {
            return Err(Error::NonFinite(k));
        }
        return Ok(log_phi.to_vec());
    }
    generator.kernel_matrix(t)?.apply_log(log_phi)
}

/// Measure pushed through the dual semigroup, with the mass it lost to grid
/// truncation before renormalization.
#[derive(Clone, Debug)]
pub struct Evolved<S> {
    pub measure: GridMeasure<S>,
    pub defect: S,
}

/// `P_t* μ`, renormalized. Fails when more than [`MASS_DEFECT_LIMIT`] of the
/// mass leaves the grid.
pub fn apply_pt_star<S: Scalar>(generator: &Generator<S>, t: S, mu: &GridMeasure<S>) -> Result<Evolved<S>> {
    generator.grid().ensure_same(mu.grid())?;
    if t < S::zero() {
        return Err(Error::InvalidTime(t.as_f64()));
    }
    if t == S::zero() {
        return Ok(Evolved { measure: mu.clone(), defect: S::zero() });
    }
    let kernel = generator.kernel_matrix(t)?;
    evolve_with(&kernel, mu)
}

pub(crate) fn evolve_with<S: Scalar>(kernel: &KernelMatrix<S>, mu: &GridMeasure<S>) -> Result<Evolved<S>> {
    let raw = kernel.adjoint_raw(mu.weights());
    let mass: S = raw.iter().copied().sum();
    let defect = (S::one() - mass).abs();
    if defect > S::lit(MASS_DEFECT_LIMIT) {
        return Err(Error::MassEscaped { defect: defect.as_f64(), limit: MASS_DEFECT_LIMIT });
    }
    Ok(Evolved { measure: GridMeasure::from_weights(*mu.grid(), raw)?, defect })
}

/// `𝓕(μ) = H(μ | m)` for the generator's reversible measure.
pub fn entropy_f<S: Scalar>(mu: &GridMeasure<S>, generator: &Generator<S>) -> Result<S> {
    measures::relative_entropy(mu, generator.reference())
}

/// [`measures::admissible`] against the generator's reversible measure.
pub fn admissible<S: Scalar>(mu: &GridMeasure<S>, generator: &Generator<S>) -> bool {
    measures::admissible(mu, generator.reference())
}

/// `-∇ ln(dμ/dm)` on μ's support: the gradient-flow velocity of `𝓕`.
pub fn entropy_gradient_flow_velocity<S: Scalar>(
    mu: &GridMeasure<S>,
    generator: &Generator<S>,
) -> Result<VelocityField<S>> {
    let log_ratio = generator.reference().log_relative_density(mu)?;
    let grad = VelocityField::gradient_of(*mu.grid(), &log_ratio, &mu.support());
    grad.combine(-S::one(), &VelocityField::zeros(*mu.grid()), S::zero())
}

/// Heat-flow curve `t ↦ P_t* μ₀` sampled at increasing `times`, with
/// velocities `-∇ ln(dμ_t/dm)`.
pub fn heat_flow_curve<S: Scalar>(
    generator: &Generator<S>,
    mu0: &GridMeasure<S>,
    times: &[S],
) -> Result<MeasureCurve<S>> {
    if times.is_empty() || times[0] < S::zero() || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("times must be nonnegative and strictly increasing".into()));
    }
    let mut measures = Vec::with_capacity(times.len());
    let mut velocities = Vec::with_capacity(times.len());
    for &t in times {
        let mu_t = apply_pt_star(generator, t, mu0)?.measure;
        velocities.push(entropy_gradient_flow_velocity(&mu_t, generator)?);
        measures.push(mu_t);
    }
    MeasureCurve::new(CurveKind::HeatFlow, times.to_vec(), measures, velocities)
}
