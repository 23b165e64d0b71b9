use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::{Check, Harness};
use crate::interpolation::{dynamic_cost, velocity, MeasureCurve, DEFAULT_SAMPLES};
use crate::measures::VelocityField;
use crate::scalar::Scalar;
use crate::schroedinger::{schroedinger_cost, solve_schroedinger_system, SchroedingerPotentials, SolverOptions};
use crate::semigroup::Generator;

/// Relative errors divide by `max(|finite difference|, RELATIVE_ERROR_FLOOR)`,
/// so that critical points are judged on an absolute scale.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-3;
/// Accepted relative error for the static form.
pub const STATIC_TOLERANCE: f64 = 1e-2;
/// Accepted relative error for the dynamic form.
pub const DYNAMIC_TOLERANCE: f64 = 2e-2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DerivativeOptions {
    /// Central-difference step in `t`.
    pub step: f64,
    /// Combine steps `h` and `2h` as `(4 D_h - D_{2h}) / 3`. The curves must
    /// then also be sampled at `t ± 2h`.
    pub richardson: bool,
    pub samples: usize,
    pub solver: SolverOptions,
}

impl Default for DerivativeOptions {
    fn default() -> Self {
        Self { step: 1e-3, richardson: false, samples: DEFAULT_SAMPLES, solver: SolverOptions::default() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivativeRecord {
    pub t: f64,
    pub step: f64,
    pub sch: f64,
    pub cost: f64,
    /// `⟨μ̇_t, ∇ln f⟩_{L²(μ_t)} + ⟨ν̇_t, ∇ln g⟩_{L²(ν_t)}`.
    pub analytic_static: f64,
    /// `2 (⟨ν̇_t, v_T⟩_{L²(ν_t)} - ⟨μ̇_t, v_0⟩_{L²(μ_t)})`.
    pub analytic_dynamic: f64,
    pub finite_diff_sch: f64,
    pub finite_diff_cost: f64,
    pub rel_err_static: f64,
    pub rel_err_dynamic: f64,
}

impl Harness for DerivativeRecord {
    type Row = DerivativeRecord;

    fn rows(&self) -> Vec<DerivativeRecord> {
        vec![self.clone()]
    }

    fn checks(&self) -> Vec<Check> {
        vec![
            Check::at_most("rel_err_static", self.rel_err_static, STATIC_TOLERANCE),
            Check::at_most("rel_err_dynamic", self.rel_err_dynamic, DYNAMIC_TOLERANCE),
        ]
    }
}

fn sample_index<S: Scalar>(curve: &MeasureCurve<S>, t: S) -> Result<usize> {
    let tol = S::lit(1e-12) * (S::one() + t.abs());
    curve
        .times()
        .iter()
        .position(|&x| (x - t).abs() <= tol)
        .ok_or_else(|| Error::InvalidArgument(format!("curve is not sampled at t = {t}")))
}

fn relative(analytic: f64, fd: f64) -> f64 {
    (analytic - fd).abs() / fd.abs().max(RELATIVE_ERROR_FLOOR)
}

struct Evaluation<S> {
    pot: SchroedingerPotentials<S>,
    sch: f64,
    cost: f64,
}

fn evaluate<S: Scalar>(
    curve_mu: &MeasureCurve<S>,
    curve_nu: &MeasureCurve<S>,
    generator: &Generator<S>,
    horizon: S,
    t: S,
    opts: &DerivativeOptions,
) -> Result<Evaluation<S>> {
    let (i, j) = (sample_index(curve_mu, t)?, sample_index(curve_nu, t)?);
    let named = |e: Error| Error::AtTime { time: t.as_f64(), source: Box::new(e) };
    let pot = solve_schroedinger_system(curve_mu.measure(i), curve_nu.measure(j), generator, horizon, &opts.solver)
        .map_err(named)?;
    let sch = schroedinger_cost(&pot).as_f64();
    let cost = dynamic_cost(&pot, opts.samples).map_err(named)?.value;
    Ok(Evaluation { pot, sch, cost })
}

/// Compares `d/dt Sch_T(μ_t, ν_t)` and `d/dt C_T(μ_t, ν_t)`, by central
/// differences over three (or five) solves, with their analytic forms built
/// from the potentials at `t`.
pub fn derivative_check<S: Scalar>(
    curve_mu: &MeasureCurve<S>,
    curve_nu: &MeasureCurve<S>,
    generator: &Generator<S>,
    horizon: S,
    t: S,
    opts: &DerivativeOptions,
) -> Result<DerivativeRecord> {
    if !(opts.step > 0.0) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {}", opts.step)));
    }
    let h = S::lit(opts.step);
    let two = S::lit(2.0);
    let centre = evaluate(curve_mu, curve_nu, generator, horizon, t, opts)?;
    let diff = |step: S| -> Result<(f64, f64)> {
        let plus = evaluate(curve_mu, curve_nu, generator, horizon, t + step, opts)?;
        let minus = evaluate(curve_mu, curve_nu, generator, horizon, t - step, opts)?;
        let width = (two * step).as_f64();
        Ok(((plus.sch - minus.sch) / width, (plus.cost - minus.cost) / width))
    };
    let (mut fd_sch, mut fd_cost) = diff(h)?;
    if opts.richardson {
        let (wide_sch, wide_cost) = diff(two * h)?;
        fd_sch = (4.0 * fd_sch - wide_sch) / 3.0;
        fd_cost = (4.0 * fd_cost - wide_cost) / 3.0;
    }

    let pot = &centre.pot;
    let (mu, nu) = (pot.mu(), pot.nu());
    let mu_dot = curve_mu.velocity(sample_index(curve_mu, t)?);
    let nu_dot = curve_nu.velocity(sample_index(curve_nu, t)?);
    let grid = *mu.grid();
    let grad_f = VelocityField::gradient_of(grid, pot.log_f(), &mu.support());
    let grad_g = VelocityField::gradient_of(grid, pot.log_g(), &nu.support());
    let analytic_static = (mu_dot.inner(&grad_f, mu)? + nu_dot.inner(&grad_g, nu)?).as_f64();
    let v_start = velocity(pot, S::zero())?;
    let v_end = velocity(pot, pot.horizon())?;
    let analytic_dynamic = (two * (nu_dot.inner(&v_end, nu)? - mu_dot.inner(&v_start, mu)?)).as_f64();

    Ok(DerivativeRecord {
        t: t.as_f64(),
        step: opts.step,
        sch: centre.sch,
        cost: centre.cost,
        analytic_static,
        analytic_dynamic,
        finite_diff_sch: fd_sch,
        finite_diff_cost: fd_cost,
        rel_err_static: relative(analytic_static, fd_sch),
        rel_err_dynamic: relative(analytic_dynamic, fd_cost),
    })
}
