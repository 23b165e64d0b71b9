//! One runner per subcommand. Each returns the checks it asserted so that
//! `main` can map the outcome onto the exit-code contract.

use std::io;

use schrodinger_lab::experiments::{
    continuity_sweep, contraction_check, derivative_check, talagrand_check, Check, DerivativeOptions, Harness,
};
use schrodinger_lab::interpolation::{
    bbs_from_potentials, dynamic_cost, entropy_profile, interpolate, InterpolationPath, MeasureCurve,
};
use schrodinger_lab::schroedinger::{schroedinger_cost, solve_schroedinger_system, SolverDiagnostics};
use schrodinger_lab::{io as lab_io, semigroup, Error, GridMeasure64, MeasureCurve64, MeasureSpec64, VelocityField64};
use serde::Serialize;

use crate::config::{CurveConfig, HarnessConfig, Setup};
use crate::output::OutputDir;

/// Why a command did not exit 0.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Solver(String),
    Tolerance(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Tolerance(_) => 4,
        }
    }

    pub fn message(&self) -> String {
        match self {
            Failure::Config(m) => format!("config error: {m}"),
            Failure::Solver(m) => format!("solver failure: {m}"),
            Failure::Tolerance(m) => format!("tolerance violated: {m}"),
        }
    }
}

/// Name of the tolerance a numerical error reports on, if it is one.
fn tolerance_name(e: &Error) -> Option<&'static str> {
    match e {
        Error::MassEscaped { .. } => Some("mass_defect_limit"),
        Error::NotAdmissible { .. } => Some("boundary_mass_limit"),
        Error::MassCondition { .. } => Some("ball_mass_condition"),
        _ => None,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let root = e.root();
        if let Some(name) = tolerance_name(root) {
            return Failure::Tolerance(format!("{name}: {e}"));
        }
        match root {
            Error::InvalidGrid(_)
            | Error::GridMismatch
            | Error::Unsupported(_)
            | Error::TailMass { .. }
            | Error::NegativeDensity { .. }
            | Error::Table(_)
            | Error::InvalidTime(_)
            | Error::InvalidArgument(_) => Failure::Config(e.to_string()),
            _ => Failure::Solver(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Solver(format!("writing outputs: {e}"))
    }
}

#[derive(Serialize)]
struct CostSummary {
    horizon: f64,
    sch: f64,
    c_dynamic: f64,
    entropy_mu: f64,
    entropy_nu: f64,
    bbs_residual: f64,
    bbs_signed_residual: f64,
    extended_horizon: bool,
    samples: usize,
    diagnostics: SolverDiagnostics,
}

#[derive(Serialize)]
struct HarnessSummary<'a, R: Serialize> {
    harness: &'static str,
    passed: bool,
    checks: &'a [Check],
    report: &'a R,
}

#[derive(Serialize)]
struct InterpolateRow {
    s: f64,
    entropy: f64,
    fisher: f64,
    kinetic: f64,
    integrand: f64,
    first_difference: Option<f64>,
    second_difference: Option<f64>,
    convex: Option<bool>,
}

#[derive(Serialize)]
struct InterpolateSummary {
    horizon: f64,
    samples: usize,
    c_dynamic: f64,
    kinetic: f64,
    initial_slope: Option<f64>,
    initial_slope_chain_rule: Option<f64>,
    all_convex: Option<bool>,
    measure_files: Vec<String>,
}

/// Runs the configured command, writing into `out`. Returns the checks that
/// were asserted (empty for `cost` and `interpolate`).
pub fn run(setup: &Setup, out: &mut OutputDir) -> Result<Vec<Check>, Failure> {
    match &setup.harness {
        HarnessConfig::Cost { dump_potentials, dump_plan } => cost(setup, *dump_potentials, *dump_plan, out),
        HarnessConfig::Interpolate { dump_measures } => interpolation(setup, *dump_measures, out),
        HarnessConfig::Derivative { curve_mu, curve_nu, t, step, richardson } => {
            let mut times = vec![t - step, *t, t + step];
            if *richardson {
                times = vec![t - 2.0 * step, t - step, *t, t + step, t + 2.0 * step];
            }
            let cm = curve(setup, &setup.mu, &setup.mu_spec, *curve_mu, &times)?;
            let cn = curve(setup, &setup.nu, &setup.nu_spec, *curve_nu, &times)?;
            let opts =
                DerivativeOptions { step: *step, richardson: *richardson, samples: setup.samples, solver: setup.solver };
            let record = derivative_check(&cm, &cn, &setup.generator, setup.horizon, *t, &opts)?;
            emit("derivative", &record, out)
        }
        HarnessConfig::Continuity { radii } => {
            let sweep = continuity_sweep(
                &setup.mu,
                &setup.nu,
                &setup.generator,
                setup.horizon,
                radii,
                &setup.solver,
                setup.samples,
            )?;
            emit("continuity", &sweep, out)
        }
        HarnessConfig::Contraction { times } => {
            let report = contraction_check(&setup.mu, &setup.nu, setup.horizon, times, &setup.solver, setup.samples)?;
            emit("contraction", &report, out)
        }
        HarnessConfig::Talagrand { branch, horizons } => {
            let report = talagrand_check(
                &setup.mu,
                &setup.nu,
                &setup.generator,
                *branch,
                horizons,
                &setup.solver,
                setup.samples,
            )?;
            emit("talagrand", &report, out)
        }
    }
}

fn emit<H: Harness + Serialize>(name: &'static str, harness: &H, out: &mut OutputDir) -> Result<Vec<Check>, Failure> {
    let checks = harness.checks();
    out.write_with(&format!("{name}.csv"), |buf| lab_io::write_rows(buf, &harness.rows()))?;
    let summary = HarnessSummary { harness: name, passed: checks.iter().all(|c| c.passed), checks: &checks, report: harness };
    out.write_json(&format!("{name}.json"), &summary)?;
    Ok(checks)
}

fn cost(setup: &Setup, dump_potentials: bool, dump_plan: bool, out: &mut OutputDir) -> Result<Vec<Check>, Failure> {
    let pot = solve_schroedinger_system(&setup.mu, &setup.nu, &setup.generator, setup.horizon, &setup.solver)?;
    let bbs = bbs_from_potentials(&pot, setup.samples)?;
    debug_assert_eq!(bbs.sch, schroedinger_cost(&pot));
    let summary = CostSummary {
        horizon: bbs.horizon,
        sch: bbs.sch,
        c_dynamic: bbs.c_dynamic,
        entropy_mu: bbs.entropy_mu,
        entropy_nu: bbs.entropy_nu,
        bbs_residual: bbs.residual,
        bbs_signed_residual: bbs.signed_residual,
        extended_horizon: bbs.extended_horizon,
        samples: setup.samples,
        diagnostics: pot.diagnostics().clone(),
    };
    out.write_json("cost.json", &summary)?;
    if dump_potentials {
        out.write_with("potentials.csv", |buf| lab_io::write_potentials(buf, &pot))?;
    }
    if dump_plan {
        out.write_with("plan.csv", |buf| lab_io::write_plan(buf, &pot))?;
    }
    Ok(Vec::new())
}

fn interpolation(setup: &Setup, dump_measures: bool, out: &mut OutputDir) -> Result<Vec<Check>, Failure> {
    let pot = solve_schroedinger_system(&setup.mu, &setup.nu, &setup.generator, setup.horizon, &setup.solver)?;
    let cost = dynamic_cost(&pot, setup.samples)?;
    let profile = if setup.grid.dimension() == 1 { Some(entropy_profile(&pot, setup.samples)?) } else { None };
    let rows: Vec<InterpolateRow> = cost
        .table
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let p = profile.as_ref().map(|p| p.rows[k]);
            InterpolateRow {
                s: r.s,
                entropy: r.entropy,
                fisher: r.fisher,
                kinetic: r.kinetic,
                integrand: r.integrand,
                first_difference: p.and_then(|p| p.first_difference),
                second_difference: p.and_then(|p| p.second_difference),
                convex: p.and_then(|p| p.convex),
            }
        })
        .collect();
    out.write_with("path.csv", |buf| lab_io::write_rows(buf, &rows))?;

    let mut measure_files = Vec::new();
    if dump_measures {
        let path = InterpolationPath::new(&pot, setup.samples)?;
        for (k, sample) in path.samples.iter().enumerate() {
            let name = format!("measure_{k:03}.csv");
            out.write_with(&name, |buf| lab_io::write_density(buf, &sample.measure))?;
            measure_files.push(name);
        }
    }
    // The endpoint reconstruction doubles as a sanity check on the kernel.
    interpolate(&pot, pot.horizon())?;

    let summary = InterpolateSummary {
        horizon: setup.horizon,
        samples: cost.samples,
        c_dynamic: cost.value,
        kinetic: cost.kinetic,
        initial_slope: profile.as_ref().map(|p| p.initial_slope),
        initial_slope_chain_rule: profile.as_ref().map(|p| p.initial_slope_chain_rule),
        all_convex: profile.as_ref().filter(|_| rows.iter().any(|r| r.convex.is_some())).map(|p| p.all_convex()),
        measure_files,
    };
    out.write_json("interpolate.json", &summary)?;
    Ok(Vec::new())
}

fn curve(
    setup: &Setup,
    marginal: &GridMeasure64,
    spec: &MeasureSpec64,
    config: CurveConfig,
    times: &[f64],
) -> Result<MeasureCurve64, Failure> {
    let gaussian = || match spec {
        MeasureSpec64::Gaussian { mean, variance } if mean.len() == 1 => Ok((mean[0], *variance)),
        _ => Err(Failure::Config("translation and dilation curves need a 1D Gaussian marginal".into())),
    };
    Ok(match config {
        CurveConfig::HeatFlow => semigroup::heat_flow_curve(&setup.generator, marginal, times)?,
        CurveConfig::Translation { speed } => {
            let (m, v) = gaussian()?;
            MeasureCurve::translation(setup.grid, m, v, speed, times)?
        }
        CurveConfig::Dilation { rate } => {
            let (m, v) = gaussian()?;
            MeasureCurve::dilation(setup.grid, m, v, rate, times)?
        }
        CurveConfig::Fixed => MeasureCurve::new(
            schrodinger_lab::interpolation::CurveKind::Custom,
            times.to_vec(),
            vec![marginal.clone(); times.len()],
            vec![VelocityField64::zeros(setup.grid); times.len()],
        )?,
    })
}
