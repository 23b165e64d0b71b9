//! Experiment configuration: JSON with a versioned `schema` field. Unknown
//! keys are rejected; `config.schema.json` in this crate describes the same
//! format for external tooling.

use std::path::{Path, PathBuf};

use schrodinger_lab::experiments::TalagrandBranch;
use schrodinger_lab::interpolation::{DEFAULT_SAMPLES, MIN_SAMPLES};
use schrodinger_lab::schroedinger::SolverOptions;
use schrodinger_lab::{io, semigroup, Generator64, Grid64, GridMeasure64, MeasureSpec64, MixtureComponent};
use serde::Deserialize;

pub const SCHEMA_VERSION: &str = "schrodinger-lab/config/v1";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema: String,
    pub grid: GridConfig,
    pub generator: GeneratorConfig,
    pub mu: MarginalConfig,
    pub nu: MarginalConfig,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub harness: HarnessConfig,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_horizon() -> f64 {
    1.0
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dimension: usize,
    pub half_width: f64,
    pub points: usize,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorConfig {
    Laplacian,
    OrnsteinUhlenbeck,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MarginalConfig {
    Gaussian { mean: Vec<f64>, variance: f64 },
    Mixture { components: Vec<ComponentConfig> },
    /// CSV with header `x,density` or `x,y,density`; relative paths resolve
    /// against the config file's directory.
    Tabulated { path: PathBuf },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentConfig {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub variance: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_tol() -> f64 {
    SolverOptions::default().tol
}

fn default_max_iter() -> usize {
    SolverOptions::default().max_iter
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: default_tol(), max_iter: default_max_iter() }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum HarnessConfig {
    Cost {
        #[serde(default)]
        dump_potentials: bool,
        #[serde(default)]
        dump_plan: bool,
    },
    Interpolate {
        #[serde(default)]
        dump_measures: bool,
    },
    Derivative {
        curve_mu: CurveConfig,
        curve_nu: CurveConfig,
        t: f64,
        #[serde(default = "default_step")]
        step: f64,
        #[serde(default)]
        richardson: bool,
    },
    Continuity {
        radii: Vec<f64>,
    },
    Contraction {
        times: Vec<f64>,
    },
    Talagrand {
        branch: TalagrandBranch,
        horizons: Vec<f64>,
    },
}

fn default_step() -> f64 {
    1e-3
}

impl HarnessConfig {
    pub fn name(&self) -> &'static str {
        match self {
            HarnessConfig::Cost { .. } => "cost",
            HarnessConfig::Interpolate { .. } => "interpolate",
            HarnessConfig::Derivative { .. } => "derivative",
            HarnessConfig::Continuity { .. } => "continuity",
            HarnessConfig::Contraction { .. } => "contraction",
            HarnessConfig::Talagrand { .. } => "talagrand",
        }
    }
}

/// Curve through a marginal, parametrized so that `t = 0` is the marginal.
#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveConfig {
    /// `P_t* μ` under the configured generator.
    HeatFlow,
    /// `N(m + c t, σ²)`; the marginal must be a 1D Gaussian.
    Translation { speed: f64 },
    /// `N(m, σ² e^{2λt})`; the marginal must be a 1D Gaussian.
    Dilation { rate: f64 },
    /// The marginal itself at every time.
    Fixed,
}

/// Everything a command needs, validated.
#[derive(Debug)]
pub struct Setup {
    pub grid: Grid64,
    pub generator: Generator64,
    pub mu: GridMeasure64,
    pub nu: GridMeasure64,
    pub mu_spec: MeasureSpec64,
    pub nu_spec: MeasureSpec64,
    pub horizon: f64,
    pub solver: SolverOptions,
    pub samples: usize,
    pub harness: HarnessConfig,
    pub output: Option<PathBuf>,
}

fn invalid(msg: impl Into<String>) -> String {
    msg.into()
}

fn positive_finite(name: &str, v: f64) -> Result<f64, String> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

fn marginal_spec(m: &MarginalConfig, grid: &Grid64, base: &Path, name: &str) -> Result<MeasureSpec64, String> {
    Ok(match m {
        MarginalConfig::Gaussian { mean, variance } => {
            MeasureSpec64::Gaussian { mean: mean.clone(), variance: *variance }
        }
        MarginalConfig::Mixture { components } => MeasureSpec64::Mixture(
            components
                .iter()
                .map(|c| MixtureComponent { weight: c.weight, mean: c.mean.clone(), variance: c.variance })
                .collect(),
        ),
        MarginalConfig::Tabulated { path } => {
            let full = base.join(path);
            let file = std::fs::File::open(&full).map_err(|e| format!("{name}: cannot open {}: {e}", full.display()))?;
            io::read_tabulated_density(file, grid).map_err(|e| format!("{name}: {}: {e}", full.display()))?
        }
    })
}

/// Parses and validates a configuration for the given subcommand.
pub fn load(path: &Path, command: &str) -> Result<Setup, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let config: Config = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    validate(config, base, command)
}

pub fn validate(config: Config, base: &Path, command: &str) -> Result<Setup, String> {
    if config.schema != SCHEMA_VERSION {
        return Err(format!("unsupported schema `{}`, expected `{SCHEMA_VERSION}`", config.schema));
    }
    if config.harness.name() != command {
        return Err(format!("config describes the `{}` harness, not `{command}`", config.harness.name()));
    }
    let g = &config.grid;
    let grid = Grid64::new(g.dimension, g.half_width, g.points).map_err(|e| e.to_string())?;
    let generator = match config.generator {
        GeneratorConfig::Laplacian => Generator64::laplacian(grid),
        GeneratorConfig::OrnsteinUhlenbeck => Generator64::ornstein_uhlenbeck(grid).map_err(|e| e.to_string())?,
    };
    let horizon = positive_finite("horizon", config.horizon)?;
    let tol = positive_finite("solver.tol", config.solver.tol)?;
    if config.solver.max_iter == 0 {
        return Err("solver.max_iter must be at least 1".into());
    }
    if config.samples < MIN_SAMPLES || config.samples.is_multiple_of(2) {
        return Err(format!("samples must be odd and at least {MIN_SAMPLES}, got {}", config.samples));
    }
    let mu_spec = marginal_spec(&config.mu, &grid, base, "mu")?;
    let nu_spec = marginal_spec(&config.nu, &grid, base, "nu")?;
    let build = |spec: &MeasureSpec64, name: &str| -> Result<GridMeasure64, String> {
        let m = GridMeasure64::from_spec(spec, grid).map_err(|e| format!("{name}: {e}"))?;
        if !semigroup::admissible(&m, &generator) {
            return Err(format!(
                "{name}: not admissible on this grid (infinite entropy, or at least 1e-8 of its mass on the two outermost node layers)"
            ));
        }
        Ok(m)
    };
    let mu = build(&mu_spec, "mu")?;
    let nu = build(&nu_spec, "nu")?;

    match &config.harness {
        HarnessConfig::Derivative { curve_mu, curve_nu, t, step, richardson } => {
            positive_finite("harness.step", *step)?;
            let reach = if *richardson { 2.0 * step } else { *step };
            if !(t.is_finite() && t - reach >= 0.0) {
                return Err(format!("harness.t must satisfy t - {reach} >= 0 so every curve sample has t >= 0"));
            }
            for (curve, spec, name) in [(curve_mu, &mu_spec, "curve_mu"), (curve_nu, &nu_spec, "curve_nu")] {
                let gaussian_1d = matches!(spec, MeasureSpec64::Gaussian { mean, .. } if mean.len() == 1);
                if matches!(curve, CurveConfig::Translation { .. } | CurveConfig::Dilation { .. }) && !gaussian_1d {
                    return Err(format!("{name}: translation and dilation curves need a 1D Gaussian marginal"));
                }
            }
        }
        HarnessConfig::Continuity { radii } => {
            if radii.is_empty() {
                return Err("harness.radii must not be empty".into());
            }
            for &r in radii {
                positive_finite("every radius", r)?;
            }
        }
        HarnessConfig::Contraction { times } => {
            if config.generator != GeneratorConfig::Laplacian || grid.dimension() != 1 {
                return Err("the contraction harness needs the 1D Laplacian".into());
            }
            if times.is_empty() || times.windows(2).any(|w| !(w[1] > w[0])) {
                return Err("harness.times must be non-empty and strictly increasing".into());
            }
            for &t in times {
                positive_finite("every time", t)?;
            }
        }
        HarnessConfig::Talagrand { branch, horizons } => {
            let pairing = matches!(
                (branch, config.generator),
                (TalagrandBranch::PositiveCurvature, GeneratorConfig::OrnsteinUhlenbeck)
                    | (TalagrandBranch::ZeroCurvature, GeneratorConfig::Laplacian)
            );
            if !pairing {
                return Err(format!("branch {branch:?} does not apply to generator {:?}", config.generator));
            }
            if horizons.is_empty() {
                return Err("harness.horizons must not be empty".into());
            }
            for &t in horizons {
                positive_finite("every horizon", t)?;
                if *branch == TalagrandBranch::ZeroCurvature && t < 1.0 {
                    return Err(format!("zero-curvature horizons must be >= 1, got {t}"));
                }
            }
        }
        HarnessConfig::Cost { dump_plan, .. } => {
            if *dump_plan && grid.dimension() != 1 {
                return Err("plan dumps are only available in 1D".into());
            }
        }
        HarnessConfig::Interpolate { .. } => {}
    }

    Ok(Setup {
        grid,
        generator,
        mu,
        nu,
        mu_spec,
        nu_spec,
        horizon,
        solver: SolverOptions { tol, max_iter: config.solver.max_iter },
        samples: config.samples,
        harness: config.harness,
        output: config.output,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, command: &str) -> Result<Setup, String> {
        let config: Config = serde_json::from_str(text).map_err(|e| e.to_string())?;
        validate(config, Path::new("."), command)
    }

    fn base(harness: &str) -> String {
        format!(
            r#"{{
                "schema": "{SCHEMA_VERSION}",
                "grid": {{ "dimension": 1, "half_width": 8.0, "points": 129 }},
                "generator": "laplacian",
                "mu": {{ "kind": "gaussian", "mean": [-1.0], "variance": 1.0 }},
                "nu": {{ "kind": "gaussian", "mean": [1.0], "variance": 1.0 }},
                "harness": {harness}
            }}"#
        )
    }

    #[test]
    fn defaults_fill_optional_fields() {
        let setup = parse(&base(r#"{ "name": "cost" }"#), "cost").unwrap();
        assert_eq!(setup.horizon, 1.0);
        assert_eq!(setup.samples, DEFAULT_SAMPLES);
        assert_eq!(setup.solver, SolverOptions::default());
        assert!(setup.output.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = base(r#"{ "name": "cost" }"#).replace("\"generator\"", "\"colour\": 1, \"generator\"");
        assert!(parse(&text, "cost").unwrap_err().contains("colour"));
        let err = parse(&base(r#"{ "name": "cost", "plot": true }"#), "cost").unwrap_err();
        assert!(err.contains("plot"), "{err}");
    }

    #[test]
    fn schema_and_harness_must_match() {
        let text = base(r#"{ "name": "cost" }"#).replace(SCHEMA_VERSION, "schrodinger-lab/config/v0");
        assert!(parse(&text, "cost").unwrap_err().contains("unsupported schema"));
        assert!(parse(&base(r#"{ "name": "cost" }"#), "talagrand").unwrap_err().contains("`cost` harness"));
    }

    #[test]
    fn parameter_ranges() {
        let even = base(r#"{ "name": "cost" }"#).replace("\"harness\"", "\"samples\": 64, \"harness\"");
        assert!(parse(&even, "cost").is_err());
        let early = r#"{ "name": "derivative", "curve_mu": { "kind": "heat_flow" }, "curve_nu": { "kind": "fixed" },
                         "t": 0.001, "step": 0.001, "richardson": true }"#;
        assert!(parse(&base(early), "derivative").unwrap_err().contains("t >= 0"));
        let branch = r#"{ "name": "talagrand", "branch": "positive_curvature", "horizons": [1.0] }"#;
        assert!(parse(&base(branch), "talagrand").unwrap_err().contains("does not apply"));
        let short = r#"{ "name": "talagrand", "branch": "zero_curvature", "horizons": [0.5] }"#;
        assert!(parse(&base(short), "talagrand").is_err());
        assert!(parse(&base(r#"{ "name": "contraction", "times": [0.5, 0.25] }"#), "contraction").is_err());
        assert!(parse(&base(r#"{ "name": "continuity", "radii": [] }"#), "continuity").is_err());
    }

    #[test]
    fn marginal_errors_are_config_errors() {
        let wide = base(r#"{ "name": "cost" }"#).replace("\"variance\": 1.0 }", "\"variance\": 9.0 }");
        assert!(parse(&wide, "cost").unwrap_err().contains("mu"));
        let missing = base(r#"{ "name": "cost" }"#)
            .replace(r#"{ "kind": "gaussian", "mean": [1.0], "variance": 1.0 }"#, r#"{ "kind": "tabulated", "path": "nope.csv" }"#);
        assert!(parse(&missing, "cost").unwrap_err().contains("cannot open"));
    }

    #[test]
    fn shipped_configs_parse() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
        let mut count = 0;
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            let text = std::fs::read_to_string(&path).unwrap();
            let config: Config = serde_json::from_str(&text).unwrap();
            let name = config.harness.name();
            validate(config, &dir, name).unwrap();
            count += 1;
        }
        assert!(count >= 9);
    }
}
