use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("measures live on different grids")]
    GridMismatch,

    #[error("{0} is only supported on one-dimensional grids")]
    Unsupported(&'static str),

    #[error("mass outside the grid is {tail_mass:e}, above the {threshold:e} threshold")]
    TailMass { tail_mass: f64, threshold: f64 },

    #[error("negative density {value} at row {row}")]
    NegativeDensity { row: usize, value: f64 },

    #[error("relative entropy is +inf: node {node} carries mass where the reference vanishes")]
    InfiniteEntropy { node: usize },

    #[error("effective support spans {nodes} node(s) along axis {axis}; at least 3 are needed")]
    ThinSupport { axis: usize, nodes: usize },

    #[error(
        "marginal {marginal} is not admissible: infinite entropy, or at least 1e-8 of its mass on the two outermost node layers"
    )]
    NotAdmissible { marginal: &'static str },

    #[error("at t = {time}: {source}")]
    AtTime { time: f64, source: Box<Error> },

    #[error("time must be positive, got {0}")]
    InvalidTime(f64),

    #[error("non-finite value at node {0}")]
    NonFinite(usize),

    #[error("mass escaped the grid: renormalization defect {defect:e} exceeds {limit:e}")]
    MassEscaped { defect: f64, limit: f64 },

    #[error("IPFP did not converge after {iterations} iterations (last residual {last:e})")]
    NotConverged { iterations: usize, last: f64, trace: Vec<f64> },

    #[error("refusing to materialize {pairs} node pairs (limit {limit})")]
    PlanTooLarge { pairs: usize, limit: usize },

    #[error("ball of radius {radius} carries mass {mass:e}, below the required {required:e}")]
    MassCondition { radius: f64, mass: f64, required: f64 },

    #[error("flow-map trajectory left the grid at time {time}")]
    ExitedGrid { time: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("tabulated density: {0}")]
    Table(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// The innermost error, looking through [`Error::AtTime`].
    pub fn root(&self) -> &Error {
        match self {
            Error::AtTime { source, .. } => source.root(),
            other => other,
        }
    }
}
