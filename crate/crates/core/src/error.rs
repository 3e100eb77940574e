use thiserror::Error;

/// Errors produced by the analytical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("coverage infeasible: BS cannot reach the SINR threshold even at zero 2D distance")]
    CoverageInfeasible,

    #[error("degenerate cell: all SINR mass falls below the outage threshold")]
    DegenerateCell,

    #[error("degenerate threshold: strategy split leaves no mass in the licensed branch")]
    DegenerateThreshold,

    #[error("no offloaded flow: offload probability is zero, offloaded pmf undefined")]
    NoOffload,

    #[error("fixed point did not converge after {iterations} iterations (last residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("state space too large: {size} exceeds guard {guard}")]
    Capacity { size: usize, guard: usize },

    #[error("no spectral-efficiency mapping for demand level {0}")]
    Mapping(usize),

    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    #[error("invalid MCS table: {0}")]
    InvalidMcs(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("simulation control error: {0}")]
    SimControl(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Tag an error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
