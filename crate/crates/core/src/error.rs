use thiserror::Error;

/// Errors raised by the solver, the diagnostics and the I/O layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("multi-index has length {got}, grid dimension is {dim}")]
    MultiIndex { got: usize, dim: usize },

    #[error("field mean {mean:e} is not zero; the zero mode has no preimage")]
    NonzeroMean { mean: f64 },

    #[error("near-singular deformation: min |det| = {min_det:e} < {threshold}")]
    NearSingular { min_det: f64, threshold: f64 },

    #[error("magnetization length collapsed: min |M| = {min_norm:e}")]
    SphereCollapse { min_norm: f64 },

    #[error("CFL guard violated: dt*max|v|/h = {cfl:.4} > {limit}")]
    Cfl { cfl: f64, limit: f64 },

    #[error("non-finite values detected at t = {t}")]
    BlowUp { t: f64 },

    #[error("step failed at t = {t}: {source}")]
    StepFailed {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("Picard stage {stage} failed at iterate {iterate}: {source}")]
    PicardStage {
        stage: &'static str,
        iterate: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures that signal numerical breakdown (blow-up, NaN,
    /// singular deformation, CFL trouble) rather than bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::BlowUp { .. }
            | Error::NearSingular { .. }
            | Error::SphereCollapse { .. }
            | Error::Cfl { .. } => true,
            Error::StepFailed { source, .. } | Error::PicardStage { source, .. } => {
                source.is_numerical()
            }
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
