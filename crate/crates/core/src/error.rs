use thiserror::Error;

/// Errors raised by the solver toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("network is not normalized: {0}")]
    NotNormalized(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("no positive density solves the density equation at j={j}, x={x}")]
    NoPositiveDensity { j: f64, x: f64 },

    #[error("density equation has several roots at j={j}, x={x}: {roots:?}")]
    AmbiguousDensity { j: f64, x: f64, roots: Vec<f64> },

    #[error("cost undefined at x={x}: L(x,0,m)={rest_value} is not positive")]
    CostUndefined { x: f64, rest_value: f64 },

    #[error("singular sensitivity: denominator {denominator} vanishes at j={j}, x={x}")]
    SingularSensitivity { j: f64, x: f64, denominator: f64 },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("edge `{edge}`: {source}")]
    EdgeEvaluation {
        edge: String,
        #[source]
        source: Box<Error>,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("negative cycle in frozen costs through directed vertices {0:?}")]
    NegativeCycle(Vec<usize>),

    #[error("no equilibrium certified; best gap {best_gap}")]
    NoEquilibrium { best_gap: f64 },

    #[error("{count} orientation patterns exceed the limit {limit}")]
    TooManyOrientations { count: u128, limit: u128 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("current-carrying loop through directed vertices {0:?}")]
    CarryingLoop(Vec<usize>),

    #[error("regular directed vertex {0} has no carrying walk to an exit")]
    NoCarryingWalk(usize),

    #[error("calibration: {0}")]
    Calibration(String),

    #[error("ambiguous calibration: {0}")]
    AmbiguousCalibration(String),

    #[error("density map not invertible: folds near j={fold}")]
    NotInvertible { fold: f64 },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn on_edge(self, edge: &str) -> Error {
        match self {
            e @ Error::EdgeEvaluation { .. } => e,
            e => Error::EdgeEvaluation {
                edge: edge.to_string(),
                source: Box::new(e),
            },
        }
    }

    /// True for failures of numerical routines rather than of the input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::EdgeEvaluation { source, .. } => source.is_numerical(),
            Error::NoPositiveDensity { .. }
            | Error::AmbiguousDensity { .. }
            | Error::CostUndefined { .. }
            | Error::SingularSensitivity { .. }
            | Error::RootFinding(_)
            | Error::NegativeCycle(_)
            | Error::Calibration(_)
            | Error::AmbiguousCalibration(_)
            | Error::NotInvertible { .. } => true,
            _ => false,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
