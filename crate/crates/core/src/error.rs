use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field length {found} does not match grid size {expected}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("negative density value {value} at index {index}")]
    NegativeDensity { index: usize, value: f64 },

    #[error("density has no mass (integral {0})")]
    ZeroMass(f64),

    #[error("density does not decay at the domain edges (endpoint/max ratio {ratio:.3e})")]
    TruncationError { ratio: f64 },

    #[error("wavefunction has a node inside its support at index {index}")]
    NodeOnSupport { index: usize },

    #[error("wave packet reached the wall at step {step} (edge density {value:.3e})")]
    BoundaryContact { step: usize, value: f64 },

    #[error("target {target} lies outside the attainable range ({min}, {max})")]
    InfeasibleTarget { target: f64, min: f64, max: f64 },

    #[error("maximum-entropy density does not decay at the domain edges")]
    NonDecaying,

    #[error("bisection failed to bracket the target after {0} expansions")]
    BracketFailure(usize),

    #[error("ground state is pressed against the wall (edge mass {edge_mass:.3e})")]
    EdgeLocalized { edge_mass: f64 },

    #[error("lowest two eigenvalues are degenerate ({e0} vs {e1})")]
    DegenerateGround { e0: f64, e1: f64 },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("need at least 3 consecutive successful records, found {0}")]
    TooFewPoints(usize),

    #[error("mean constraint value is not strictly monotone in the multiplier")]
    NonMonotoneMeanA,

    #[error("density and heat field are not coupled (max deviation {0:.3e})")]
    DecoupledInputs(f64),

    #[error("index {index} is not an interior time index (valid 1..={max})")]
    TimeIndex { index: usize, max: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable short name used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::GridMismatch => "GridMismatch",
            Error::NonFinite(_) => "NonFinite",
            Error::InvalidInput(_) => "InvalidInput",
            Error::NegativeDensity { .. } => "NegativeDensity",
            Error::ZeroMass(_) => "ZeroMass",
            Error::TruncationError { .. } => "TruncationError",
            Error::NodeOnSupport { .. } => "NodeOnSupport",
            Error::BoundaryContact { .. } => "BoundaryContact",
            Error::InfeasibleTarget { .. } => "InfeasibleTarget",
            Error::NonDecaying => "NonDecaying",
            Error::BracketFailure(_) => "BracketFailure",
            Error::EdgeLocalized { .. } => "EdgeLocalized",
            Error::DegenerateGround { .. } => "DegenerateGround",
            Error::Eigensolver(_) => "Eigensolver",
            Error::TooFewPoints(_) => "TooFewPoints",
            Error::NonMonotoneMeanA => "NonMonotoneMeanA",
            Error::DecoupledInputs(_) => "DecoupledInputs",
            Error::TimeIndex { .. } => "TimeIndex",
            Error::Format(_) => "Format",
            Error::Io(_) => "Io",
            Error::Csv(_) => "Csv",
            Error::Json(_) => "Json",
        }
    }
}
