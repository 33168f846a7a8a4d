use thiserror::Error;

/// Failures of the isometric embeddings and their inverses.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmbedError {
    #[error("composition has a non-positive part at index {index} ({value})")]
    ZeroComponent { index: usize, value: f64 },
    #[error("composition is invalid: {0}")]
    InvalidComposition(String),
    #[error("vector is not in the image of the embedding: {0}")]
    NotInImage(String),
    #[error("point is antipodal to the reference point")]
    AntipodalPoint,
    #[error("vector is not tangent to the reference point (<mu, v> = {0})")]
    NotTangent(f64),
    #[error("reference point must be a nonnegative unit vector")]
    BadReference,
    #[error("sample is empty")]
    EmptySample,
    #[error("probability grid is invalid: {0}")]
    BadGrid(String),
    #[error("interval has lower bound {lower} above upper bound {upper}")]
    InvertedInterval { lower: f64, upper: f64 },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix is not positive definite (smallest eigenvalue {0})")]
    NotPositiveDefinite(f64),
    #[error("matrix is not positive semidefinite (smallest eigenvalue {0})")]
    NotPositiveSemidefinite(f64),
    #[error("matrix is not a graph Laplacian: {0}")]
    NotLaplacian(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("treatment arm {0} has no units")]
    EmptyArm(&'static str),
    #[error("no treated units are selected")]
    ZeroSelection,
    #[error("required cell is empty: {0}")]
    EmptyCell(&'static str),
    #[error("empty sample")]
    EmptySample,
    #[error("contamination level must lie in [0, 1), got {0}")]
    BadLambda(f64),
    #[error("bad dimension: {0}")]
    BadDimension(String),
    #[error("direction grids differ")]
    GridMismatch,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("axis direction {sign}e_{axis} is missing from the grid")]
    MissingAxisDirection { axis: usize, sign: char },
    #[error("region is empty")]
    EmptyRegion,
    #[error("bootstrap replicate {0} kept emptying a required cell after 100 redraws")]
    DegenerateResample(usize),
    #[error("variance estimate is degenerate ({0})")]
    DegenerateVariance(String),
    #[error("numerical check failed: {0}")]
    Numerical(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("schema error at row {row}: {message}")]
    Schema { row: usize, message: String },
    #[error("row {row}: {source}")]
    EmbedAt { row: usize, source: EmbedError },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code for this error: 2 schema, 3 numerical degeneracy, 4 config.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Schema { .. } | Error::EmbedAt { .. } | Error::InvalidDataset(_) | Error::Io(_) => 2,
            Error::Config(_) | Error::BadLambda(_) | Error::BadDimension(_) => 4,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
