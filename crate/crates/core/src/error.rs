use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("network file field `{field}`: {reason}")]
    InvalidField { field: String, reason: String },
    #[error("unsupported network file version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("failed to parse network file at `{path}`: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error("network has no measured edges")]
    EmptyEdgeSet,
    #[error("perturbation must be nonnegative, got {value} for edge {edge}")]
    NegativePerturbation { edge: String, value: f64 },
    #[error("perturbation map is missing edge {0}")]
    MissingPerturbation(String),
    #[error("layout does not match network: {0}")]
    LayoutMismatch(String),
    #[error("malformed SDPA data at line {line}: {reason}")]
    Sdpa { line: usize, reason: String },
}

#[derive(Debug, Error)]
pub enum ConeError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("vector of length {0} is not an svec of a symmetric matrix")]
    NotTriangular(usize),
    #[error("non-finite entry in cone input")]
    NonFinite,
    #[error("slack has {found} rows but cones declare {expected}")]
    LengthMismatch { expected: usize, found: usize },
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver setting `{name}`: {reason}")]
    InvalidSettings { name: &'static str, reason: String },
    #[error("malformed program: {0}")]
    MalformedProgram(String),
    #[error("KKT factorization failed ({0}); the system may be structurally rank deficient, try enabling equilibration")]
    Factorization(String),
    #[error("iterates diverged (non-finite values) at iteration {iteration}")]
    Diverged { iteration: usize },
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("solve status is {0:?}; rerun with a higher iteration limit or looser tolerance")]
    NotOptimal(crate::solver::SolveStatus),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("result does not match formulation map: {0}")]
    MapMismatch(String),
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Formulation(#[from] FormulationError),
}
