use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),

    #[error("edge ({i}, {j}) has non-positive weight {weight}")]
    NonPositiveWeight { i: usize, j: usize, weight: f64 },

    #[error("edge ({i}, {j}) listed twice with conflicting weights {first} and {second}")]
    ConflictingDuplicate {
        i: usize,
        j: usize,
        first: f64,
        second: f64,
    },

    #[error("edge ({i}, {j}) listed more than once")]
    DuplicateEdge { i: usize, j: usize },

    #[error("vertex index {index} out of range for a graph with {n} vertices")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("symmetric eigensolver did not converge on a {0}x{0} matrix")]
    EigenNonConvergence(usize),

    #[error("problem violates solver assumptions: {0}")]
    AssumptionViolated(String),

    #[error("dual supergradient did not change sign after {doublings} bracket doublings")]
    NoSignChange { doublings: usize },

    #[error("no feasible unit vector in the enlarged null space (cap {cap} reached)")]
    InfeasibleNullSpace { cap: usize },

    #[error("subspace is not J-invariant: eigenvalue {eigenvalue} of the compressed sampling matrix")]
    BrokenInvariance { eigenvalue: f64 },

    #[error("sampling pattern is trivial: both channels must be non-empty")]
    TrivialSampling,

    #[error("not a signed permutation: {0}")]
    SignedPermutation(String),

    #[error("interior block of the Laplacian is singular")]
    SingularInterior,

    #[error("Laplacian has positive off-diagonal entry {value} at ({i}, {j})")]
    PositiveOffDiagonal { i: usize, j: usize, value: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of a numerical routine or check, as opposed to
    /// malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::EigenNonConvergence(_)
                | Error::NoSignChange { .. }
                | Error::InfeasibleNullSpace { .. }
                | Error::BrokenInvariance { .. }
                | Error::SignedPermutation(_)
                | Error::SingularInterior
        )
    }
}
