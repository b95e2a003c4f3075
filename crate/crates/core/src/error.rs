use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("proximal parameter gamma = {gamma} must be below 1/rho = {limit}")]
    GammaTooLarge { gamma: f64, limit: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix has no eigenvalue above the rank threshold")]
    AllZeroMatrix,

    #[error("linear constraint is numerically infeasible (least-squares residual {0:e})")]
    Infeasible(f64),

    #[error("target alpha must be positive, got {0}")]
    NonPositiveAlpha(f64),

    #[error("missing metadata: {0} is required for this variant")]
    MissingMetadata(&'static str),

    #[error("LiMEAL requires a composite objective with a smooth part")]
    NotComposite,

    #[error("lyapunov value is undefined without a predecessor iterate (k = 0)")]
    WindowTooShort,

    #[error("global subproblem minimization unsupported: {0}")]
    SubproblemNonconvexUnsupported(String),

    #[error("subproblem path `{0}` is not valid for this objective")]
    UnsupportedSubproblemPath(&'static str),

    #[error("grid oracle argmin hit the search boundary; enlarge the range")]
    RangeTooSmall,

    #[error("insufficient data for a rate fit: {0} usable points, need at least 20")]
    InsufficientData(usize),

    #[error("point lies outside the domain of the objective")]
    OutsideDomain,

    #[error("schema error at {location}: {message}")]
    Schema { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn dim(context: &'static str, expected: usize, got: usize) -> Self {
        Error::DimensionMismatch { context, expected, got }
    }
}
