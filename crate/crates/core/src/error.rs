use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An evaluator was called outside its domain (e.g. ω′ at k = 0).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// Right-hand side of a corrector equation is not orthogonal to constants.
    #[error("solvability violated: rhs mean {mean:e} exceeds tolerance {tol:e}")]
    Solvability { mean: f64, tol: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("corrector residual {residual:e} above tolerance {tol:e}")]
    Residual { residual: f64, tol: f64 },

    #[error("Fatou extrapolation did not stabilize at k = {k}: estimate {estimate:e} > {tol:e}")]
    Extrapolation { k: f64, estimate: f64, tol: f64 },

    #[error("quadrature failed to converge: {0}")]
    Quadrature(String),

    #[error("non-positive absorption coefficient {g_abs:e} at k = {k}")]
    Absorption { k: f64, g_abs: f64 },

    #[error("CFL violation: {0}")]
    Cfl(String),

    #[error("non-finite value at t = {time}, step {step}, cell (y = {iy}, k = {ik})")]
    NonFinite {
        time: f64,
        step: usize,
        iy: usize,
        ik: usize,
    },

    #[error("test function support touches the interface: {0}")]
    Support(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("sweep failed at eps = {eps}: {source}")]
    Sweep {
        eps: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
