//! Error type shared by the whole crate.
//!
//! Precision handling is fail-fast: whenever an answer could depend on
//! coefficients beyond a guaranteed horizon we return
//! [`Error::InsufficientPrecision`] instead of guessing.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// The requested quantity depends on coefficients beyond the horizon.
    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),

    /// Inversion of a series or matrix that is not a unit at this precision.
    #[error("not invertible at this precision: {0}")]
    NotInvertible(String),

    /// Operands live over different coefficient rings.
    #[error("coefficient ring mismatch: {0}")]
    RingMismatch(String),

    /// Matrix or coweight dimensions disagree.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// No field extension within the allowed budget solved the problem.
    #[error("extension budget exceeded: {0}")]
    BudgetExceeded(String),

    /// Newton slope ladder did not repeat within the budget.
    #[error("did not stabilize within budget: {0}")]
    DidNotStabilize(String),

    /// Operation requires an etale Frobenius matrix.
    #[error("not etale: {0}")]
    NotEtale(String),

    /// Reduction is not a quasi-isogeny, so no rigid lift exists.
    #[error("not a quasi-isogeny mod epsilon")]
    NotQuasiIsogeny,

    /// Torus point with non-integral or non-unipotent-component `a`.
    #[error("not in the Neron model: {0}")]
    NotInNeronModel(String),

    /// Lattice window would exceed the configured enumeration cap.
    #[error("window too large: {0}")]
    WindowTooLarge(String),

    /// Metric distance is infinite (determinant valuations differ).
    #[error("incommensurable points: {0}")]
    Incommensurable(String),

    /// A descriptor or parameter failed validation.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// Stable machine-readable code, used in CLI reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InsufficientPrecision(_) => "precision",
            Error::NotInvertible(_) => "not-invertible",
            Error::RingMismatch(_) => "ring-mismatch",
            Error::ShapeMismatch(_) => "shape-mismatch",
            Error::BudgetExceeded(_) => "budget-exceeded",
            Error::DidNotStabilize(_) => "no-stabilization",
            Error::NotEtale(_) => "not-etale",
            Error::NotQuasiIsogeny => "not-quasi-isogeny",
            Error::NotInNeronModel(_) => "not-in-neron-model",
            Error::WindowTooLarge(_) => "window-too-large",
            Error::Incommensurable(_) => "incommensurable",
            Error::InvalidParameter(_) => "invalid-parameter",
        }
    }

    /// CLI exit status for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InsufficientPrecision(_) => 3,
            Error::BudgetExceeded(_) | Error::DidNotStabilize(_) | Error::WindowTooLarge(_) => 4,
            Error::InvalidParameter(_) | Error::RingMismatch(_) | Error::ShapeMismatch(_) => 5,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
