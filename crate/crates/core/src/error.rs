use thiserror::Error;

/// Errors raised by the analytic modules and the Fock-space oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument {0} is negative beyond the clip tolerance")]
    NegativeArgument(f64),

    #[error("matrix is not Hermitian (max |A - A^H| = {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not symmetric (max |A - A^T| = {0:.3e})")]
    NotSymmetric(f64),

    #[error("matrix has eigenvalue {0:.3e} below the clip tolerance")]
    NegativeEigenvalue(f64),

    #[error("matrix is not positive definite (min eigenvalue {0:.3e})")]
    NotPositiveDefinite(f64),

    #[error("eigenvalues of -(D^-1 a)^2 do not pair (gap {0:.3e})")]
    PairingFailure(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("covariance is not an admissible quantum covariance (margin {0:.3e})")]
    InvalidCovariance(f64),

    #[error("alpha + beta is numerically singular (condition number {0:.3e})")]
    SingularSum(f64),

    #[error("parameter out of range: {0}")]
    InvalidRange(String),

    #[error("unassisted capacity {0:.3e} is too small to divide by")]
    DivisionDegenerate(f64),

    #[error("energy budget {0} is not positive")]
    InfeasibleConstraint(f64),

    #[error("truncation too small: {0}")]
    TruncationTooSmall(String),

    #[error("outcome probability density {0:.3e} is negligible")]
    NegligibleOutcome(f64),

    #[error("quadrature captured mass {mass:.6}, deficit exceeds tolerance {tolerance:.1e}")]
    GridMassDeficit { mass: f64, tolerance: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
