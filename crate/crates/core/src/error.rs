use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: row {row} has {len} entries, expected {dim}")]
    NotSquare { row: usize, len: usize, dim: usize },
    #[error("matrix has zero dimension")]
    EmptyMatrix,
    #[error("matrix has a non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not Hermitian (max |M - M^dag| = {residual:e})")]
    NotHermitian { residual: f64 },
    #[error("operator is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },
    #[error("trace {trace} differs from 1")]
    BadTrace { trace: f64 },
    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal mass {off_diagonal:e})")]
    NoConvergence { sweeps: usize, off_diagonal: f64 },
    #[error("POVM is not normalized (||A(X) - I|| = {residual:e})")]
    NotNormalized { residual: f64 },
    #[error("measure is not projective (residual {residual:e})")]
    NotProjective { residual: f64 },
    #[error("sample space must contain at least one point")]
    EmptySpace,
    #[error("duplicate outcome label {0:?}")]
    DuplicateLabel(String),
    #[error("unknown outcome label {0:?}")]
    UnknownLabel(String),
    #[error("outcome index {index} out of range for a space of {len} points")]
    PointOutOfRange { index: usize, len: usize },
    #[error("outcome values must be finite (label {0:?})")]
    NonFiniteValue(String),
    #[error("sample space carries no real values")]
    MissingValues,
    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("sample spaces differ")]
    SpaceMismatch,
    #[error("matrix is not row-stochastic: {0}")]
    NotStochastic(String),
    #[error("Bloch vector norm {norm} exceeds 1")]
    OutsideBall { norm: f64 },
    #[error("direction has norm {norm}, expected a unit vector")]
    NotUnit { norm: f64 },
    #[error("invalid spin POVM: {0}")]
    InvalidSpinPovm(String),
    #[error("hbar = {0} is outside the admissible range")]
    HbarOutOfRange(f64),
    #[error("invalid hbar net: {0}")]
    InvalidNet(String),
    #[error("invalid bloch path table: {0}")]
    InvalidTable(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid function: {0}")]
    InvalidFunction(String),
}
