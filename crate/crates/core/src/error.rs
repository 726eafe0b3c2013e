use thiserror::Error;

/// Errors raised by the simulation and learning routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cutoff {cutoff} too small for |alpha|^2 = {alpha_sq} (need |alpha|^2 <= cutoff/4)")]
    CutoffTooSmall { cutoff: usize, alpha_sq: f64 },
    #[error("non-finite value for {0}")]
    NonFinite(&'static str),
    #[error("mode {mode} out of range for {num_modes} modes")]
    ModeOutOfRange { mode: usize, num_modes: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid basis: {0}")]
    InvalidBasis(String),
    #[error("state norm^2 {norm_sqr} is outside the tolerated window")]
    NotNormalized { norm_sqr: f64 },
    #[error("truncation leakage {leakage:e} exceeds tolerance {tol:e}")]
    TruncationLeakage { leakage: f64, tol: f64 },
    #[error("inconsistent hopping pair ({i}, {j}): h_ji must equal conj(h_ij)")]
    InconsistentHopping { i: usize, j: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid coloring: {0}")]
    InvalidColoring(String),
    #[error("operator is not Hermitian (max defect {defect:e})")]
    NonHermitian { defect: f64 },
    #[error("norm drift {drift:e} exceeds tolerance {tol:e}")]
    NormDrift { drift: f64, tol: f64 },
    #[error("negative or non-finite evolution time {0}")]
    InvalidTime(f64),
    #[error("randomization plan does not fit the model: {0}")]
    PlanMismatch(String),
    #[error("SPAM strength {0} must lie in [0, 1)")]
    InvalidSpam(f64),
    #[error("quadrature grid misses probability mass {missing:e}")]
    GridUnderflow { missing: f64 },
    #[error("all homodyne samples were discarded by the threshold M = {m}")]
    AllSamplesDiscarded { m: f64 },
    #[error("signal magnitude vanished")]
    ZeroSignal,
    #[error("parameter constraint violated: {0}")]
    Constraint(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("Krylov stepper failed to converge: {0}")]
    Krylov(String),
}

pub type Result<T> = std::result::Result<T, Error>;
