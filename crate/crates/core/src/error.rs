use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("point violates sphere constraint (|u|²-1 = {u_defect:e}, |v|²-1 = {v_defect:e})")]
    OffSphere { u_defect: f64, v_defect: f64 },
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("constraint violation: {0}")]
    ConstraintViolation(String),
    #[error("relation between x and y violated (residual {0:e})")]
    RelationViolated(f64),
    #[error("unknown invariant `{0}`")]
    UnknownInvariant(String),
    #[error("reduced space is singular at k = {0}")]
    SingularReducedSpace(f64),
    #[error("integration exceeded {max_steps} steps")]
    StepLimitExceeded { max_steps: usize },
    #[error("linearization is degenerate: {0}")]
    DegenerateLinearization(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("period basis is degenerate (|det| = {0:e})")]
    DegenerateBasis(f64),
    #[error("continuation step collapsed after {0} bisections")]
    StepCollapse(usize),
    #[error("matrix rounding is ambiguous (residual {0:e})")]
    RoundingAmbiguous(f64),
    #[error("matrix is not unimodular (det = {0})")]
    NotUnimodular(i64),
    #[error("matrix does not fix the first basis vector")]
    NotReducible,
    #[error("path comes too close to the discriminant (root separation {0:e})")]
    NearDiscriminant(f64),
}
