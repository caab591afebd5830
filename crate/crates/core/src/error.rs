use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("matrix is not diagonalizable to working precision (eigenvector condition number {condition:.3e})")]
    NonDiagonalizable { condition: f64 },

    #[error("singular channel: eigenvalue {modulus:.3e} is numerically zero")]
    SingularChannel { modulus: f64 },

    #[error("ill-conditioned snapshot {index}: condition number {condition:.3e} exceeds cap")]
    IllConditioned { index: usize, condition: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),
}
