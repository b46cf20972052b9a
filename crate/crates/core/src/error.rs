use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("pole: lower parameter b[{param}] = {value} vanishes a Pochhammer factor at kappa = {kappa}")]
    Pole {
        param: usize,
        value: f64,
        kappa: String,
    },

    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("indefinite precision: assembled precision has minimum eigenvalue {min_eigenvalue:e}")]
    IndefinitePrecision { min_eigenvalue: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("zonal polynomial vanishes: partition {kappa} has more than {m} parts")]
    Vanishing { kappa: String, m: usize },

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
