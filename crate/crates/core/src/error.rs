use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("lambda = {lambda} outside domain [{lo}, {hi}]")]
    Domain { lambda: f64, lo: f64, hi: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("calibration failed to converge: residuals dE = {res_delta_e:.3e}, ln(Omega) = {res_ln_omega:.3e}")]
    Calibration { res_delta_e: f64, res_ln_omega: f64 },

    #[error("solver did not converge: {0}")]
    Convergence(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("norm drift {drift:.3e} exceeds tolerance")]
    NormDrift { drift: f64 },

    #[error("Fock basis dimension {dim} exceeds cap {cap}")]
    BasisCap { dim: usize, cap: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 2 for bad input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain { .. } | Error::Config(_) | Error::Precondition(_) | Error::BasisCap { .. } => 2,
            Error::Io(_) => 2,
            _ => 3,
        }
    }

    pub fn is_numerical(&self) -> bool {
        self.exit_code() == 3
    }
}
