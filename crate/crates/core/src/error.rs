use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("point lies in the pinhole plane (|z_C| = {0:e})")]
    DegenerateDepth(f64),

    #[error("sensing system is rank deficient (rank {0} < 3)")]
    RankDeficient(usize),

    #[error("only {0} camera(s) receive reflected light, at least 2 are needed")]
    InsufficientIllumination(usize),

    #[error("threshold {rho_i:e} is infeasible: radicand {radicand:e} is negative")]
    InfeasibleThreshold { rho_i: f64, radicand: f64 },

    #[error("total internal reflection (n_in sin beta / n_out = {0})")]
    TotalInternalReflection(f64),

    #[error("all channel gains are zero")]
    ZeroGain,

    #[error("quadrature did not converge (error estimate {estimate:e} over tolerance {tolerance:e})")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("target {target:e} is not bracketed by [{lo}, {hi}] dB")]
    NotBracketed { target: f64, lo: f64, hi: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the CLI: 2 for bad input, 3 for numeric failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::InvalidScenario(_) | Error::Config(_) => 2,
            Error::Io(_) | Error::Csv(_) => 1,
            _ => 3,
        }
    }
}
