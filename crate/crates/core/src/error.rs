use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "adaptive quadrature did not converge after {subdivisions} subdivisions \
         (estimate {estimate:e}, error estimate {error_estimate:e})"
    )]
    QuadratureFailure {
        estimate: f64,
        error_estimate: f64,
        subdivisions: usize,
    },

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("closed form left an imaginary residue of {residue:e}")]
    ImaginaryResidue { residue: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("decoded state leaked {mass:e} of its probability out of the code space")]
    DecodeLeakage { mass: f64 },

    #[error("target success probability cannot be reached with failure rate 1")]
    UnachievableTarget,

    #[error("required run count exceeds the 64-bit range (ln k = {ln_runs})")]
    RunCountOverflow { ln_runs: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures of the numerical machinery, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::QuadratureFailure { .. }
                | Error::ImaginaryResidue { .. }
                | Error::RunCountOverflow { .. }
                | Error::DecodeLeakage { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
