use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument or argument combination is outside the supported domain.
    #[error("invalid input: {0}")]
    Validation(String),

    /// Automatic truncation could not reach the requested tail bound.
    #[error(
        "truncation error: tail bound {epsilon:e} at r = {r} needs more than {cap} photon pairs; \
         lower r, raise epsilon, or pass an explicit n_max"
    )]
    Truncation { r: f64, epsilon: f64, cap: u32 },

    /// `(max - min) / (max + min)` with `max + min = 0`.
    #[error("visibility undefined: fringe is identically zero")]
    UndefinedVisibility,

    /// The detection criterion has no solution for this source.
    #[error("no solution: {0}")]
    NoSolution(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}
