use thiserror::Error;

/// Errors raised by the capacity model, the quantizer lab, the simulator and the optimizers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter lies outside its mathematical domain.
    #[error("invalid `{field}`: {reason}")]
    Parameter { field: &'static str, reason: String },

    /// The quantizer rate `C_f / (r W)` falls below its floor.
    ///
    /// Carries the largest interface count and bandwidth that would restore admissibility.
    #[error(
        "inadmissible link: quantizer rate {quantizer_rate:.6} bits/sample is below the floor of {floor}; \
         try at most {r_max} interfaces or a bandwidth of at most {w_max_hz:.6e} Hz"
    )]
    Inadmissible {
        quantizer_rate: f64,
        floor: f64,
        r_max: u64,
        w_max_hz: f64,
    },

    /// A precondition on the shape of the input was violated (e.g. non-unit gains on a unit-gain path).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A numerically singular or otherwise unevaluable expression.
    #[error("numerics: {0}")]
    Numerics(String),

    #[error("unknown sweep variable `{0}` (expected fiber_rate, interfaces, bandwidth or power)")]
    UnknownVariable(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn parameter(field: &'static str, reason: impl Into<String>) -> Error {
    Error::Parameter {
        field,
        reason: reason.into(),
    }
}
