use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("index {index} is outside the domain of {what} (requires n >= {min})")]
    IndexDomain {
        what: &'static str,
        index: usize,
        min: usize,
    },

    #[error("parameter `{name}` = {value} is invalid: {reason}")]
    Parameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("gap sequence produced a non-positive or non-finite value {value} at n = {index}")]
    NonPositiveGap { index: usize, value: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("resource limit: {0}")]
    Resource(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
