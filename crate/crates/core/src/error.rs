use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A closed form produced a joint probability that is clearly negative.
    #[error("consistency error: joint probability P({x:+},{y:+}) = {value:e} is negative")]
    Consistency { x: i8, y: i8, value: f64 },

    #[error("conditional probability undefined: P(X_a = {given:+}) = 0")]
    UndefinedConditional { given: i8 },

    /// The calibration target lies outside what the model class can reach.
    #[error(
        "unreachable correlation: target P(+,+) = {target:.12} outside attainable range [{min:.12}, {max:.12}]"
    )]
    UnreachableCorrelation { target: f64, min: f64, max: f64 },

    #[error("infeasible variance: δ = {delta} outside [0, {max}] for p = {p_psi}")]
    InfeasibleVariance { p_psi: f64, delta: f64, max: f64 },

    #[error("linear program infeasible: {0}")]
    Infeasible(String),

    #[error("deserialization failed: {0}")]
    Decode(String),
}
