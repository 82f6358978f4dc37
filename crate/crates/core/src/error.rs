use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("polynomial degree {0} exceeds the supported maximum of {max}", max = crate::flux::MAX_DEGREE)]
    DegreeTooLarge(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("chord requires distinct states, got u_l = u_r = {0}")]
    DegenerateStates(f64),

    #[error("breakpoints must have strictly increasing x and at least one point")]
    InvalidBreakpoints,

    #[error("no affine minorant exists: left slope {left} exceeds right slope {right}")]
    UnboundedBelow { left: f64, right: f64 },

    #[error("slope {theta} outside the conjugate domain [{lo}, {hi}]")]
    LegendreDomain { theta: f64, lo: f64, hi: f64 },

    #[error("CFL violation: dt * Lip / h = {ratio} is not below {limit}")]
    Cfl { ratio: f64, limit: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("target {target} incompatible with field: {reason}")]
    IncompatibleTarget { target: &'static str, reason: String },

    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),

    #[error("entropy is not even; the ball functional requires an even entropy")]
    NonEvenEntropy,

    #[error("entropy rejected: {0}")]
    InvalidEntropy(String),

    #[error("brute-force oracle limited to n <= {max}, got {got}", max = crate::oracle::BRUTE_FORCE_MAX)]
    OracleSize { got: usize },

    #[error("rate fit needs at least 3 strictly positive samples")]
    RateFitInput,

    #[error("diagnostic {0} is not defined for this field type")]
    Unsupported(&'static str),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
