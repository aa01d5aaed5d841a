use alloc::string::String;
use core::fmt;

/// Errors produced by law construction, root solving, and estimation.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A law parameter failed validation; `field` names the offender.
    InvalidParam { field: &'static str, detail: String },
    /// The operation is not defined for this law family.
    UnsupportedFamily {
        operation: &'static str,
        family: &'static str,
    },
    /// No sign change of the cumulant function was found on the probed interval.
    NoRoot { lo: f64, hi: f64 },
    /// The requested slope lies outside the attainable range of the tilted mean.
    SlopeOutOfRange { target: f64, attainable: (f64, f64) },
    /// The tilt exponent lies outside the finiteness domain of the generating function.
    OutOfDomain { alpha: f64 },
    /// Adaptive quadrature failed to reach the requested relative tolerance.
    Quadrature { requested: f64, achieved: f64 },
    /// An operation was invoked outside its stated preconditions.
    Precondition {
        operation: &'static str,
        detail: String,
    },
    /// Exact enumeration was requested beyond the supported size cap.
    EnumerationTooLarge { n_atoms: usize, horizon: u64 },
    /// The rejection sampler exceeded its consecutive-rejection budget.
    SamplerStall { rejections: u64 },
    /// Tail fitting had too little data to produce a slope.
    DegenerateFit { detail: String },
    /// Two independent evaluation routes disagreed beyond tolerance.
    CrossCheck {
        operation: &'static str,
        detail: String,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParam { field, detail } => {
                write!(f, "invalid parameter `{field}`: {detail}")
            }
            Error::UnsupportedFamily { operation, family } => {
                write!(f, "{operation} is not supported for the {family} family")
            }
            Error::NoRoot { lo, hi } => {
                write!(f, "no sign change found on the probed interval [{lo}, {hi}]")
            }
            Error::SlopeOutOfRange { target, attainable } => write!(
                f,
                "slope {target} outside the attainable interval ({}, {})",
                attainable.0, attainable.1
            ),
            Error::OutOfDomain { alpha } => {
                write!(f, "exponent {alpha} outside the finiteness domain")
            }
            Error::Quadrature {
                requested,
                achieved,
            } => write!(
                f,
                "quadrature reached relative tolerance {achieved:e}, requested {requested:e}"
            ),
            Error::Precondition { operation, detail } => {
                write!(f, "{operation}: precondition violated: {detail}")
            }
            Error::EnumerationTooLarge { n_atoms, horizon } => write!(
                f,
                "enumeration supports at most 2 atoms and horizon 24, got {n_atoms} atoms and horizon {horizon}"
            ),
            Error::SamplerStall { rejections } => {
                write!(f, "rejection sampler stalled after {rejections} consecutive rejections")
            }
            Error::DegenerateFit { detail } => write!(f, "degenerate tail fit: {detail}"),
            Error::CrossCheck { operation, detail } => {
                write!(f, "{operation}: cross-check failed: {detail}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
