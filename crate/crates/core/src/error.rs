use alloc::string::String;
use core::fmt;

/// Errors produced by the core library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    /// A difference vector or deviation was requested with `from == to`.
    SameAction {
        agent: usize,
        action: usize,
    },
    InvalidGame(String),
    InvalidMechanism(String),
    ShapeMismatch(String),
    InvalidParameter(String),
    /// The true ratio lies above the configured bisection cap.
    BracketViolation {
        agent: usize,
        pair: (usize, usize),
        positive: usize,
        negative: usize,
        cap: f64,
    },
    /// A pair lacks a strictly positive or strictly negative component.
    UnrecoverablePair {
        agent: usize,
        pair: (usize, usize),
    },
    InconsistentScales {
        agent: usize,
        triple: (usize, usize, usize),
        residual: f64,
    },
    MalformedLayout(String),
    NoDeviation,
    SolverFailure(String),
    Oracle(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::IndexOutOfRange { what, index, len } => {
                write!(f, "{what} index {index} out of range (len {len})")
            }
            Error::SameAction { agent, action } => write!(
                f,
                "agent {agent}: source and target action are both {action}"
            ),
            Error::InvalidGame(msg) => write!(f, "invalid game: {msg}"),
            Error::InvalidMechanism(msg) => write!(f, "invalid mechanism: {msg}"),
            Error::ShapeMismatch(msg) => write!(f, "shape mismatch: {msg}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::BracketViolation {
                agent,
                pair,
                positive,
                negative,
                cap,
            } => write!(
                f,
                "agent {agent}, pair {pair:?}: ratio at components ({positive}, {negative}) exceeds cap {cap}"
            ),
            Error::UnrecoverablePair { agent, pair } => write!(
                f,
                "agent {agent}, pair {pair:?}: difference vector is not mixed-sign (weak dominance)"
            ),
            Error::InconsistentScales {
                agent,
                triple,
                residual,
            } => write!(
                f,
                "agent {agent}: triangular identity violated on triple {triple:?} (residual {residual:e})"
            ),
            Error::MalformedLayout(msg) => write!(f, "malformed layout: {msg}"),
            Error::NoDeviation => f.write_str("realized profile equals the recommendation"),
            Error::SolverFailure(msg) => write!(f, "solver failure: {msg}"),
            Error::Oracle(msg) => write!(f, "oracle failure: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T, E = Error> = core::result::Result<T, E>;
