use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{op}: shape mismatch {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("{op}: non-finite value produced")]
    NonFinite { op: &'static str },
    #[error("{0}: empty input")]
    Empty(&'static str),
    #[error("backward: loss must be a scalar, got shape {0:?}")]
    NotScalar(Vec<usize>),
    #[error("backward: tape is empty")]
    EmptyTape,
    #[error("signal of length {len} is too short (need at least {needed})")]
    SignalTooShort { len: usize, needed: usize },
    #[error("inconsistent coefficient lengths: {0}")]
    InconsistentLengths(String),
    #[error("unknown wavelet `{0}`")]
    UnknownWavelet(String),
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("non-finite gradient (norm {norm})")]
    NonFiniteGradient { norm: f64 },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::InvalidData(msg.into())
    }

    /// True for failures of the numerics (as opposed to bad input or config).
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite { .. } | Error::NonFiniteGradient { .. })
    }
}
