use thiserror::Error;

use crate::lattice::Site;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension {0} is outside the supported range 1..={max}", max = crate::lattice::MAX_DIM)]
    UnsupportedDimension(usize),

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("window has {sites} sites, above the cap of {cap}")]
    WindowTooLarge { sites: usize, cap: usize },

    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("symbol {symbol} is not in an alphabet of size {size}")]
    SymbolOutOfRange { symbol: usize, size: usize },

    #[error("alphabet mismatch between operands")]
    AlphabetMismatch,

    #[error("site {0:?} lies outside the window")]
    SiteOutsideWindow(Site),

    #[error("region is not contained in the ambient window")]
    RegionNotContained,

    #[error("window mismatch between operands")]
    WindowMismatch,

    #[error("exterior rule does not determine site {0:?}")]
    ExteriorUndefined(Site),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("state space of {states} configurations exceeds the enumeration cap {cap}")]
    StateSpaceTooLarge { states: f64, cap: usize },

    #[error("annulus has {states} exterior assignments, above the cap {cap}")]
    AnnulusTooLarge { states: f64, cap: usize },

    #[error("event depends on sites inside the kernel volume")]
    EventInsideVolume,

    #[error("kernel entry is zero; relative energy undefined")]
    ZeroKernelEntry,

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("transfer matrix must be strictly positive")]
    NonPositiveTransfer,

    #[error("operation needs a one-dimensional nearest-neighbour translation-invariant potential")]
    NoTransferStructure,

    #[error("decimation factor {b} does not divide the window extents")]
    DecimationMismatch { b: usize },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid disorder law: {0}")]
    InvalidLaw(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::InvalidConfig(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
