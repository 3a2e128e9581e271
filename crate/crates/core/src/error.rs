//! Crate-wide error type.
//!
//! Every fallible operation returns [`Result`]; precondition violations carry
//! enough context (coordinates, sizes, names) to act on without a debugger.

use thiserror::Error;

/// Errors produced by grid, functional, mode, photon and detector routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A field generator or input array produced a non-finite sample.
    #[error("non-finite sample {value} at grid node ({coords}) of field `{context}`")]
    NonFiniteSample {
        value: String,
        coords: String,
        context: &'static str,
    },

    /// Requested grid exceeds the sample-count cap.
    #[error(
        "grid of {requested} samples ({n} per axis, dim {dim}) exceeds the cap of 2^27 = {cap} \
         samples; reduce samples_per_axis or dim"
    )]
    GridTooLarge { requested: u128, n: usize, dim: usize, cap: u64 },

    /// Grid parameters fail basic validity (N >= 2, extent > 0, dim in 1..=3).
    #[error("invalid grid parameters: {0}")]
    InvalidGrid(String),

    /// Operation received a field in the wrong space (position vs frequency).
    #[error("{op} expects a {expected}-space field, got {got}-space")]
    SpaceMismatch { op: &'static str, expected: &'static str, got: &'static str },

    /// Two fields that must share a grid do not.
    #[error("incompatible grids: {0}")]
    GridMismatch(String),

    /// A density had negative samples beyond the tolerance.
    #[error("density has negative sample {value} at node ({coords}); tolerance is -1e-12 × max")]
    NegativeDensity { value: f64, coords: String },

    /// A density or mode was identically zero (or numerically so).
    #[error("{context} is identically zero; cannot normalize")]
    ZeroField { context: &'static str },

    /// Dimension outside the supported 1..=3 range.
    #[error("dimension {dim} unsupported; this crate covers d = 1, 2, 3")]
    UnsupportedDim { dim: usize },

    /// A compactly supported object does not fit inside the grid extent.
    #[error("{what} (needs half-width {needed}) exceeds the available half-extent {extent}")]
    SupportExceedsGrid { what: String, needed: f64, extent: f64 },

    /// Momentum-space representation under-resolved on the requested grid.
    #[error(
        "momentum representation under-resolved: {what} = {value:.3e} exceeds {limit:.0e}; \
         {advice}"
    )]
    UnderResolved { what: &'static str, value: f64, limit: f64, advice: String },

    /// Invalid photon-state parameters.
    #[error("invalid photon state: {0}")]
    InvalidState(String),

    /// Invalid mode parameters.
    #[error("invalid mode: {0}")]
    InvalidMode(String),

    /// Invalid detector / experiment parameters.
    #[error("invalid detector input: {0}")]
    InvalidDetector(String),

    /// Binning or bunching factor does not divide the stack shape.
    #[error("{what} {factor} does not divide {axis} size {size}")]
    NonDivisorFactor { what: &'static str, factor: usize, axis: &'static str, size: usize },

    /// Frame-stack statistics degenerate (e.g. zero temporal variance).
    #[error("degenerate frame statistics: {0}")]
    DegenerateStatistics(String),

    /// Malformed NRU1 / CSV frame data.
    #[error("frame format error: {0}")]
    Format(String),

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
