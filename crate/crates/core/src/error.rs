use alloc::string::String;

use crate::fuzzy::FuzzyError;
use crate::grid::{CycleKind, MapKind};

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("expected {expected} values, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("grid must be {expected_width}x{expected_height}, got {width}x{height}")]
    UnsupportedGrid {
        width: usize,
        height: usize,
        expected_width: usize,
        expected_height: usize,
    },
    #[error("sample rate must be positive and finite, got {0}")]
    InvalidSampleRate(f64),
    #[error("frame sequence is empty")]
    EmptySequence,
    #[error("trigger indices must be strictly increasing (position {position})")]
    NonMonotonicTriggers { position: usize },
    #[error("trigger index {index} is outside a sequence of {frames} frames")]
    TriggerOutOfRange { index: usize, frames: usize },
    #[error("{kind} trigger train does not match a {expected} gating request")]
    TriggerKindMismatch { kind: CycleKind, expected: CycleKind },
    #[error("no complete cycle of at least two frames between triggers")]
    NoCompleteCycle,
    #[error("empty input")]
    EmptyInput,
    #[error("invalid length {0}, must be at least 2")]
    InvalidLength(usize),
    #[error("invalid group size {0}, must be at least 1")]
    InvalidGroupSize(usize),
    #[error("negative value {value} at pixel {pixel}")]
    NegativeInput { pixel: usize, value: f64 },
    #[error("value {value} at pixel {pixel} violates the {kind} map invariant")]
    InvalidMapValue {
        pixel: usize,
        value: f64,
        kind: MapKind,
    },
    #[error("map kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: MapKind, found: MapKind },
    #[error("map shape mismatch: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("threshold {0} is outside [0, 1]")]
    ThresholdOutOfRange(f64),
    #[error("reference mask has no positive pixel")]
    EmptyReference,
    #[error("reference mask has no negative pixel")]
    FullReference,
    #[error("invalid threshold sweep: start {start}, end {end}, step {step}")]
    InvalidSweep { start: f64, end: f64, step: f64 },
    #[error("region `{0}` does not fit inside the grid")]
    RegionOutOfGrid(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("rule base does not match the model inputs: {0}")]
    RuleBaseMismatch(String),
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
}
