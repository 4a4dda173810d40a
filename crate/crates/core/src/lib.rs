//! Image-analysis core for 32×32 electrical impedance tomography (EIT)
//! sequences.
//!
//! The crate covers the whole numeric path from reconstructed frame
//! sequences to segmented lung maps:
//!
//! * [`gating`] slices a sequence at cardiac or respiratory triggers and
//!   averages the cycles into mean cycles;
//! * [`features`] turns mean cycles into per-pixel amplitude, time-delay and
//!   position maps;
//! * [`fuzzy`] is a generic Mamdani engine with centre-of-area
//!   defuzzification;
//! * [`models`] runs the heart, lung-perfusion and lung-ventilation rule
//!   bases over every pixel;
//! * [`segmentation`] and [`evaluation`] threshold the possibility maps and
//!   score them against a reference mask;
//! * [`phantom`] synthesises deterministic test data with known ground truth.
//!
//! Everything here is `no_std` with `alloc`; file formats and the command
//! line live in the `eitmap` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

mod error;
pub mod evaluation;
pub mod features;
pub mod fuzzy;
pub mod gating;
mod grid;
pub mod models;
pub mod phantom;
pub mod pipeline;
pub mod segmentation;
pub(crate) mod stats;

pub use crate::error::{Error, Result};
pub use crate::grid::{
    CycleKind, FrameSequence, MapKind, PixelMap, TriggerTrain, GRID_HEIGHT, GRID_PIXELS,
    GRID_WIDTH,
};
