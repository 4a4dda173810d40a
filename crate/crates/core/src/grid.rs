use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GRID_WIDTH: usize = 32;
pub const GRID_HEIGHT: usize = 32;
pub const GRID_PIXELS: usize = GRID_WIDTH * GRID_HEIGHT;

/// Time series of reconstructed impedance images.
///
/// Frames are stored frame-major, row-major, as single precision values,
/// which is also the on-disk payload layout. Pixel 0 is the upper-left
/// corner.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    width: usize,
    height: usize,
    sample_rate: f64,
    data: Vec<f32>,
}

impl FrameSequence {
    pub fn new(width: usize, height: usize, sample_rate: f64, data: Vec<f32>) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::InvalidSampleRate(sample_rate));
        }
        let pixels = width * height;
        if pixels == 0 || data.is_empty() {
            return Err(Error::EmptySequence);
        }
        if data.len() % pixels != 0 {
            return Err(Error::DimensionMismatch {
                expected: (data.len() / pixels + 1) * pixels,
                found: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            sample_rate,
            data,
        })
    }

    /// Builds a sequence on the standard 32×32 grid from individual frames.
    pub fn from_frames(sample_rate: f64, frames: &[Vec<f32>]) -> Result<Self> {
        let mut data = Vec::with_capacity(frames.len() * GRID_PIXELS);
        for frame in frames {
            if frame.len() != GRID_PIXELS {
                return Err(Error::DimensionMismatch {
                    expected: GRID_PIXELS,
                    found: frame.len(),
                });
            }
            data.extend_from_slice(frame);
        }
        Self::new(GRID_WIDTH, GRID_HEIGHT, sample_rate, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn frame_count(&self) -> usize {
        self.data.len() / self.pixels()
    }

    pub fn frame(&self, index: usize) -> &[f32] {
        let n = self.pixels();
        &self.data[index * n..(index + 1) * n]
    }

    pub fn frames(&self) -> impl ExactSizeIterator<Item = &[f32]> {
        self.data.chunks_exact(self.pixels())
    }

    /// Flat frame-major payload.
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn ensure_standard_grid(&self) -> Result<()> {
        if self.width != GRID_WIDTH || self.height != GRID_HEIGHT {
            return Err(Error::UnsupportedGrid {
                width: self.width,
                height: self.height,
                expected_width: GRID_WIDTH,
                expected_height: GRID_HEIGHT,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleKind {
    Cardiac,
    Respiratory,
}

impl CycleKind {
    pub fn tag(self) -> &'static str {
        match self {
            CycleKind::Cardiac => "cardiac",
            CycleKind::Respiratory => "respiratory",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "cardiac" => Some(CycleKind::Cardiac),
            "respiratory" => Some(CycleKind::Respiratory),
            _ => None,
        }
    }
}

impl fmt::Display for CycleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Ordered frame indices of cycle starts (R-waves or inspiration starts).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriggerTrain {
    kind: CycleKind,
    indices: Vec<usize>,
}

impl TriggerTrain {
    pub fn new(kind: CycleKind, indices: Vec<usize>) -> Result<Self> {
        if let Some(position) = indices.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::NonMonotonicTriggers {
                position: position + 1,
            });
        }
        Ok(Self { kind, indices })
    }

    pub fn kind(&self) -> CycleKind {
        self.kind
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Checks that every index addresses a frame of a sequence of `frames`.
    pub fn check_against(&self, frames: usize) -> Result<()> {
        match self.indices.last() {
            Some(&index) if index >= frames => Err(Error::TriggerOutOfRange { index, frames }),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Amplitude,
    Normalized,
    TimeDelay,
    Possibility,
    Binary,
    RegionLabel,
}

impl MapKind {
    pub fn name(self) -> &'static str {
        match self {
            MapKind::Amplitude => "amplitude",
            MapKind::Normalized => "normalized",
            MapKind::TimeDelay => "time_delay",
            MapKind::Possibility => "possibility",
            MapKind::Binary => "binary",
            MapKind::RegionLabel => "region_label",
        }
    }

    fn admits(self, v: f64) -> bool {
        match self {
            MapKind::Amplitude => v.is_finite(),
            MapKind::Normalized | MapKind::Possibility | MapKind::TimeDelay => {
                (0.0..=1.0).contains(&v)
            }
            MapKind::Binary => v == 0.0 || v == 1.0,
            MapKind::RegionLabel => v == 0.0 || v == 1.0 || v == 2.0 || v == 3.0,
        }
    }
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A scalar field over the image grid, row-major, pixel 0 upper-left.
///
/// The kind invariant is checked on construction; the standard grid is
/// 32×32 but smaller grids are accepted for fixtures.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelMap {
    width: usize,
    height: usize,
    kind: MapKind,
    values: Vec<f64>,
}

impl PixelMap {
    pub fn new(kind: MapKind, values: Vec<f64>) -> Result<Self> {
        Self::with_shape(GRID_WIDTH, GRID_HEIGHT, kind, values)
    }

    pub fn with_shape(width: usize, height: usize, kind: MapKind, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                found: values.len(),
            });
        }
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some((pixel, &value)) = values.iter().enumerate().find(|(_, &v)| !kind.admits(v)) {
            return Err(Error::InvalidMapValue { pixel, value, kind });
        }
        Ok(Self {
            width,
            height,
            kind,
            values,
        })
    }

    pub fn filled(kind: MapKind, value: f64) -> Result<Self> {
        Self::new(kind, vec![value; GRID_PIXELS])
    }

    pub(crate) fn from_parts_unchecked(
        width: usize,
        height: usize,
        kind: MapKind,
        values: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(values.len(), width * height);
        Self {
            width,
            height,
            kind,
            values,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Reinterprets the map under another kind, re-checking the invariant.
    pub fn with_kind(self, kind: MapKind) -> Result<Self> {
        Self::with_shape(self.width, self.height, kind, self.values)
    }

    pub fn count_ones(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0.0).count()
    }

    pub(crate) fn same_shape(&self, other: &PixelMap) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::ShapeMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }

    pub(crate) fn expect_kind(&self, expected: MapKind) -> Result<()> {
        if self.kind != expected {
            return Err(Error::KindMismatch {
                expected,
                found: self.kind,
            });
        }
        Ok(())
    }
}
