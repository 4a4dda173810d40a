//! Threshold segmentation of possibility maps.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{MapKind, PixelMap};

/// Region codes of [`three_region_segment`].
pub const BACKGROUND: f64 = 0.0;
pub const MATCHED: f64 = 1.0;
pub const PREDOMINANTLY_PERFUSED: f64 = 2.0;
pub const PREDOMINANTLY_VENTILATED: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationConfig {
    pub ventilation_threshold: f64,
    pub perfusion_threshold: f64,
    /// Threshold turning the reference image into a mask.
    pub reference_threshold: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            ventilation_threshold: 0.31,
            perfusion_threshold: 0.28,
            reference_threshold: 0.1,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<()> {
        for t in [
            self.ventilation_threshold,
            self.perfusion_threshold,
            self.reference_threshold,
        ] {
            check_threshold(t)?;
        }
        Ok(())
    }
}

fn check_threshold(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::ThresholdOutOfRange(t))
    }
}

fn check_graded(map: &PixelMap) -> Result<()> {
    match map.kind() {
        MapKind::Normalized | MapKind::Possibility => Ok(()),
        found => Err(Error::KindMismatch {
            expected: MapKind::Possibility,
            found,
        }),
    }
}

/// 1 where `value >= t`, else 0.
pub fn threshold_map(map: &PixelMap, t: f64) -> Result<PixelMap> {
    check_threshold(t)?;
    check_graded(map)?;
    Ok(threshold_unchecked(map, t))
}

pub(crate) fn threshold_unchecked(map: &PixelMap, t: f64) -> PixelMap {
    let values = map
        .values()
        .iter()
        .map(|&v| if v >= t { 1.0 } else { 0.0 })
        .collect();
    PixelMap::from_parts_unchecked(map.width(), map.height(), MapKind::Binary, values)
}

/// Pixel-wise OR of two binary masks.
pub fn union_mask(a: &PixelMap, b: &PixelMap) -> Result<PixelMap> {
    a.expect_kind(MapKind::Binary)?;
    b.expect_kind(MapKind::Binary)?;
    a.same_shape(b)?;
    let values = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| if x != 0.0 || y != 0.0 { 1.0 } else { 0.0 })
        .collect();
    Ok(PixelMap::from_parts_unchecked(
        a.width(),
        a.height(),
        MapKind::Binary,
        values,
    ))
}

/// Labels every pixel as background, matched, predominantly perfused or
/// predominantly ventilated.
pub fn three_region_segment(
    ventilation: &PixelMap,
    perfusion: &PixelMap,
    cfg: &SegmentationConfig,
) -> Result<PixelMap> {
    check_threshold(cfg.ventilation_threshold)?;
    check_threshold(cfg.perfusion_threshold)?;
    check_graded(ventilation)?;
    check_graded(perfusion)?;
    ventilation.same_shape(perfusion)?;
    let values: Vec<f64> = ventilation
        .values()
        .iter()
        .zip(perfusion.values())
        .map(|(&v, &p)| {
            match (v >= cfg.ventilation_threshold, p >= cfg.perfusion_threshold) {
                (true, true) => MATCHED,
                (false, true) => PREDOMINANTLY_PERFUSED,
                (true, false) => PREDOMINANTLY_VENTILATED,
                (false, false) => BACKGROUND,
            }
        })
        .collect();
    Ok(PixelMap::from_parts_unchecked(
        ventilation.width(),
        ventilation.height(),
        MapKind::RegionLabel,
        values,
    ))
}

/// Mask of the pixels carrying any of `labels`.
pub fn region_mask(segmented: &PixelMap, labels: &[f64]) -> Result<PixelMap> {
    segmented.expect_kind(MapKind::RegionLabel)?;
    let values = segmented
        .values()
        .iter()
        .map(|v| if labels.contains(v) { 1.0 } else { 0.0 })
        .collect();
    Ok(PixelMap::from_parts_unchecked(
        segmented.width(),
        segmented.height(),
        MapKind::Binary,
        values,
    ))
}
