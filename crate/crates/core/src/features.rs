//! Per-pixel antecedent variables for the fuzzy models.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gating::MeanCycle;
use crate::grid::{CycleKind, MapKind, PixelMap, GRID_HEIGHT, GRID_PIXELS, GRID_WIDTH};
use crate::stats;

/// Position code of an anterior pixel (rows 1–16).
pub const ANTERIOR: f64 = 0.0;
/// Position code of a posterior pixel (rows 17–32).
pub const POSTERIOR: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBundle {
    pub perfusion_amplitude: PixelMap,
    pub ventilation_amplitude: PixelMap,
    pub time_delay: PixelMap,
    pub position: PixelMap,
}

impl FeatureBundle {
    /// Derives all four feature maps from a mean cardiac and a mean
    /// respiratory cycle.
    pub fn from_cycles(cardiac: &MeanCycle, respiratory: &MeanCycle) -> Result<Self> {
        if respiratory.kind() != CycleKind::Respiratory {
            return Err(Error::InvalidConfig(alloc::format!(
                "ventilation amplitude needs a respiratory cycle, got {}",
                respiratory.kind()
            )));
        }
        Ok(Self {
            perfusion_amplitude: normalize_map(&amplitude_map(cardiac)?)?,
            ventilation_amplitude: normalize_map(&amplitude_map(respiratory)?)?,
            time_delay: time_delay_map(cardiac)?,
            position: position_map(),
        })
    }
}

fn grid_map(cycle: &MeanCycle, kind: MapKind, values: Vec<f64>) -> Result<PixelMap> {
    if cycle.pixels() != GRID_PIXELS {
        return Err(Error::DimensionMismatch {
            expected: GRID_PIXELS,
            found: cycle.pixels(),
        });
    }
    PixelMap::new(kind, values)
}

/// Peak-to-peak excursion of every pixel over the cycle.
pub fn amplitude_map(cycle: &MeanCycle) -> Result<PixelMap> {
    let mut lo = cycle.frame(0).to_vec();
    let mut hi = lo.clone();
    for frame in cycle.frames().skip(1) {
        for ((l, h), &v) in lo.iter_mut().zip(hi.iter_mut()).zip(frame) {
            *l = l.min(v);
            *h = h.max(v);
        }
    }
    let values = hi.iter().zip(&lo).map(|(h, l)| h - l).collect();
    grid_map(cycle, MapKind::Amplitude, values)
}

/// Divides by the largest value. An all-zero map stays all zero.
pub fn normalize_map(map: &PixelMap) -> Result<PixelMap> {
    if let Some((pixel, &value)) = map.values().iter().enumerate().find(|(_, &v)| v < 0.0) {
        return Err(Error::NegativeInput { pixel, value });
    }
    let (_, max) = stats::min_max(map.values());
    let values = if max > 0.0 {
        map.values().iter().map(|v| v / max).collect()
    } else {
        alloc::vec![0.0; map.len()]
    };
    PixelMap::with_shape(map.width(), map.height(), MapKind::Normalized, values)
}

/// Phase of each pixel's maximum within a mean cardiac cycle, in `[0, 1)`.
///
/// Phase 0 is the R-wave trigger. Ties resolve to the earliest frame, so a
/// flat pixel has delay 0.
pub fn time_delay_map(cycle: &MeanCycle) -> Result<PixelMap> {
    if cycle.kind() != CycleKind::Cardiac {
        return Err(Error::InvalidConfig(alloc::format!(
            "time delay needs a cardiac cycle, got {}",
            cycle.kind()
        )));
    }
    let len = cycle.len();
    let mut best = cycle.frame(0).to_vec();
    let mut arg = alloc::vec![0usize; cycle.pixels()];
    for (k, frame) in cycle.frames().enumerate().skip(1) {
        for ((b, a), &v) in best.iter_mut().zip(arg.iter_mut()).zip(frame) {
            if v > *b {
                *b = v;
                *a = k;
            }
        }
    }
    let values = arg.iter().map(|&k| k as f64 / len as f64).collect();
    grid_map(cycle, MapKind::TimeDelay, values)
}

/// 0 for the upper half of the image (pixel orders 1–512), 1 below.
pub fn position_map() -> PixelMap {
    let values = (0..GRID_PIXELS)
        .map(|p| {
            if p / GRID_WIDTH < GRID_HEIGHT / 2 {
                ANTERIOR
            } else {
                POSTERIOR
            }
        })
        .collect();
    PixelMap::from_parts_unchecked(GRID_WIDTH, GRID_HEIGHT, MapKind::Binary, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::PI;

    fn cycle_from(kind: CycleKind, len: usize, f: impl Fn(usize, usize) -> f64) -> MeanCycle {
        let mut data = Vec::new();
        for k in 0..len {
            for p in 0..GRID_PIXELS {
                data.push(f(k, p));
            }
        }
        MeanCycle::new(kind, GRID_PIXELS, data, 1).unwrap()
    }

    #[test]
    fn amplitude_examples() {
        let seq = [1.0, 3.0, 2.0];
        let c = cycle_from(CycleKind::Cardiac, 3, |k, p| if p == 0 { 5.0 } else { seq[k] });
        let a = amplitude_map(&c).unwrap();
        assert_eq!(a.values()[0], 0.0);
        assert_eq!(a.values()[1], 2.0);
        assert_eq!(a.kind(), MapKind::Amplitude);
    }

    #[test]
    fn amplitude_of_sampled_sine() {
        // L = 50 samples of 0.7 sin(2 pi k / L): extrema at k = 12.5 and 37.5
        // are missed by half a sample, so peak-to-peak is 1.4 cos(pi / 50).
        let c = cycle_from(CycleKind::Cardiac, 50, |k, _| {
            0.7 * libm::sin(2.0 * PI * k as f64 / 50.0)
        });
        let a = amplitude_map(&c).unwrap();
        assert!((a.values()[10] - 1.4).abs() < 3e-3);
        let c = cycle_from(CycleKind::Cardiac, 100, |k, _| {
            0.7 * libm::sin(2.0 * PI * k as f64 / 100.0)
        });
        assert!((amplitude_map(&c).unwrap().values()[0] - 1.4).abs() < 1e-3);
    }

    #[test]
    fn normalize_examples() {
        let m = PixelMap::with_shape(3, 1, MapKind::Amplitude, vec![0.0, 2.0, 4.0]).unwrap();
        assert_eq!(normalize_map(&m).unwrap().values(), [0.0, 0.5, 1.0]);
        let z = PixelMap::filled(MapKind::Amplitude, 0.0).unwrap();
        assert!(normalize_map(&z).unwrap().values().iter().all(|&v| v == 0.0));
        let neg = PixelMap::with_shape(2, 1, MapKind::Amplitude, vec![1.0, -1.0]).unwrap();
        assert_eq!(
            normalize_map(&neg).unwrap_err(),
            Error::NegativeInput {
                pixel: 1,
                value: -1.0
            }
        );
    }

    #[test]
    fn time_delay_examples() {
        let c = cycle_from(CycleKind::Cardiac, 50, |k, p| match p {
            0 => if k == 0 { 1.0 } else { 0.0 },
            1 => if k == 25 { 1.0 } else { 0.0 },
            _ => 3.0,
        });
        let td = time_delay_map(&c).unwrap();
        assert_eq!(td.values()[0], 0.0);
        assert_eq!(td.values()[1], 0.5);
        assert_eq!(td.values()[2], 0.0);
        let r = cycle_from(CycleKind::Respiratory, 4, |_, _| 0.0);
        assert!(time_delay_map(&r).is_err());
    }

    #[test]
    fn position_halves() {
        let pos = position_map();
        assert_eq!(pos.values()[0], ANTERIOR);
        assert_eq!(pos.values()[511], ANTERIOR);
        assert_eq!(pos.values()[512], POSTERIOR);
        assert_eq!(pos.count_ones(), 512);
    }
}
