//! Sensitivity, specificity and threshold-swept ROC curves against a
//! reference mask.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{MapKind, PixelMap};
use crate::segmentation::threshold_unchecked;

fn confusion(mask: &PixelMap, reference: &PixelMap) -> Result<[usize; 4]> {
    mask.expect_kind(MapKind::Binary)?;
    reference.expect_kind(MapKind::Binary)?;
    mask.same_shape(reference)?;
    // [tp, fn, fp, tn]
    let mut c = [0usize; 4];
    for (&m, &r) in mask.values().iter().zip(reference.values()) {
        let idx = match (m != 0.0, r != 0.0) {
            (true, true) => 0,
            (false, true) => 1,
            (true, false) => 2,
            (false, false) => 3,
        };
        c[idx] += 1;
    }
    Ok(c)
}

/// `|mask ∧ ref| / |ref|`.
pub fn sensitivity(mask: &PixelMap, reference: &PixelMap) -> Result<f64> {
    let [tp, fn_, _, _] = confusion(mask, reference)?;
    if tp + fn_ == 0 {
        return Err(Error::EmptyReference);
    }
    Ok(tp as f64 / (tp + fn_) as f64)
}

/// `|¬mask ∧ ¬ref| / |¬ref|`.
pub fn specificity(mask: &PixelMap, reference: &PixelMap) -> Result<f64> {
    let [_, _, fp, tn] = confusion(mask, reference)?;
    if fp + tn == 0 {
        return Err(Error::FullReference);
    }
    Ok(tn as f64 / (fp + tn) as f64)
}

/// Threshold sweep `start, start + step, ..., end` (inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RocSweep {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl Default for RocSweep {
    fn default() -> Self {
        Self {
            start: 0.1,
            end: 1.0,
            step: 0.05,
        }
    }
}

impl RocSweep {
    pub fn thresholds(&self) -> Result<Vec<f64>> {
        let Self { start, end, step } = *self;
        if !(start.is_finite() && end.is_finite() && step.is_finite() && step > 0.0 && start <= end)
        {
            return Err(Error::InvalidSweep { start, end, step });
        }
        let n = libm::floor((end - start) / step + 1e-9) as usize + 1;
        Ok((0..n)
            .map(|i| (start + i as f64 * step).min(end))
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// Thresholds `map` at every sweep value and scores each mask against
/// `reference`. The AUC integrates sensitivity over `1 − specificity`.
pub fn roc_curve(map: &PixelMap, reference: &PixelMap, sweep: &RocSweep) -> Result<RocCurve> {
    reference.expect_kind(MapKind::Binary)?;
    map.same_shape(reference)?;
    let points = sweep
        .thresholds()?
        .into_iter()
        .map(|t| {
            let mask = threshold_unchecked(map, t);
            Ok(RocPoint {
                threshold: t,
                sensitivity: sensitivity(&mask, reference)?,
                specificity: specificity(&mask, reference)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let auc = auc(points.iter().map(|p| (1.0 - p.specificity, p.sensitivity)));
    Ok(RocCurve { points, auc })
}

/// Trapezoidal area under `(false positive rate, true positive rate)`
/// points, anchored at (0, 0) and (1, 1). Points are sorted by x then y and
/// duplicates dropped before integrating.
pub fn auc(points: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    let mut pts: Vec<(f64, f64)> = points.into_iter().collect();
    pts.push((0.0, 0.0));
    pts.push((1.0, 1.0));
    pts.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    pts.windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) * 0.5)
        .sum()
}
