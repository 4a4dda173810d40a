//! End-to-end analysis: gating → features → models per acquisition, then
//! median maps, segmentation and evaluation across acquisitions.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::evaluation::{roc_curve, RocCurve, RocSweep};
use crate::features::FeatureBundle;
use crate::gating::{self, MeanCycle, CARDIAC_GROUP_SIZE, RESPIRATORY_GROUP_SIZE};
use crate::grid::{CycleKind, FrameSequence, MapKind, PixelMap, TriggerTrain};
use crate::models::{median_image, ModelMaps, ModelSuite};
use crate::segmentation::{
    threshold_map, three_region_segment, union_mask, SegmentationConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Gate,
    Features,
    Infer,
    Median,
    Segment,
    Evaluate,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Gate => "gate",
            Stage::Features => "features",
            Stage::Infer => "infer",
            Stage::Median => "median",
            Stage::Segment => "segment",
            Stage::Evaluate => "evaluate",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{stage} stage failed: {source}")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, StageError>;
}

impl<T> AtStage<T> for Result<T, Error> {
    fn at(self, stage: Stage) -> Result<T, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatingParams {
    pub cardiac_group_size: usize,
    pub respiratory_group_size: usize,
    /// Common resampled cycle length; `None` uses the median cycle length.
    pub cardiac_length: Option<usize>,
    pub respiratory_length: Option<usize>,
}

impl Default for GatingParams {
    fn default() -> Self {
        Self {
            cardiac_group_size: CARDIAC_GROUP_SIZE,
            respiratory_group_size: RESPIRATORY_GROUP_SIZE,
            cardiac_length: None,
            respiratory_length: None,
        }
    }
}

/// Gated series of one acquisition plus the pooled mean cycle the features
/// are computed from.
#[derive(Debug, Clone)]
pub struct Gated {
    pub series: Vec<MeanCycle>,
    pub pooled: MeanCycle,
}

pub fn gate(
    frames: &FrameSequence,
    triggers: &TriggerTrain,
    expected: CycleKind,
    group_size: usize,
    length: Option<usize>,
) -> Result<Gated, Error> {
    if triggers.kind() != expected {
        return Err(Error::TriggerKindMismatch {
            kind: triggers.kind(),
            expected,
        });
    }
    let series = gating::gated_series(frames, triggers, group_size, length)?;
    let pooled = gating::pool(&series)?;
    Ok(Gated { series, pooled })
}

#[derive(Debug, Clone)]
pub struct AcquisitionResult {
    pub cardiac: Gated,
    pub respiratory: Gated,
    pub features: FeatureBundle,
    pub maps: ModelMaps,
}

pub fn analyze_acquisition(
    frames: &FrameSequence,
    cardiac: &TriggerTrain,
    respiratory: &TriggerTrain,
    suite: &ModelSuite,
    params: &GatingParams,
) -> Result<AcquisitionResult, StageError> {
    frames.ensure_standard_grid().at(Stage::Gate)?;
    let cardiac_gated = gate(
        frames,
        cardiac,
        CycleKind::Cardiac,
        params.cardiac_group_size,
        params.cardiac_length,
    )
    .at(Stage::Gate)?;
    let respiratory_gated = gate(
        frames,
        respiratory,
        CycleKind::Respiratory,
        params.respiratory_group_size,
        params.respiratory_length,
    )
    .at(Stage::Gate)?;
    let features = FeatureBundle::from_cycles(&cardiac_gated.pooled, &respiratory_gated.pooled)
        .at(Stage::Features)?;
    let maps = suite.run(&features).at(Stage::Infer)?;
    Ok(AcquisitionResult {
        cardiac: cardiac_gated,
        respiratory: respiratory_gated,
        features,
        maps,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub perfusion_mask: PixelMap,
    pub ventilation_mask: PixelMap,
    pub total_lung_mask: PixelMap,
    pub regions: PixelMap,
}

pub fn segment(
    perfusion: &PixelMap,
    ventilation: &PixelMap,
    cfg: &SegmentationConfig,
) -> Result<Segmentation, Error> {
    cfg.validate()?;
    let perfusion_mask = threshold_map(perfusion, cfg.perfusion_threshold)?;
    let ventilation_mask = threshold_map(ventilation, cfg.ventilation_threshold)?;
    let total_lung_mask = union_mask(&perfusion_mask, &ventilation_mask)?;
    let regions = three_region_segment(ventilation, perfusion, cfg)?;
    Ok(Segmentation {
        perfusion_mask,
        ventilation_mask,
        total_lung_mask,
        regions,
    })
}

/// Turns a graded reference image into a mask at `threshold` and sweeps
/// `map` against it.
pub fn evaluate(
    map: &PixelMap,
    reference: &PixelMap,
    threshold: f64,
    sweep: &RocSweep,
) -> Result<RocCurve, Error> {
    let reference = match reference.kind() {
        MapKind::Binary => reference.clone(),
        _ => threshold_map(reference, threshold)?,
    };
    roc_curve(map, &reference, sweep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Combined {
    pub median_heart: PixelMap,
    pub median_perfusion: PixelMap,
    pub median_ventilation: PixelMap,
    pub segmentation: Segmentation,
    pub roc: Option<RocCurve>,
}

/// Median maps over acquisitions, then segmentation and, if a reference is
/// given, ROC evaluation of the median perfusion map.
pub fn combine(
    acquisitions: &[ModelMaps],
    cfg: &SegmentationConfig,
    reference: Option<(&PixelMap, &RocSweep)>,
) -> Result<Combined, StageError> {
    let median = |pick: fn(&ModelMaps) -> &PixelMap| {
        let maps: Vec<PixelMap> = acquisitions.iter().map(|a| pick(a).clone()).collect();
        median_image(&maps).at(Stage::Median)
    };
    let median_heart = median(|m| &m.heart)?;
    let median_perfusion = median(|m| &m.perfusion)?;
    let median_ventilation = median(|m| &m.ventilation)?;
    let segmentation = segment(&median_perfusion, &median_ventilation, cfg).at(Stage::Segment)?;
    let roc = reference
        .map(|(r, sweep)| evaluate(&median_perfusion, r, cfg.reference_threshold, sweep))
        .transpose()
        .at(Stage::Evaluate)?;
    Ok(Combined {
        median_heart,
        median_perfusion,
        median_ventilation,
        segmentation,
        roc,
    })
}
