//! Pipeline configuration file.
//!
//! Relative paths are resolved against the directory holding the
//! configuration file. Rule-base paths left out (or `null`) select the
//! embedded defaults.

use std::fs;
use std::path::{Path, PathBuf};

use eitmap_core::evaluation::RocSweep;
use eitmap_core::pipeline::GatingParams;
use eitmap_core::segmentation::SegmentationConfig;
use serde::{Deserialize, Serialize};

use crate::error::RunError;

pub const DEFAULT_ACQUISITION_COUNT: usize = 7;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcquisitionPaths {
    pub frames: PathBuf,
    pub cardiac_triggers: PathBuf,
    pub respiratory_triggers: PathBuf,
}

impl AcquisitionPaths {
    /// The layout written by `eitmap phantom`.
    pub fn standard(index: usize) -> Self {
        let dir = PathBuf::from(format!("acq_{index}"));
        Self {
            frames: dir.join("frames.eitf"),
            cardiac_triggers: dir.join("cardiac.trg"),
            respiratory_triggers: dir.join("respiratory.trg"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuleBasePaths {
    pub heart: Option<PathBuf>,
    pub perfusion: Option<PathBuf>,
    pub ventilation: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Expected number of acquisitions; must match `acquisitions`.
    pub acquisition_count: usize,
    pub acquisitions: Vec<AcquisitionPaths>,
    pub rule_bases: RuleBasePaths,
    pub gating: GatingParams,
    pub segmentation: SegmentationConfig,
    pub roc: RocSweep,
    /// Graded or binary reference image (CSV); evaluation is skipped when
    /// absent.
    pub reference: Option<PathBuf>,
    /// Used when no `--out` is given on the command line.
    pub output_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            acquisition_count: DEFAULT_ACQUISITION_COUNT,
            acquisitions: (0..DEFAULT_ACQUISITION_COUNT)
                .map(AcquisitionPaths::standard)
                .collect(),
            rule_bases: RuleBasePaths::default(),
            gating: GatingParams::default(),
            segmentation: SegmentationConfig::default(),
            roc: RocSweep::default(),
            reference: Some(PathBuf::from("reference.csv")),
            output_dir: None,
        }
    }
}

/// A parsed configuration together with its raw bytes (for hashing) and
/// the directory relative paths resolve against.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: PipelineConfig,
    pub raw: Vec<u8>,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

pub fn parse_config(bytes: &[u8]) -> Result<PipelineConfig, RunError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let config: PipelineConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        RunError::config("config", format!("at `{path}`: {}", e.into_inner()))
    })?;
    validate(&config)?;
    Ok(config)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<LoadedConfig, RunError> {
    let path = path.as_ref();
    let raw = fs::read(path).map_err(|e| RunError::config("config", e).at(path))?;
    let config = parse_config(&raw).map_err(|e| e.at(path))?;
    let base_dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(LoadedConfig {
        config,
        raw,
        base_dir,
    })
}

fn validate(c: &PipelineConfig) -> Result<(), RunError> {
    if c.acquisition_count == 0 {
        return Err(RunError::config("config", "acquisition_count must be positive"));
    }
    if c.acquisitions.len() != c.acquisition_count {
        return Err(RunError::config(
            "config",
            format!(
                "acquisition_count is {} but {} acquisitions are listed",
                c.acquisition_count,
                c.acquisitions.len()
            ),
        ));
    }
    c.segmentation
        .validate()
        .map_err(|e| RunError::config("config", format!("segmentation: {e}")))?;
    c.roc
        .thresholds()
        .map_err(|e| RunError::config("config", format!("roc: {e}")))?;
    if c.gating.cardiac_group_size == 0 || c.gating.respiratory_group_size == 0 {
        return Err(RunError::config("config", "gating group sizes must be positive"));
    }
    if matches!(c.gating.cardiac_length, Some(l) if l < 2)
        || matches!(c.gating.respiratory_length, Some(l) if l < 2)
    {
        return Err(RunError::config("config", "gating lengths must be at least 2"));
    }
    Ok(())
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("config types serialise");
    s.push('\n');
    s
}
