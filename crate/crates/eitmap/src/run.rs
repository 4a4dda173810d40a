//! Stage runners behind the `eitmap` subcommands.
//!
//! Every runner reads its inputs through [`crate::dataio`], computes with
//! [`eitmap_core`] and writes its outputs through an [`OutputTree`], which
//! also records a SHA-256 per file for the run manifest. Nothing written
//! depends on wall-clock time or thread scheduling.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use eitmap_core::evaluation::{RocCurve, RocSweep};
use eitmap_core::features::FeatureBundle;
use eitmap_core::gating::{extract_cycles, MeanCycle};
use eitmap_core::models::{median_image, ModelMaps, ModelSuite};
use eitmap_core::phantom::{generate_phantom, PhantomConfig};
use eitmap_core::pipeline::{
    analyze_acquisition, combine, evaluate, gate, segment, GatingParams, Segmentation, Stage,
};
use eitmap_core::segmentation::SegmentationConfig;
use eitmap_core::{CycleKind, FrameSequence, MapKind, PixelMap, TriggerTrain, GRID_HEIGHT, GRID_WIDTH};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{to_json_pretty, AcquisitionPaths, LoadedConfig, PipelineConfig, RuleBasePaths};
use crate::dataio::{self, DataError};
use crate::error::{ErrorClass, RunError};
use crate::rules;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Wraps a dataio failure: missing or unreadable files are data errors
/// like any malformed content, except where the caller says otherwise.
fn data_err(stage: impl std::fmt::Display, path: &Path, e: DataError) -> RunError {
    let class = match &e {
        DataError::Core(c) if matches!(c, eitmap_core::Error::InvalidConfig(_)) => ErrorClass::Config,
        _ => ErrorClass::Data,
    };
    RunError::new(class, stage, e).at(path)
}

/// Files written below one root directory, with their digests.
#[derive(Debug)]
pub struct OutputTree {
    root: PathBuf,
    files: BTreeMap<String, String>,
}

impl OutputTree {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            files: BTreeMap::new(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Relative path → SHA-256 of everything written so far.
    pub fn files(&self) -> &BTreeMap<String, String> {
        &self.files
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<PathBuf, RunError> {
        let path = self.root.join(rel);
        dataio::write_bytes(&path, bytes).map_err(|e| RunError::data("output", e).at(&path))?;
        self.files.insert(rel.to_owned(), sha256_hex(bytes));
        Ok(path)
    }

    /// `<rel>.csv` and `<rel>.pgm`.
    pub fn map(&mut self, rel: &str, map: &PixelMap) -> Result<(), RunError> {
        self.write(&format!("{rel}.csv"), dataio::map_to_csv(map).as_bytes())?;
        self.write(&format!("{rel}.pgm"), &dataio::map_to_pgm(map))?;
        Ok(())
    }

    pub fn frames(&mut self, rel: &str, seq: &FrameSequence) -> Result<(), RunError> {
        let mut bytes = Vec::new();
        dataio::write_frame_sequence(&mut bytes, seq).map_err(|e| RunError::data("output", e))?;
        self.write(rel, &bytes)?;
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), RunError> {
        self.write(rel, to_json_pretty(value).as_bytes())?;
        Ok(())
    }
}

// ------------------------------------------------------------ helpers

pub fn mean_cycle_to_sequence(mc: &MeanCycle, sample_rate: f64) -> Result<FrameSequence, RunError> {
    let data = mc.data().iter().map(|&v| v as f32).collect();
    FrameSequence::new(GRID_WIDTH, GRID_HEIGHT, sample_rate, data)
        .map_err(|e| RunError::from_core(Stage::Gate, &e))
}

pub fn sequence_to_mean_cycle(seq: &FrameSequence, kind: CycleKind) -> Result<MeanCycle, RunError> {
    let data = seq.data().iter().map(|&v| f64::from(v)).collect();
    MeanCycle::new(kind, seq.pixels(), data, 1).map_err(|e| RunError::from_core(Stage::Features, &e))
}

pub fn roc_csv(curve: &RocCurve) -> String {
    let mut out = String::from("threshold,sensitivity,specificity\n");
    for p in &curve.points {
        out.push_str(&format!("{},{},{}\n", p.threshold, p.sensitivity, p.specificity));
    }
    out.push_str(&format!("# auc={}\n", curve.auc));
    out
}

fn load_frames(stage: Stage, path: &Path) -> Result<FrameSequence, RunError> {
    let seq = dataio::load_frame_sequence(path).map_err(|e| data_err(stage, path, e))?;
    seq.ensure_standard_grid()
        .map_err(|e| RunError::from_core(stage, &e).at(path))?;
    Ok(seq)
}

fn load_triggers(stage: Stage, path: &Path, frames: usize) -> Result<TriggerTrain, RunError> {
    let t = dataio::load_trigger_train(path).map_err(|e| data_err(stage, path, e))?;
    t.check_against(frames)
        .map_err(|e| RunError::from_core(stage, &e).at(path))?;
    Ok(t)
}

fn load_map(stage: impl std::fmt::Display + Copy, path: &Path, kind: MapKind) -> Result<PixelMap, RunError> {
    dataio::load_pixel_map(path, kind).map_err(|e| data_err(stage, path, e))
}

// --------------------------------------------------------- rule bases

/// Where a rule base came from, as recorded in the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct RuleSource {
    pub source: String,
    pub sha256: String,
}

fn load_rule_base(
    which: &str,
    path: Option<&Path>,
    embedded: &str,
) -> Result<(eitmap_core::fuzzy::RuleBase, RuleSource), RunError> {
    let (text, source) = match path {
        None => (embedded.to_owned(), "embedded".to_owned()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| RunError::config(Stage::Infer, format!("{which} rule base: {e}")).at(p))?;
            (text, p.display().to_string())
        }
    };
    let rb = rules::parse_rule_base(&text).map_err(|e| {
        let err = RunError::model(Stage::Infer, format!("{which} rule base {e}"));
        match path {
            Some(p) => err.at(p),
            None => err,
        }
    })?;
    let sha256 = sha256_hex(text.as_bytes());
    Ok((rb, RuleSource { source, sha256 }))
}

/// Loads the three rule bases (embedded defaults where no path is given).
pub fn load_suite(
    heart: Option<&Path>,
    perfusion: Option<&Path>,
    ventilation: Option<&Path>,
) -> Result<(ModelSuite, BTreeMap<&'static str, RuleSource>), RunError> {
    let (h, hs) = load_rule_base("heart", heart, rules::DEFAULT_HEART)?;
    let (p, ps) = load_rule_base("perfusion", perfusion, rules::DEFAULT_PERFUSION)?;
    let (v, vs) = load_rule_base("ventilation", ventilation, rules::DEFAULT_VENTILATION)?;
    let suite = ModelSuite::new(h, p, v).map_err(|e| RunError::model(Stage::Infer, e))?;
    let sources = BTreeMap::from([("heart", hs), ("perfusion", ps), ("ventilation", vs)]);
    Ok((suite, sources))
}

// ------------------------------------------------------------ pipeline

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config_sha256: String,
    rule_bases: &'a BTreeMap<&'static str, RuleSource>,
    acquisitions: usize,
    auc: Option<f64>,
    outputs: &'a BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct PipelineSummary {
    pub auc: Option<f64>,
    pub out_dir: PathBuf,
}

fn check_inputs_exist(loaded: &LoadedConfig) -> Result<(), RunError> {
    let cfg = &loaded.config;
    let mut required: Vec<(Stage, PathBuf)> = Vec::new();
    for acq in &cfg.acquisitions {
        required.push((Stage::Gate, acq.frames.clone()));
        required.push((Stage::Gate, acq.cardiac_triggers.clone()));
        required.push((Stage::Gate, acq.respiratory_triggers.clone()));
    }
    let RuleBasePaths {
        heart,
        perfusion,
        ventilation,
    } = &cfg.rule_bases;
    for p in [heart, perfusion, ventilation].into_iter().flatten() {
        required.push((Stage::Infer, p.clone()));
    }
    if let Some(r) = &cfg.reference {
        required.push((Stage::Evaluate, r.clone()));
    }
    for (stage, p) in required {
        let path = loaded.resolve(&p);
        if !path.is_file() {
            return Err(RunError::config(stage, "input file not found").at(path));
        }
    }
    Ok(())
}

fn analyze_one(
    loaded: &LoadedConfig,
    acq: &AcquisitionPaths,
    suite: &ModelSuite,
    params: &GatingParams,
) -> Result<(f64, eitmap_core::pipeline::AcquisitionResult), RunError> {
    let frames_path = loaded.resolve(&acq.frames);
    let frames = load_frames(Stage::Gate, &frames_path)?;
    let cardiac = load_triggers(Stage::Gate, &loaded.resolve(&acq.cardiac_triggers), frames.frame_count())?;
    let respiratory = load_triggers(
        Stage::Gate,
        &loaded.resolve(&acq.respiratory_triggers),
        frames.frame_count(),
    )?;
    let result = analyze_acquisition(&frames, &cardiac, &respiratory, suite, params)
        .map_err(|e| RunError::from(e).at(&frames_path))?;
    Ok((frames.sample_rate(), result))
}

/// Runs every stage for all configured acquisitions and writes the output
/// tree below `out`.
pub fn run_pipeline(loaded: &LoadedConfig, out: &Path) -> Result<PipelineSummary, RunError> {
    let cfg: &PipelineConfig = &loaded.config;
    check_inputs_exist(loaded)?;
    let resolve_opt = |p: &Option<PathBuf>| p.as_ref().map(|p| loaded.resolve(p));
    let (heart, perfusion, ventilation) = (
        resolve_opt(&cfg.rule_bases.heart),
        resolve_opt(&cfg.rule_bases.perfusion),
        resolve_opt(&cfg.rule_bases.ventilation),
    );
    let (suite, sources) = load_suite(heart.as_deref(), perfusion.as_deref(), ventilation.as_deref())?;
    let reference = match &cfg.reference {
        Some(r) => {
            let path = loaded.resolve(r);
            Some(load_map(Stage::Evaluate, &path, MapKind::Normalized)?)
        }
        None => None,
    };

    let results: Vec<_> = cfg
        .acquisitions
        .par_iter()
        .map(|acq| analyze_one(loaded, acq, &suite, &cfg.gating))
        .collect::<Result<_, _>>()?;

    let maps: Vec<ModelMaps> = results.iter().map(|(_, r)| r.maps.clone()).collect();
    let combined = combine(&maps, &cfg.segmentation, reference.as_ref().map(|r| (r, &cfg.roc)))?;

    let mut tree = OutputTree::new(out);
    for (i, (rate, r)) in results.iter().enumerate() {
        let dir = format!("acq_{i}");
        tree.frames(&format!("{dir}/cardiac_mean.eitf"), &mean_cycle_to_sequence(&r.cardiac.pooled, *rate)?)?;
        tree.frames(
            &format!("{dir}/respiratory_mean.eitf"),
            &mean_cycle_to_sequence(&r.respiratory.pooled, *rate)?,
        )?;
        write_features(&mut tree, &dir, &r.features)?;
        write_models(&mut tree, &dir, &r.maps)?;
    }
    tree.map("median/heart", &combined.median_heart)?;
    tree.map("median/perfusion", &combined.median_perfusion)?;
    tree.map("median/ventilation", &combined.median_ventilation)?;
    write_segmentation(&mut tree, "segmentation", &combined.segmentation)?;
    if let Some(curve) = &combined.roc {
        tree.write("roc.csv", roc_csv(curve).as_bytes())?;
    }
    let manifest = Manifest {
        tool: "eitmap",
        version: VERSION,
        config_sha256: sha256_hex(&loaded.raw),
        rule_bases: &sources,
        acquisitions: results.len(),
        auc: combined.roc.as_ref().map(|c| c.auc),
        outputs: &tree.files().clone(),
    };
    let manifest_json = to_json_pretty(&manifest);
    tree.write("manifest.json", manifest_json.as_bytes())?;
    Ok(PipelineSummary {
        auc: combined.roc.map(|c| c.auc),
        out_dir: out.to_path_buf(),
    })
}

fn under(dir: &str, name: &str) -> String {
    if dir.is_empty() {
        name.to_owned()
    } else {
        format!("{dir}/{name}")
    }
}

fn write_features(tree: &mut OutputTree, dir: &str, f: &FeatureBundle) -> Result<(), RunError> {
    tree.map(&under(dir, "perfusion_amplitude"), &f.perfusion_amplitude)?;
    tree.map(&under(dir, "ventilation_amplitude"), &f.ventilation_amplitude)?;
    tree.map(&under(dir, "time_delay"), &f.time_delay)?;
    tree.map(&under(dir, "position"), &f.position)
}

fn write_models(tree: &mut OutputTree, dir: &str, m: &ModelMaps) -> Result<(), RunError> {
    tree.map(&under(dir, "heart"), &m.heart)?;
    tree.map(&under(dir, "heart_norm"), &m.heart_norm)?;
    tree.map(&under(dir, "perfusion"), &m.perfusion)?;
    tree.map(&under(dir, "ventilation"), &m.ventilation)
}

fn write_segmentation(tree: &mut OutputTree, dir: &str, s: &Segmentation) -> Result<(), RunError> {
    tree.map(&under(dir, "perfusion_mask"), &s.perfusion_mask)?;
    tree.map(&under(dir, "ventilation_mask"), &s.ventilation_mask)?;
    tree.map(&under(dir, "total_lung_mask"), &s.total_lung_mask)?;
    tree.map(&under(dir, "regions"), &s.regions)
}

// -------------------------------------------------- standalone stages

#[derive(Debug, Serialize)]
struct GateReport {
    kind: CycleKind,
    cycles: usize,
    dropped: usize,
    groups: usize,
    length: usize,
}

/// Gates one sequence and writes `<kind>_mean.eitf` plus `<kind>_gate.json`.
pub fn run_gate(
    frames_path: &Path,
    triggers_path: &Path,
    group_size: Option<usize>,
    length: Option<usize>,
    out: &Path,
) -> Result<CycleKind, RunError> {
    let frames = load_frames(Stage::Gate, frames_path)?;
    let triggers = load_triggers(Stage::Gate, triggers_path, frames.frame_count())?;
    let kind = triggers.kind();
    let defaults = GatingParams::default();
    let group = group_size.unwrap_or(match kind {
        CycleKind::Cardiac => defaults.cardiac_group_size,
        CycleKind::Respiratory => defaults.respiratory_group_size,
    });
    let gated = gate(&frames, &triggers, kind, group, length)
        .map_err(|e| RunError::from_core(Stage::Gate, &e).at(triggers_path))?;
    let stats = extract_cycles(&frames, &triggers)
        .map_err(|e| RunError::from_core(Stage::Gate, &e).at(triggers_path))?;
    let mut tree = OutputTree::new(out);
    let tag = kind.tag();
    tree.frames(
        &format!("{tag}_mean.eitf"),
        &mean_cycle_to_sequence(&gated.pooled, frames.sample_rate())?,
    )?;
    tree.json(
        &format!("{tag}_gate.json"),
        &GateReport {
            kind,
            cycles: stats.cycles.len(),
            dropped: stats.dropped,
            groups: gated.series.len(),
            length: gated.pooled.len(),
        },
    )?;
    Ok(kind)
}

/// Feature maps from two mean-cycle EITF files.
pub fn run_features(cardiac: &Path, respiratory: &Path, out: &Path) -> Result<FeatureBundle, RunError> {
    let c = sequence_to_mean_cycle(&load_frames(Stage::Features, cardiac)?, CycleKind::Cardiac)?;
    let r = sequence_to_mean_cycle(&load_frames(Stage::Features, respiratory)?, CycleKind::Respiratory)?;
    let f = FeatureBundle::from_cycles(&c, &r).map_err(|e| RunError::from_core(Stage::Features, &e))?;
    let mut tree = OutputTree::new(out);
    write_features(&mut tree, "", &f)?;
    Ok(f)
}

/// Runs the three models on a directory written by [`run_features`].
pub fn run_infer(features_dir: &Path, suite: &ModelSuite, out: &Path) -> Result<ModelMaps, RunError> {
    let load = |name: &str, kind| load_map(Stage::Infer, &features_dir.join(format!("{name}.csv")), kind);
    let features = FeatureBundle {
        perfusion_amplitude: load("perfusion_amplitude", MapKind::Normalized)?,
        ventilation_amplitude: load("ventilation_amplitude", MapKind::Normalized)?,
        time_delay: load("time_delay", MapKind::TimeDelay)?,
        position: load("position", MapKind::Binary)?,
    };
    let maps = suite
        .run(&features)
        .map_err(|e| RunError::from_core(Stage::Infer, &e))?;
    let mut tree = OutputTree::new(out);
    write_models(&mut tree, "", &maps)?;
    Ok(maps)
}

/// Segments possibility maps. Several maps per modality are reduced to
/// their pixel-wise median first, and the medians are written too.
pub fn run_segment(
    perfusion: &[PathBuf],
    ventilation: &[PathBuf],
    cfg: &SegmentationConfig,
    out: &Path,
) -> Result<Segmentation, RunError> {
    cfg.validate()
        .map_err(|e| RunError::from_core(Stage::Segment, &e))?;
    let mut tree = OutputTree::new(out);
    let mut reduce = |paths: &[PathBuf], name: &str| -> Result<PixelMap, RunError> {
        let maps = paths
            .iter()
            .map(|p| load_map(Stage::Segment, p, MapKind::Possibility))
            .collect::<Result<Vec<_>, _>>()?;
        let m = median_image(&maps).map_err(|e| RunError::from_core(Stage::Median, &e))?;
        if maps.len() > 1 {
            tree.map(&format!("median/{name}"), &m)?;
        }
        Ok(m)
    };
    let p = reduce(perfusion, "perfusion")?;
    let v = reduce(ventilation, "ventilation")?;
    let s = segment(&p, &v, cfg).map_err(|e| RunError::from_core(Stage::Segment, &e))?;
    write_segmentation(&mut tree, "", &s)?;
    Ok(s)
}

/// ROC sweep of `map` against `reference`, written as CSV to `out`.
pub fn run_evaluate(
    map: &Path,
    reference: &Path,
    threshold: f64,
    sweep: &RocSweep,
    out: &Path,
) -> Result<RocCurve, RunError> {
    let m = load_map(Stage::Evaluate, map, MapKind::Possibility)?;
    let r = load_map(Stage::Evaluate, reference, MapKind::Normalized)?;
    let curve = evaluate(&m, &r, threshold, sweep).map_err(|e| RunError::from_core(Stage::Evaluate, &e))?;
    dataio::write_bytes(out, roc_csv(&curve).as_bytes())
        .map_err(|e| RunError::data(Stage::Evaluate, e).at(out))?;
    Ok(curve)
}

// ------------------------------------------------------------- phantom

/// Writes `count` phantom acquisitions (seeds `cfg.seed + i`), the ground
/// truth maps, the reference image and a ready-to-run `pipeline.json`.
pub fn run_phantom(cfg: &PhantomConfig, count: usize, out: &Path) -> Result<(), RunError> {
    if count == 0 {
        return Err(RunError::config("phantom", "acquisition count must be positive"));
    }
    cfg.validate()
        .map_err(|e| RunError::config("phantom", e))?;
    let mut tree = OutputTree::new(out);
    for i in 0..count {
        let acq_cfg = PhantomConfig {
            seed: cfg.seed.wrapping_add(i as u64),
            ..cfg.clone()
        };
        let d = generate_phantom(&acq_cfg).map_err(|e| RunError::config("phantom", e))?;
        let paths = AcquisitionPaths::standard(i);
        let rel = |p: &Path| p.to_string_lossy().replace('\\', "/");
        dataio::save_frame_sequence(out.join(&paths.frames), &d.frames)
            .map_err(|e| RunError::data("phantom", e).at(out.join(&paths.frames)))?;
        tree.write(&rel(&paths.cardiac_triggers), dataio::format_trigger_train(&d.cardiac_triggers).as_bytes())?;
        tree.write(
            &rel(&paths.respiratory_triggers),
            dataio::format_trigger_train(&d.respiratory_triggers).as_bytes(),
        )?;
        if i == 0 {
            tree.map("truth/heart", &d.truth_heart)?;
            tree.map("truth/lung", &d.truth_lung)?;
            tree.map("truth/perfused_lung", &d.truth_perfused_lung)?;
            tree.map("truth/ventilated_lung", &d.truth_ventilated_lung)?;
            tree.map("reference", &d.saline_reference)?;
        }
    }
    tree.json("phantom.json", cfg)?;
    let pipeline = PipelineConfig {
        acquisition_count: count,
        acquisitions: (0..count).map(AcquisitionPaths::standard).collect(),
        ..PipelineConfig::default()
    };
    tree.json("pipeline.json", &pipeline)?;
    Ok(())
}
