//! Deterministic synthetic EIT data with known anatomy.
//!
//! Every pixel's impedance is a baseline plus
//!
//! * `heart_gain · c(φc)` inside the heart,
//! * `ventilation_gain · r(φr) + lung_perfusion_gain · c(φc − lag)` inside
//!   the lungs (the heart wins where regions overlap; ventilation and
//!   perfusion defects zero their term),
//! * white Gaussian noise of standard deviation `noise_sigma`.
//!
//! `c` is a raised-cosine pulse over the first 40 % of each cardiac cycle
//! (peak at phase 0.2, value 1) and `r` a raised cosine over the whole
//! breath (0 at inspiration start, 1 at mid-cycle). From
//! `apnea_start_frame` on, `r` is held at 0.
//!
//! Noise comes from ChaCha8 seeded with `seed` through `rand_distr`'s
//! standard normal sampler, consumed frame by frame in pixel order; the
//! math runs through `libm`, so streams are identical across platforms.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    CycleKind, FrameSequence, MapKind, PixelMap, TriggerTrain, GRID_HEIGHT, GRID_PIXELS,
    GRID_WIDTH,
};

/// Fraction of the cardiac cycle occupied by the pulse.
pub const PULSE_WIDTH: f64 = 0.4;

/// Axis-aligned ellipse in pixel coordinates: `cx` is the column, `cy` the
/// row, both 0-based at pixel centres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    pub rx: f64,
    pub ry: f64,
}

impl Ellipse {
    pub const fn new(cx: f64, cy: f64, rx: f64, ry: f64) -> Self {
        Self { cx, cy, rx, ry }
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        let dx = (col as f64 - self.cx) / self.rx;
        let dy = (row as f64 - self.cy) / self.ry;
        dx * dx + dy * dy <= 1.0
    }

    fn fits_grid(&self) -> bool {
        let ok = |c: f64, r: f64, n: usize| {
            c.is_finite() && r.is_finite() && r > 0.0 && c - r >= -0.5 && c + r <= n as f64 - 0.5
        };
        ok(self.cx, self.rx, GRID_WIDTH) && ok(self.cy, self.ry, GRID_HEIGHT)
    }

    fn mask(&self) -> Vec<bool> {
        (0..GRID_PIXELS)
            .map(|p| self.contains(p / GRID_WIDTH, p % GRID_WIDTH))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomConfig {
    /// Frames per second.
    pub sample_rate: f64,
    pub duration_frames: usize,
    /// Breaths per minute.
    pub respiratory_rate: f64,
    /// Beats per minute.
    pub cardiac_rate: f64,
    /// First frame of the apnea phase; `None` ventilates throughout.
    pub apnea_start_frame: Option<usize>,
    pub heart_region: Ellipse,
    pub left_lung_region: Ellipse,
    pub right_lung_region: Ellipse,
    /// Lung areas without ventilation.
    pub ventilation_defects: Vec<Ellipse>,
    /// Lung areas without perfusion.
    pub perfusion_defects: Vec<Ellipse>,
    pub baseline: f64,
    pub ventilation_gain: f64,
    pub lung_perfusion_gain: f64,
    pub heart_gain: f64,
    /// Delay of the lung perfusion pulse, as a fraction of the cardiac cycle.
    pub lung_perfusion_phase_lag: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        Self {
            sample_rate: 50.0,
            duration_frames: 20_000,
            respiratory_rate: 20.0,
            cardiac_rate: 100.0,
            apnea_start_frame: Some(10_000),
            heart_region: Ellipse::new(15.5, 8.5, 6.0, 6.5),
            left_lung_region: Ellipse::new(6.0, 17.0, 4.5, 12.5),
            right_lung_region: Ellipse::new(25.0, 17.0, 4.5, 12.5),
            ventilation_defects: vec![Ellipse::new(6.0, 26.0, 4.0, 3.0)],
            perfusion_defects: vec![Ellipse::new(28.5, 12.0, 2.0, 4.0)],
            baseline: 1.0,
            ventilation_gain: 1.0,
            lung_perfusion_gain: 0.1,
            heart_gain: 0.2,
            lung_perfusion_phase_lag: 0.3,
            noise_sigma: 0.1,
            seed: 0,
        }
    }
}

impl PhantomConfig {
    /// Peak-to-peak ventilation signal of a lung pixel.
    pub fn lung_signal_amplitude(&self) -> f64 {
        self.ventilation_gain
    }

    pub fn cardiac_period(&self) -> f64 {
        60.0 * self.sample_rate / self.cardiac_rate
    }

    pub fn respiratory_period(&self) -> f64 {
        60.0 * self.sample_rate / self.respiratory_rate
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")))
            }
        };
        positive("sample_rate", self.sample_rate)?;
        positive("respiratory_rate", self.respiratory_rate)?;
        positive("cardiac_rate", self.cardiac_rate)?;
        for (name, v) in [
            ("ventilation_gain", self.ventilation_gain),
            ("lung_perfusion_gain", self.lung_perfusion_gain),
            ("heart_gain", self.heart_gain),
            ("noise_sigma", self.noise_sigma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !self.baseline.is_finite() || !self.lung_perfusion_phase_lag.is_finite() {
            return Err(Error::InvalidConfig("baseline and phase lag must be finite".into()));
        }
        if self.duration_frames == 0 {
            return Err(Error::InvalidConfig("duration_frames must be positive".into()));
        }
        let named = [
            ("heart_region", &self.heart_region),
            ("left_lung_region", &self.left_lung_region),
            ("right_lung_region", &self.right_lung_region),
        ];
        for (name, e) in named {
            if !e.fits_grid() {
                return Err(Error::RegionOutOfGrid(name.into()));
            }
        }
        for (i, e) in self.ventilation_defects.iter().enumerate() {
            if !e.fits_grid() {
                return Err(Error::RegionOutOfGrid(format!("ventilation_defects[{i}]")));
            }
        }
        for (i, e) in self.perfusion_defects.iter().enumerate() {
            if !e.fits_grid() {
                return Err(Error::RegionOutOfGrid(format!("perfusion_defects[{i}]")));
            }
        }
        Ok(())
    }
}

/// Cardiac pulse at phase `phase` (any real; wrapped to `[0, 1)`).
pub fn cardiac_waveform(phase: f64) -> f64 {
    let phase = phase - libm::floor(phase);
    if phase < PULSE_WIDTH {
        0.5 * (1.0 - libm::cos(2.0 * PI * phase / PULSE_WIDTH))
    } else {
        0.0
    }
}

/// Respiratory waveform at phase `phase`.
pub fn respiratory_waveform(phase: f64) -> f64 {
    let phase = phase - libm::floor(phase);
    0.5 * (1.0 - libm::cos(2.0 * PI * phase))
}

/// Phase of frame `k` in a cycle of `period` frames. `k % period` is exact
/// in floating point, so integer periods repeat bit for bit.
fn phase(k: usize, period: f64) -> f64 {
    (k as f64 % period) / period
}

/// First frame at or after each cycle start `i · period` below `limit`.
fn cycle_starts(period: f64, limit: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for i in 0usize.. {
        let k = libm::ceil(i as f64 * period) as usize;
        if k >= limit {
            break;
        }
        if out.last() != Some(&k) {
            out.push(k);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomDataset {
    pub frames: FrameSequence,
    pub cardiac_triggers: TriggerTrain,
    pub respiratory_triggers: TriggerTrain,
    pub truth_heart: PixelMap,
    pub truth_lung: PixelMap,
    pub truth_perfused_lung: PixelMap,
    pub truth_ventilated_lung: PixelMap,
    /// Stand-in for a contrast-bolus perfusion image: the normalised lung
    /// perfusion gain, before noise.
    pub saline_reference: PixelMap,
}

fn mask_map(mask: &[bool]) -> PixelMap {
    let values = mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    PixelMap::from_parts_unchecked(GRID_WIDTH, GRID_HEIGHT, MapKind::Binary, values)
}

pub fn generate_phantom(cfg: &PhantomConfig) -> Result<PhantomDataset> {
    cfg.validate()?;
    let heart = cfg.heart_region.mask();
    let lung: Vec<bool> = cfg
        .left_lung_region
        .mask()
        .iter()
        .zip(cfg.right_lung_region.mask())
        .zip(&heart)
        .map(|((&l, r), &h)| (l || r) && !h)
        .collect();
    let outside_any = |defects: &[Ellipse], p: usize| {
        !defects
            .iter()
            .any(|e| e.contains(p / GRID_WIDTH, p % GRID_WIDTH))
    };
    let perfused: Vec<bool> = (0..GRID_PIXELS)
        .map(|p| lung[p] && outside_any(&cfg.perfusion_defects, p))
        .collect();
    let ventilated: Vec<bool> = (0..GRID_PIXELS)
        .map(|p| lung[p] && outside_any(&cfg.ventilation_defects, p))
        .collect();

    let heart_gain: Vec<f64> = heart.iter().map(|&h| if h { cfg.heart_gain } else { 0.0 }).collect();
    let vent_gain: Vec<f64> = ventilated
        .iter()
        .map(|&v| if v { cfg.ventilation_gain } else { 0.0 })
        .collect();
    let perf_gain: Vec<f64> = perfused
        .iter()
        .map(|&v| if v { cfg.lung_perfusion_gain } else { 0.0 })
        .collect();

    let pc = cfg.cardiac_period();
    let pr = cfg.respiratory_period();
    let apnea = cfg.apnea_start_frame.unwrap_or(usize::MAX);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut data = Vec::with_capacity(cfg.duration_frames * GRID_PIXELS);
    for k in 0..cfg.duration_frames {
        let phc = phase(k, pc);
        let c = cardiac_waveform(phc);
        let c_lag = cardiac_waveform(phc - cfg.lung_perfusion_phase_lag);
        let r = if k < apnea {
            respiratory_waveform(phase(k, pr))
        } else {
            0.0
        };
        for p in 0..GRID_PIXELS {
            let mut v = cfg.baseline + heart_gain[p] * c + vent_gain[p] * r + perf_gain[p] * c_lag;
            if cfg.noise_sigma > 0.0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                v += cfg.noise_sigma * z;
            }
            data.push(v as f32);
        }
    }
    let frames = FrameSequence::new(GRID_WIDTH, GRID_HEIGHT, cfg.sample_rate, data)?;

    let cardiac_triggers = TriggerTrain::new(CycleKind::Cardiac, cycle_starts(pc, cfg.duration_frames))?;
    let resp_limit = cfg.duration_frames.min(apnea.saturating_add(1));
    let respiratory_triggers =
        TriggerTrain::new(CycleKind::Respiratory, cycle_starts(pr, resp_limit))?;

    let reference_level = if cfg.lung_perfusion_gain > 0.0 { 1.0 } else { 0.0 };
    let saline = perfused
        .iter()
        .map(|&b| if b { reference_level } else { 0.0 })
        .collect();

    Ok(PhantomDataset {
        frames,
        cardiac_triggers,
        respiratory_triggers,
        truth_heart: mask_map(&heart),
        truth_lung: mask_map(&lung),
        truth_perfused_lung: mask_map(&perfused),
        truth_ventilated_lung: mask_map(&ventilated),
        saline_reference: PixelMap::from_parts_unchecked(
            GRID_WIDTH,
            GRID_HEIGHT,
            MapKind::Normalized,
            saline,
        ),
    })
}
