//! Trigger-gated cycle extraction and averaging.
//!
//! A cycle is the block of frames from one trigger up to (not including) the
//! next. Cycles of unequal length are brought to a common length by linear
//! interpolation over normalised phase before averaging, so components
//! locked to the trigger survive and everything else is attenuated.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{CycleKind, FrameSequence, TriggerTrain};
use crate::stats;

/// Paper-protocol group size for cardiac gating.
pub const CARDIAC_GROUP_SIZE: usize = 100;
/// Paper-protocol group size for respiratory gating.
pub const RESPIRATORY_GROUP_SIZE: usize = 12;

/// Contiguous frames between two consecutive triggers.
#[derive(Debug, Clone, Copy)]
pub struct Cycle<'a> {
    seq: &'a FrameSequence,
    start_index: usize,
    len: usize,
}

impl<'a> Cycle<'a> {
    pub fn start_index(&self) -> usize {
        self.start_index
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn pixels(&self) -> usize {
        self.seq.pixels()
    }

    pub fn frame(&self, k: usize) -> &'a [f32] {
        assert!(k < self.len);
        self.seq.frame(self.start_index + k)
    }
}

/// Result of [`extract_cycles`].
#[derive(Debug, Clone)]
pub struct Cycles<'a> {
    pub kind: CycleKind,
    pub cycles: Vec<Cycle<'a>>,
    /// Trigger pairs closer than two frames apart.
    pub dropped: usize,
}

impl Cycles<'_> {
    /// Round of the median cycle length, the default resampling target.
    pub fn median_length(&self) -> usize {
        let lengths: Vec<usize> = self.cycles.iter().map(Cycle::len).collect();
        libm::round(stats::median_usize(&lengths)) as usize
    }
}

/// One averaged cycle of images, all resampled to a common length.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanCycle {
    pixels: usize,
    frames: Vec<f64>,
    kind: CycleKind,
    cycle_count: usize,
}

impl MeanCycle {
    pub fn new(kind: CycleKind, pixels: usize, frames: Vec<f64>, cycle_count: usize) -> Result<Self> {
        if cycle_count == 0 || pixels == 0 {
            return Err(Error::EmptyInput);
        }
        if frames.len() % pixels != 0 {
            return Err(Error::DimensionMismatch {
                expected: (frames.len() / pixels + 1) * pixels,
                found: frames.len(),
            });
        }
        if frames.len() / pixels < 2 {
            return Err(Error::InvalidLength(frames.len() / pixels));
        }
        Ok(Self {
            pixels,
            frames,
            kind,
            cycle_count,
        })
    }

    pub fn kind(&self) -> CycleKind {
        self.kind
    }

    pub fn cycle_count(&self) -> usize {
        self.cycle_count
    }

    pub fn pixels(&self) -> usize {
        self.pixels
    }

    pub fn len(&self) -> usize {
        self.frames.len() / self.pixels
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame(&self, k: usize) -> &[f64] {
        &self.frames[k * self.pixels..(k + 1) * self.pixels]
    }

    pub fn frames(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.frames.chunks_exact(self.pixels)
    }

    pub fn data(&self) -> &[f64] {
        &self.frames
    }

    /// Time series of one pixel across the cycle.
    pub fn pixel_series(&self, pixel: usize) -> impl Iterator<Item = f64> + '_ {
        self.frames.iter().skip(pixel).step_by(self.pixels).copied()
    }
}

/// Slices `seq` into one cycle per consecutive trigger pair.
///
/// Frames before the first and from the last trigger on are discarded.
pub fn extract_cycles<'a>(seq: &'a FrameSequence, triggers: &TriggerTrain) -> Result<Cycles<'a>> {
    triggers.check_against(seq.frame_count())?;
    let mut cycles = Vec::new();
    let mut dropped = 0;
    for pair in triggers.indices().windows(2) {
        let len = pair[1] - pair[0];
        if len < 2 {
            dropped += 1;
            continue;
        }
        cycles.push(Cycle {
            seq,
            start_index: pair[0],
            len,
        });
    }
    if cycles.is_empty() {
        return Err(Error::NoCompleteCycle);
    }
    Ok(Cycles {
        kind: triggers.kind(),
        cycles,
        dropped,
    })
}

/// Resamples one cycle to `target_length` frames and adds it into `acc`.
///
/// Output frame `k` sits at phase `k / target_length`; the interval after
/// the last source frame interpolates back towards the cycle's first frame.
fn accumulate_resampled(cycle: &Cycle<'_>, target_length: usize, acc: &mut [f64]) {
    let n = cycle.len();
    let pixels = cycle.pixels();
    for k in 0..target_length {
        let out = &mut acc[k * pixels..(k + 1) * pixels];
        // Exact rational position k * n / L avoids drift for identity resampling.
        let num = k * n;
        let i0 = num / target_length;
        let rem = num % target_length;
        let a = cycle.frame(i0);
        if rem == 0 {
            for (o, &v) in out.iter_mut().zip(a) {
                *o += f64::from(v);
            }
        } else {
            let w = rem as f64 / target_length as f64;
            let b = cycle.frame((i0 + 1) % n);
            for ((o, &va), &vb) in out.iter_mut().zip(a).zip(b) {
                let va = f64::from(va);
                *o += va + w * (f64::from(vb) - va);
            }
        }
    }
}

/// Averages phase-resampled cycles frame by frame.
pub fn mean_cycle(cycles: &[Cycle<'_>], kind: CycleKind, target_length: usize) -> Result<MeanCycle> {
    let first = cycles.first().ok_or(Error::EmptyInput)?;
    if target_length < 2 {
        return Err(Error::InvalidLength(target_length));
    }
    let pixels = first.pixels();
    let mut acc = vec![0.0; target_length * pixels];
    for cycle in cycles {
        accumulate_resampled(cycle, target_length, &mut acc);
    }
    let scale = 1.0 / cycles.len() as f64;
    acc.iter_mut().for_each(|v| *v *= scale);
    MeanCycle::new(kind, pixels, acc, cycles.len())
}

/// Mean cycles over consecutive, non-overlapping groups of `group_size`
/// cycles. A trailing partial group is kept; its `cycle_count` is smaller.
///
/// `target_length` of `None` uses the median cycle length.
pub fn gated_series(
    seq: &FrameSequence,
    triggers: &TriggerTrain,
    group_size: usize,
    target_length: Option<usize>,
) -> Result<Vec<MeanCycle>> {
    if group_size == 0 {
        return Err(Error::InvalidGroupSize(group_size));
    }
    let cycles = extract_cycles(seq, triggers)?;
    let length = target_length.unwrap_or_else(|| cycles.median_length());
    cycles
        .cycles
        .chunks(group_size)
        .map(|group| mean_cycle(group, cycles.kind, length))
        .collect()
}

/// Cycle-count weighted mean of a series of equally long mean cycles, i.e.
/// the mean over every cycle that entered the series.
pub fn pool(series: &[MeanCycle]) -> Result<MeanCycle> {
    let first = series.first().ok_or(Error::EmptyInput)?;
    let mut acc = vec![0.0; first.data().len()];
    let mut total = 0;
    for mc in series {
        if mc.data().len() != acc.len() || mc.kind() != first.kind() {
            return Err(Error::DimensionMismatch {
                expected: acc.len(),
                found: mc.data().len(),
            });
        }
        let w = mc.cycle_count() as f64;
        for (a, &v) in acc.iter_mut().zip(mc.data()) {
            *a += w * v;
        }
        total += mc.cycle_count();
    }
    let scale = 1.0 / total as f64;
    acc.iter_mut().for_each(|v| *v *= scale);
    MeanCycle::new(first.kind(), first.pixels(), acc, total)
}
