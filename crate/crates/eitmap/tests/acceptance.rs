//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs without the libtest harness so the report is
//! always printed.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use eitmap::rules::default_suite;
use eitmap_core::evaluation::{roc_curve, sensitivity, specificity, RocSweep};
use eitmap_core::fuzzy::{mamdani_evaluate, LinguisticVariable, MembershipFunction, Rule, RuleBase};
use eitmap_core::gating::{extract_cycles, mean_cycle};
use eitmap_core::models::ModelMaps;
use eitmap_core::phantom::{generate_phantom, PhantomConfig};
use eitmap_core::pipeline::{analyze_acquisition, combine, GatingParams};
use eitmap_core::segmentation::{
    region_mask, three_region_segment, threshold_map, union_mask, SegmentationConfig, MATCHED,
    PREDOMINANTLY_PERFUSED, PREDOMINANTLY_VENTILATED,
};
use eitmap_core::{CycleKind, MapKind, PixelMap, TriggerTrain, GRID_PIXELS};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use support::oracle::dense_centroid;
use support::random_rules::random_case;

type Outcome = Result<String, String>;

const ACQUISITIONS: u64 = 7;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Median model maps of seven seeded acquisitions, analysed in memory.
fn phantom_maps(base: &PhantomConfig) -> (Vec<ModelMaps>, eitmap_core::phantom::PhantomDataset) {
    let suite = default_suite();
    let mut maps = Vec::new();
    let mut first = None;
    for i in 0..ACQUISITIONS {
        let d = generate_phantom(&PhantomConfig {
            seed: base.seed + i,
            ..base.clone()
        })
        .unwrap();
        let r = analyze_acquisition(
            &d.frames,
            &d.cardiac_triggers,
            &d.respiratory_triggers,
            &suite,
            &GatingParams::default(),
        )
        .unwrap();
        maps.push(r.maps);
        first.get_or_insert(d);
    }
    (maps, first.unwrap())
}

fn phantom_auc() -> Outcome {
    let start = Instant::now();
    let cfg = PhantomConfig::default();
    // noise at 10 % of the lung signal amplitude
    let noise_ok = (cfg.noise_sigma - 0.1 * cfg.lung_signal_amplitude()).abs() < 1e-12;
    let (maps, d) = phantom_maps(&cfg);
    let seg = SegmentationConfig::default();
    let sweep = RocSweep::default();
    let c = combine(&maps, &seg, Some((&d.saline_reference, &sweep))).unwrap();
    let auc = c.roc.unwrap().auc;
    let secs = start.elapsed().as_secs_f64();
    check(
        auc >= 0.90 && noise_ok && cfg.duration_frames == 20_000,
        format!("AUC {auc:.4} (>= 0.90) over {ACQUISITIONS} acquisitions of {} frames, {secs:.1} s", cfg.duration_frames),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0xacce_97ed);
    let mut worst = 0.0f64;
    let mut compared = 0;
    for case in 0..1000 {
        let resolution = [51, 101, 201][case % 3];
        let (rb, inputs) = random_case(&mut rng, [0.0, 1.0], resolution);
        let named: Vec<(&str, f64)> = inputs.iter().map(|(n, v)| (n.as_str(), *v)).collect();
        let got = mamdani_evaluate(&rb, &named).unwrap();
        let tol = 2.0 / resolution as f64;
        match dense_centroid(&rb, &named) {
            Some(want) => {
                let err = (got.value - want).abs();
                if err > tol || got.degenerate.is_some() {
                    return Err(format!("case {case}: engine {} oracle {want} tol {tol}", got.value));
                }
                worst = worst.max(err * resolution as f64);
                compared += 1;
            }
            None => {
                if got.degenerate.is_none() || got.value != 0.5 {
                    return Err(format!("case {case}: degenerate case gave {:?}", got));
                }
            }
        }
    }
    // mirrored consequents fired with equal strength
    let mut sym_worst = 0.0f64;
    for case in 0..200 {
        let resolution = [51, 101, 201][case % 3];
        let a = rng.random_range(0.0..0.5);
        let b = rng.random_range(a..=0.5);
        let c = rng.random_range(b..=1.0f64.min(b + 0.5));
        let left = MembershipFunction::triangular(a, b, c.min(1.0)).unwrap();
        let right = MembershipFunction::triangular(1.0 - c.min(1.0), 1.0 - b, 1.0 - a).unwrap();
        let term = MembershipFunction::triangular(0.0, 0.5, 1.0).unwrap();
        let inputs = ["x0", "x1"].map(|n| LinguisticVariable::new(n, [0.0, 1.0], [("t".to_owned(), term)]));
        let output = LinguisticVariable::new("y", [0.0, 1.0], [("l".to_owned(), left), ("r".to_owned(), right)]);
        let rules = vec![Rule::new([("x0", "t")], "l"), Rule::new([("x1", "t")], "r")];
        let rb = RuleBase::new(inputs.to_vec(), output, rules, resolution).unwrap();
        let x = rng.random_range(0.05..0.95);
        let v = mamdani_evaluate(&rb, &[("x0", x), ("x1", x)]).unwrap().value;
        sym_worst = sym_worst.max((v - 0.5).abs());
    }
    check(
        compared >= 300 && sym_worst <= 1e-9,
        format!(
            "{compared}/1000 non-degenerate cases within 2/resolution (worst {worst:.3}/resolution); symmetric cases off by {sym_worst:.1e}"
        ),
    )
}

fn gating_fidelity() -> Outcome {
    let clean_cfg = PhantomConfig {
        duration_frames: 30 * 12 + 1,
        apnea_start_frame: Some(0),
        noise_sigma: 0.0,
        ..PhantomConfig::default()
    };
    let clean = generate_phantom(&clean_cfg).unwrap();
    let cycles = extract_cycles(&clean.frames, &clean.cardiac_triggers).unwrap();
    let m = mean_cycle(&cycles.cycles, CycleKind::Cardiac, 30).unwrap();
    let mut worst = 0.0f64;
    for c in &cycles.cycles {
        for k in 0..30 {
            for (a, &b) in m.frame(k).iter().zip(c.frame(k)) {
                worst = worst.max((a - f64::from(b)).abs());
            }
        }
    }

    let base = PhantomConfig {
        duration_frames: 3_100,
        apnea_start_frame: Some(0),
        noise_sigma: 0.0,
        seed: 3,
        ..PhantomConfig::default()
    };
    let clean = generate_phantom(&base).unwrap();
    let noisy = generate_phantom(&PhantomConfig {
        noise_sigma: 0.1,
        ..base
    })
    .unwrap();
    let rms = |n: usize| {
        let t = TriggerTrain::new(CycleKind::Cardiac, noisy.cardiac_triggers.indices()[..=n].to_vec()).unwrap();
        let a = mean_cycle(&extract_cycles(&noisy.frames, &t).unwrap().cycles, CycleKind::Cardiac, 30).unwrap();
        let b = mean_cycle(&extract_cycles(&clean.frames, &t).unwrap().cycles, CycleKind::Cardiac, 30).unwrap();
        let ss: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).powi(2)).sum();
        (ss / a.data().len() as f64).sqrt()
    };
    let (r5, r100) = (rms(5), rms(100));
    check(
        cycles.cycles.len() >= 10 && worst <= 1e-6 && r100 < r5,
        format!(
            "{} cycles reproduced within {worst:.1e}; residual RMS {r100:.4} (100 cycles) < {r5:.4} (5 cycles)",
            cycles.cycles.len()
        ),
    )
}

fn evaluation_fixtures() -> Outcome {
    #[rustfmt::skip]
    let reference = [
        1., 1., 0., 0.,
        1., 1., 0., 0.,
        1., 1., 0., 0.,
        0., 0., 0., 0.,
    ];
    #[rustfmt::skip]
    let mask = [
        1., 0., 0., 1.,
        1., 0., 0., 0.,
        1., 0., 0., 0.,
        0., 0., 1., 0.,
    ];
    let m4 = |v: [f64; 16]| PixelMap::with_shape(4, 4, MapKind::Binary, v.to_vec()).unwrap();
    let (sens, spec) = (
        sensitivity(&m4(mask), &m4(reference)).unwrap(),
        specificity(&m4(mask), &m4(reference)).unwrap(),
    );
    let full_sens = sensitivity(&m4(reference), &m4(reference)).unwrap();
    let full_spec = specificity(&m4(reference), &m4(reference)).unwrap();

    let mut rng = StdRng::seed_from_u64(17);
    let r: Vec<f64> = (0..GRID_PIXELS).map(|_| rng.random_bool(0.3) as u8 as f64).collect();
    let rmap = PixelMap::new(MapKind::Binary, r.clone()).unwrap();
    let sweep = RocSweep::default();
    let perfect = roc_curve(&PixelMap::new(MapKind::Possibility, r.clone()).unwrap(), &rmap, &sweep).unwrap().auc;
    let inverted = roc_curve(
        &PixelMap::new(MapKind::Possibility, r.iter().map(|v| 1.0 - v).collect()).unwrap(),
        &rmap,
        &sweep,
    )
    .unwrap()
    .auc;

    let mut curves = 0;
    let mut monotone = true;
    for _ in 0..500 {
        let m = PixelMap::new(MapKind::Possibility, (0..GRID_PIXELS).map(|_| rng.random()).collect()).unwrap();
        let curve = roc_curve(&m, &rmap, &sweep).unwrap();
        monotone &= curve.points.windows(2).all(|w| {
            w[1].sensitivity <= w[0].sensitivity && w[1].specificity >= w[0].specificity
        });
        curves += 1;
    }
    check(
        sens == 0.5 && spec == 0.8 && full_sens == 1.0 && full_spec == 1.0 && perfect == 1.0 && inverted == 0.0 && monotone,
        format!(
            "4x4 fixture sens {sens} spec {spec}; perfect AUC {perfect}; inverted AUC {inverted}; {curves} curves monotone: {monotone}"
        ),
    )
}

fn segmentation_algebra() -> Outcome {
    let cfg = SegmentationConfig::default();
    let defaults = cfg.ventilation_threshold == 0.31 && cfg.perfusion_threshold == 0.28 && cfg.reference_threshold == 0.1;
    let mut rng = StdRng::seed_from_u64(99);
    let mut failures = Vec::new();
    for pair in 0..100 {
        let rand_map = |rng: &mut StdRng| {
            PixelMap::new(MapKind::Possibility, (0..GRID_PIXELS).map(|_| rng.random()).collect()).unwrap()
        };
        let (v, p) = (rand_map(&mut rng), rand_map(&mut rng));
        let (t1, t2) = (rng.random_range(0.0..=1.0f64), rng.random_range(0.0..=1.0f64));
        let (lo, hi) = (t1.min(t2), t1.max(t2));
        let a = threshold_map(&v, lo).unwrap();
        let b = threshold_map(&v, hi).unwrap();
        let antitone = b.values().iter().zip(a.values()).all(|(y, x)| y <= x);
        let s = three_region_segment(&v, &p, &cfg).unwrap();
        let partition = s.values().iter().all(|l| [0.0, 1.0, 2.0, 3.0].contains(l));
        let pm = threshold_map(&p, cfg.perfusion_threshold).unwrap();
        let vm = threshold_map(&v, cfg.ventilation_threshold).unwrap();
        let perf_side = region_mask(&s, &[MATCHED, PREDOMINANTLY_PERFUSED]).unwrap();
        let vent_side = region_mask(&s, &[MATCHED, PREDOMINANTLY_VENTILATED]).unwrap();
        let union_ok = union_mask(&perf_side, &vent_side).unwrap() == union_mask(&pm, &vm).unwrap()
            && perf_side == pm
            && vent_side == vm;
        if !(antitone && partition && union_ok) {
            failures.push(pair);
        }
    }
    check(
        defaults && failures.is_empty(),
        format!(
            "100 random pairs, failing pairs {failures:?}; shipped thresholds {}/{}/{}",
            cfg.ventilation_threshold, cfg.perfusion_threshold, cfg.reference_threshold
        ),
    )
}

fn heart_subtraction() -> Outcome {
    let cfg = PhantomConfig {
        noise_sigma: 0.0,
        ..PhantomConfig::default()
    };
    let (maps, d) = phantom_maps(&cfg);
    let seg = SegmentationConfig::default();
    let c = combine(&maps, &seg, None).unwrap();
    let mut sorted = c.median_heart.values().to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let cut = sorted[GRID_PIXELS.div_ceil(10) - 1];
    let top: Vec<usize> = (0..GRID_PIXELS).filter(|&p| c.median_heart.values()[p] >= cut).collect();
    let inside = top.iter().all(|&p| d.truth_heart.values()[p] == 1.0);
    let perf = top.iter().map(|&p| c.median_perfusion.values()[p]).fold(0.0, f64::max);
    let vent = top.iter().map(|&p| c.median_ventilation.values()[p]).fold(0.0, f64::max);
    check(
        inside && perf < seg.perfusion_threshold && vent < seg.ventilation_threshold,
        format!(
            "{} top-decile heart pixels, all inside the heart: {inside}; max lung possibility there {perf:.3} (perfusion, < {}) and {vent:.3} (ventilation, < {})",
            top.len(),
            seg.perfusion_threshold,
            seg.ventilation_threshold
        ),
    )
}

fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out.sort();
    out
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_eitmap");
    let run = |args: &[&str]| {
        let o = Command::new(bin).args(args).output().unwrap();
        if o.status.success() {
            Ok(())
        } else {
            Err(String::from_utf8_lossy(&o.stderr).into_owned())
        }
    };
    let cfg = dir.path().join("phantom.json");
    fs::write(&cfg, r#"{"duration_frames": 4000, "apnea_start_frame": 2000}"#).unwrap();
    let ph = dir.path().join("ph");
    let p = |x: &Path| x.to_str().unwrap().to_owned();
    run(&["phantom", "--config", &p(&cfg), "--out", &p(&ph)])?;
    let (a, b) = (dir.path().join("run_a"), dir.path().join("run_b"));
    run(&["pipeline", "--config", &p(&ph.join("pipeline.json")), "--out", &p(&a)])?;
    run(&["pipeline", "--config", &p(&ph.join("pipeline.json")), "--out", &p(&b)])?;
    let (ta, tb) = (tree(&a), tree(&b));
    let bytes: usize = ta.iter().map(|(_, v)| v.len()).sum();
    check(
        !ta.is_empty() && ta == tb,
        format!("{} files, {bytes} bytes, identical across two runs: {}", ta.len(), ta == tb),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("end-to-end phantom AUC", phantom_auc),
        ("Mamdani oracle equivalence", oracle_equivalence),
        ("gating fidelity", gating_fidelity),
        ("evaluation fixtures", evaluation_fixtures),
        ("segmentation algebra", segmentation_algebra),
        ("heart subtraction", heart_subtraction),
        ("pipeline determinism", cli_determinism),
    ];
    let mut failed = 0;
    println!("acceptance: {} criteria", criteria.len());
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} [{}/{}] {name}: {detail}", i + 1, criteria.len());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
