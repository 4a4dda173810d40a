//! Per-pixel heart, lung-perfusion and lung-ventilation models.
//!
//! Each model is a [`RuleBase`] run once per pixel. The heart model reads
//! perfusion amplitude, time delay and position; its output is min-max
//! normalised and fed, together with an amplitude map, into the two lung
//! models.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureBundle;
use crate::fuzzy::RuleBase;
use crate::grid::{MapKind, PixelMap};
use crate::stats;

pub const PERFUSION_AMPLITUDE: &str = "perfusion_amplitude";
pub const VENTILATION_AMPLITUDE: &str = "ventilation_amplitude";
pub const TIME_DELAY: &str = "time_delay";
pub const POSITION: &str = "position";
pub const HEART_POSSIBILITY_NORM: &str = "heart_possibility_norm";

/// Rule count of each lung model.
pub const LUNG_RULE_COUNT: usize = 9;

/// The three rule bases, checked against the inputs each model consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSuiteDef", into = "ModelSuiteDef")]
pub struct ModelSuite {
    heart: RuleBase,
    perfusion: RuleBase,
    ventilation: RuleBase,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSuiteDef {
    heart: RuleBase,
    perfusion: RuleBase,
    ventilation: RuleBase,
}

impl TryFrom<ModelSuiteDef> for ModelSuite {
    type Error = Error;

    fn try_from(def: ModelSuiteDef) -> Result<Self> {
        ModelSuite::new(def.heart, def.perfusion, def.ventilation)
    }
}

impl From<ModelSuite> for ModelSuiteDef {
    fn from(s: ModelSuite) -> Self {
        Self {
            heart: s.heart,
            perfusion: s.perfusion,
            ventilation: s.ventilation,
        }
    }
}

fn mismatch(model: &str, what: String) -> Error {
    Error::RuleBaseMismatch(format!("{model} model: {what}"))
}

fn check_inputs(model: &str, rb: &RuleBase, expected: &[&str]) -> Result<()> {
    let mut got: Vec<&str> = rb.inputs().iter().map(|v| v.name.as_str()).collect();
    let mut want = expected.to_vec();
    got.sort_unstable();
    want.sort_unstable();
    if got != want {
        return Err(mismatch(model, format!("inputs {got:?}, expected {want:?}")));
    }
    Ok(())
}

fn check_unit_output(model: &str, rb: &RuleBase) -> Result<()> {
    if rb.output().domain != [0.0, 1.0] {
        return Err(mismatch(
            model,
            format!("output domain {:?}, expected [0, 1]", rb.output().domain),
        ));
    }
    Ok(())
}

/// Name of the amplitude input of a lung rule base.
fn lung_amplitude_input(model: &str, rb: &RuleBase) -> Result<&'static str> {
    for name in [PERFUSION_AMPLITUDE, VENTILATION_AMPLITUDE] {
        if rb.input_index(name).is_some() {
            check_inputs(model, rb, &[name, HEART_POSSIBILITY_NORM])?;
            return Ok(name);
        }
    }
    Err(mismatch(model, "no amplitude input".into()))
}

impl ModelSuite {
    pub fn new(heart: RuleBase, perfusion: RuleBase, ventilation: RuleBase) -> Result<Self> {
        check_inputs("heart", &heart, &[PERFUSION_AMPLITUDE, TIME_DELAY, POSITION])?;
        check_inputs("perfusion", &perfusion, &[PERFUSION_AMPLITUDE, HEART_POSSIBILITY_NORM])?;
        check_inputs(
            "ventilation",
            &ventilation,
            &[VENTILATION_AMPLITUDE, HEART_POSSIBILITY_NORM],
        )?;
        for (model, rb) in [
            ("heart", &heart),
            ("perfusion", &perfusion),
            ("ventilation", &ventilation),
        ] {
            check_unit_output(model, rb)?;
        }
        for (model, rb) in [("perfusion", &perfusion), ("ventilation", &ventilation)] {
            if rb.rules().len() != LUNG_RULE_COUNT {
                return Err(mismatch(
                    model,
                    format!("{} rules, expected {LUNG_RULE_COUNT}", rb.rules().len()),
                ));
            }
        }
        Ok(Self {
            heart,
            perfusion,
            ventilation,
        })
    }

    pub fn heart(&self) -> &RuleBase {
        &self.heart
    }

    pub fn perfusion(&self) -> &RuleBase {
        &self.perfusion
    }

    pub fn ventilation(&self) -> &RuleBase {
        &self.ventilation
    }

    /// Runs all three models on one acquisition's features.
    pub fn run(&self, features: &FeatureBundle) -> Result<ModelMaps> {
        let heart = heart_image(features, &self.heart)?;
        let heart_norm = normalize_heart(&heart)?;
        let perfusion = lung_image(&features.perfusion_amplitude, &heart_norm, &self.perfusion)?;
        let ventilation =
            lung_image(&features.ventilation_amplitude, &heart_norm, &self.ventilation)?;
        Ok(ModelMaps {
            heart,
            heart_norm,
            perfusion,
            ventilation,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelMaps {
    pub heart: PixelMap,
    pub heart_norm: PixelMap,
    pub perfusion: PixelMap,
    pub ventilation: PixelMap,
}

/// A possibility map plus the number of pixels that fell back to the
/// output midpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelImage {
    pub map: PixelMap,
    pub degenerate_pixels: usize,
}

/// Runs `rb` on every pixel, pairing each rule-base input with a map.
pub fn evaluate_pixels(model: &str, rb: &RuleBase, inputs: &[(&str, &PixelMap)]) -> Result<ModelImage> {
    check_unit_output(model, rb)?;
    let first = inputs.first().ok_or(Error::EmptyInput)?.1;
    let mut ordered: Vec<&PixelMap> = Vec::with_capacity(rb.inputs().len());
    for var in rb.inputs() {
        let map = inputs
            .iter()
            .find(|(name, _)| *name == var.name)
            .map(|(_, m)| *m)
            .ok_or_else(|| mismatch(model, format!("no feature map for input `{}`", var.name)))?;
        map.same_shape(first)?;
        let (lo, hi) = stats::min_max(map.values());
        if !(var.contains(lo) && var.contains(hi)) {
            return Err(mismatch(
                model,
                format!(
                    "`{}` values span [{lo}, {hi}], outside domain {:?}",
                    var.name, var.domain
                ),
            ));
        }
        ordered.push(map);
    }
    let mut values = Vec::with_capacity(first.len());
    let mut degenerate_pixels = 0;
    let mut x = alloc::vec![0.0; ordered.len()];
    for p in 0..first.len() {
        for (slot, map) in x.iter_mut().zip(&ordered) {
            *slot = map.values()[p];
        }
        let r = rb.evaluate_ordered(&x)?;
        degenerate_pixels += usize::from(r.degenerate.is_some());
        values.push(r.value);
    }
    let map = PixelMap::with_shape(first.width(), first.height(), MapKind::Possibility, values)?;
    Ok(ModelImage {
        map,
        degenerate_pixels,
    })
}

pub fn heart_image(features: &FeatureBundle, rb: &RuleBase) -> Result<PixelMap> {
    check_inputs("heart", rb, &[PERFUSION_AMPLITUDE, TIME_DELAY, POSITION])?;
    let image = evaluate_pixels(
        "heart",
        rb,
        &[
            (PERFUSION_AMPLITUDE, &features.perfusion_amplitude),
            (TIME_DELAY, &features.time_delay),
            (POSITION, &features.position),
        ],
    )?;
    Ok(image.map)
}

/// Min-max normalisation of a heart possibility map; a constant map
/// becomes all zeros.
pub fn normalize_heart(map: &PixelMap) -> Result<PixelMap> {
    map.expect_kind(MapKind::Possibility)?;
    let (lo, hi) = stats::min_max(map.values());
    let span = hi - lo;
    let values = if span > 0.0 {
        map.values()
            .iter()
            .map(|v| ((v - lo) / span).clamp(0.0, 1.0))
            .collect()
    } else {
        alloc::vec![0.0; map.len()]
    };
    PixelMap::with_shape(map.width(), map.height(), MapKind::Normalized, values)
}

/// Lung possibility from an amplitude map and the normalised heart map.
/// Serves both the perfusion and the ventilation model.
pub fn lung_image(amplitude: &PixelMap, heart_norm: &PixelMap, rb: &RuleBase) -> Result<PixelMap> {
    let name = lung_amplitude_input("lung", rb)?;
    let image = evaluate_pixels(
        "lung",
        rb,
        &[(name, amplitude), (HEART_POSSIBILITY_NORM, heart_norm)],
    )?;
    Ok(image.map)
}

/// Pixel-wise median; even counts average the two middle values.
pub fn median_image(maps: &[PixelMap]) -> Result<PixelMap> {
    let first = maps.first().ok_or(Error::EmptyInput)?;
    for m in maps {
        m.expect_kind(first.kind())?;
        m.same_shape(first)?;
    }
    let mut column = Vec::with_capacity(maps.len());
    let values = (0..first.len())
        .map(|p| {
            column.clear();
            column.extend(maps.iter().map(|m| m.values()[p]));
            stats::median_in_place(&mut column)
        })
        .collect();
    PixelMap::with_shape(first.width(), first.height(), first.kind(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::{LinguisticVariable, MembershipFunction, Rule, DEFAULT_RESOLUTION};
    use alloc::vec;

    fn lmh(name: &str) -> LinguisticVariable {
        let t = |a, b, c| MembershipFunction::triangular(a, b, c).unwrap();
        LinguisticVariable::new(
            name,
            [0.0, 1.0],
            [
                ("low", t(0.0, 0.0, 0.5)),
                ("medium", t(0.0, 0.5, 1.0)),
                ("high", t(0.5, 1.0, 1.0)),
            ],
        )
    }

    fn lung_rb(amp: &str) -> RuleBase {
        let mut rules = Vec::new();
        for (a, h, out) in [
            ("low", "low", "low"),
            ("low", "medium", "low"),
            ("low", "high", "low"),
            ("medium", "low", "medium"),
            ("medium", "medium", "low"),
            ("medium", "high", "low"),
            ("high", "low", "high"),
            ("high", "medium", "medium"),
            ("high", "high", "low"),
        ] {
            rules.push(Rule::new([(amp, a), (HEART_POSSIBILITY_NORM, h)], out));
        }
        RuleBase::new(
            vec![lmh(amp), lmh(HEART_POSSIBILITY_NORM)],
            lmh("lung_possibility"),
            rules,
            DEFAULT_RESOLUTION,
        )
        .unwrap()
    }

    fn heart_rb() -> RuleBase {
        RuleBase::new(
            vec![lmh(PERFUSION_AMPLITUDE), lmh(TIME_DELAY), lmh(POSITION)],
            lmh("heart_possibility"),
            vec![
                Rule::new([(PERFUSION_AMPLITUDE, "high"), (POSITION, "low")], "high"),
                Rule::new([(PERFUSION_AMPLITUDE, "low")], "low"),
            ],
            DEFAULT_RESOLUTION,
        )
        .unwrap()
    }

    fn filled(kind: MapKind, v: f64) -> PixelMap {
        PixelMap::filled(kind, v).unwrap()
    }

    #[test]
    fn suite_checks_inputs_and_rule_counts() {
        assert!(ModelSuite::new(heart_rb(), lung_rb(PERFUSION_AMPLITUDE), lung_rb(VENTILATION_AMPLITUDE)).is_ok());
        assert!(matches!(
            ModelSuite::new(heart_rb(), lung_rb(VENTILATION_AMPLITUDE), lung_rb(VENTILATION_AMPLITUDE)),
            Err(Error::RuleBaseMismatch(_))
        ));
        assert!(matches!(
            ModelSuite::new(heart_rb(), lung_rb(PERFUSION_AMPLITUDE), heart_rb()),
            Err(Error::RuleBaseMismatch(_))
        ));
    }

    #[test]
    fn uniform_features_give_constant_heart_map() {
        let f = FeatureBundle {
            perfusion_amplitude: filled(MapKind::Normalized, 0.0),
            ventilation_amplitude: filled(MapKind::Normalized, 0.0),
            time_delay: filled(MapKind::TimeDelay, 0.0),
            position: filled(MapKind::Binary, 0.0),
        };
        let rb = heart_rb();
        let h = heart_image(&f, &rb).unwrap();
        let expected = rb
            .evaluate(&[(PERFUSION_AMPLITUDE, 0.0), (TIME_DELAY, 0.0), (POSITION, 0.0)])
            .unwrap()
            .value;
        assert!(h.values().iter().all(|&v| v == expected));
        assert_eq!(h.kind(), MapKind::Possibility);
    }

    #[test]
    fn heart_rejects_wrong_rule_base() {
        let f = FeatureBundle {
            perfusion_amplitude: filled(MapKind::Normalized, 0.0),
            ventilation_amplitude: filled(MapKind::Normalized, 0.0),
            time_delay: filled(MapKind::TimeDelay, 0.0),
            position: filled(MapKind::Binary, 0.0),
        };
        assert!(matches!(
            heart_image(&f, &lung_rb(PERFUSION_AMPLITUDE)),
            Err(Error::RuleBaseMismatch(_))
        ));
    }

    #[test]
    fn domain_disagreement_is_a_mismatch() {
        let narrow = LinguisticVariable::new(
            PERFUSION_AMPLITUDE,
            [0.0, 0.5],
            [("low", MembershipFunction::triangular(0.0, 0.0, 0.5).unwrap())],
        );
        let rb = RuleBase::new(
            vec![narrow, lmh(HEART_POSSIBILITY_NORM)],
            lmh("out"),
            vec![Rule::new([(PERFUSION_AMPLITUDE, "low")], "low")],
            DEFAULT_RESOLUTION,
        )
        .unwrap();
        let amp = filled(MapKind::Normalized, 0.8);
        let heart = filled(MapKind::Normalized, 0.0);
        assert!(matches!(lung_image(&amp, &heart, &rb), Err(Error::RuleBaseMismatch(_))));
    }

    #[test]
    fn normalize_heart_examples() {
        let m = PixelMap::with_shape(3, 1, MapKind::Possibility, vec![0.2, 0.4, 0.6]).unwrap();
        let n = normalize_heart(&m).unwrap();
        assert!(n.values().iter().zip([0.0, 0.5, 1.0]).all(|(a, b)| (a - b).abs() < 1e-12));
        let c = filled(MapKind::Possibility, 0.5);
        assert!(normalize_heart(&c).unwrap().values().iter().all(|&v| v == 0.0));
        let full = PixelMap::with_shape(3, 1, MapKind::Possibility, vec![0.0, 0.3, 1.0]).unwrap();
        assert_eq!(normalize_heart(&full).unwrap().values(), [0.0, 0.3, 1.0]);
        assert!(normalize_heart(&filled(MapKind::Binary, 1.0)).is_err());
    }

    #[test]
    fn lung_heart_subtraction_with_local_rules() {
        let rb = lung_rb(PERFUSION_AMPLITUDE);
        let amp = filled(MapKind::Normalized, 1.0);
        let on = lung_image(&amp, &filled(MapKind::Normalized, 1.0), &rb).unwrap();
        assert!(on.values().iter().all(|&v| v <= 0.2));
        let off = lung_image(&amp, &filled(MapKind::Normalized, 0.0), &rb).unwrap();
        assert!(off.values().iter().all(|&v| v >= 0.8));
    }

    #[test]
    fn median_examples() {
        let maps: Vec<PixelMap> = (1..=7)
            .map(|v| PixelMap::with_shape(1, 1, MapKind::Possibility, vec![v as f64 / 10.0]).unwrap())
            .collect();
        assert!((median_image(&maps).unwrap().values()[0] - 0.4).abs() < 1e-15);
        let two = [
            PixelMap::with_shape(1, 1, MapKind::Binary, vec![0.0]).unwrap(),
            PixelMap::with_shape(1, 1, MapKind::Binary, vec![1.0]).unwrap(),
        ];
        // binary inputs average to a value the binary kind rejects
        assert!(median_image(&two).is_err());
        let two = [
            PixelMap::with_shape(1, 1, MapKind::Normalized, vec![0.0]).unwrap(),
            PixelMap::with_shape(1, 1, MapKind::Normalized, vec![1.0]).unwrap(),
        ];
        assert_eq!(median_image(&two).unwrap().values(), [0.5]);
        let same = vec![filled(MapKind::Possibility, 0.3); 7];
        assert_eq!(median_image(&same).unwrap(), same[0]);
        assert_eq!(median_image(&[]).unwrap_err(), Error::EmptyInput);
        let mixed = [filled(MapKind::Possibility, 0.3), filled(MapKind::Normalized, 0.3)];
        assert!(matches!(median_image(&mixed), Err(Error::KindMismatch { .. })));
    }
}
