//! Brute-force Mamdani reference: evaluates membership functions from their
//! breakpoints and integrates the aggregate on a dense grid. Shares no code
//! with the engine beyond reading the rule-base description.

use eitmap_core::fuzzy::{MembershipFunction, RuleBase};

pub const DENSE_SAMPLES: usize = 100_000;

fn lerp_degree(mf: &MembershipFunction, x: f64) -> f64 {
    let (a, b, c, d) = match *mf {
        MembershipFunction::Triangular { a, b, c } => (a, b, b, c),
        MembershipFunction::Trapezoidal { a, b, c, d } => (a, b, c, d),
    };
    if x < a || x > d {
        return 0.0;
    }
    if x >= b && x <= c {
        return 1.0;
    }
    if x < b {
        (x - a) / (b - a)
    } else {
        (d - x) / (d - c)
    }
}

/// Centroid of the min/min/max aggregate sampled at `DENSE_SAMPLES` evenly
/// spaced points spanning the output domain. `None` when nothing fires or
/// the aggregate has no mass.
pub fn dense_centroid(rb: &RuleBase, inputs: &[(&str, f64)]) -> Option<f64> {
    let value_of = |name: &str| inputs.iter().find(|(n, _)| *n == name).unwrap().1;
    let mut fired = Vec::new();
    for rule in rb.rules() {
        let mut strength = 1.0f64;
        for (var, term) in &rule.antecedents {
            let v = rb.inputs().iter().find(|v| &v.name == var).unwrap();
            strength = strength.min(lerp_degree(&v.terms[term], value_of(var)));
        }
        if strength > 0.0 {
            fired.push((strength, rb.output().terms[&rule.consequent]));
        }
    }
    if fired.is_empty() {
        return None;
    }
    let [lo, hi] = rb.output().domain;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..DENSE_SAMPLES {
        let x = lo + (hi - lo) * i as f64 / (DENSE_SAMPLES - 1) as f64;
        let mu = fired
            .iter()
            .map(|(s, mf)| s.min(lerp_degree(mf, x)))
            .fold(0.0, f64::max);
        num += x * mu;
        den += mu;
    }
    (den > 0.0).then(|| num / den)
}
