//! Random rule bases for oracle comparisons.

use std::collections::BTreeSet;

use eitmap_core::fuzzy::{LinguisticVariable, MembershipFunction, Rule, RuleBase};
use rand::rngs::StdRng;
use rand::Rng;

/// Term supports cover at least this fraction of the domain, so every
/// consequent carries mass on a coarse output grid.
const MIN_SUPPORT: f64 = 0.2;

fn random_term(rng: &mut StdRng, lo: f64, hi: f64) -> MembershipFunction {
    let w = hi - lo;
    let width = w * rng.random_range(MIN_SUPPORT..=1.0);
    let a = lo + rng.random_range(0.0..=(w - width));
    let d = a + width;
    if rng.random_bool(0.5) {
        let b = rng.random_range(a..=d);
        MembershipFunction::triangular(a, b, d).unwrap()
    } else {
        let mut inner = [rng.random_range(a..=d), rng.random_range(a..=d)];
        inner.sort_by(f64::total_cmp);
        MembershipFunction::trapezoidal(a, inner[0], inner[1], d).unwrap()
    }
}

fn random_variable(rng: &mut StdRng, name: &str, domain: [f64; 2]) -> LinguisticVariable {
    let n = rng.random_range(2..=4);
    let terms: Vec<(String, MembershipFunction)> = (0..n)
        .map(|i| (format!("t{i}"), random_term(rng, domain[0], domain[1])))
        .collect();
    LinguisticVariable::new(name, domain, terms)
}

/// Random rule base plus a random in-domain input vector.
pub fn random_case(
    rng: &mut StdRng,
    output_domain: [f64; 2],
    resolution: usize,
) -> (RuleBase, Vec<(String, f64)>) {
    let n_inputs = rng.random_range(1..=3);
    let inputs: Vec<LinguisticVariable> = (0..n_inputs)
        .map(|i| {
            let lo = rng.random_range(-5.0..5.0);
            let hi = lo + rng.random_range(0.5..10.0);
            random_variable(rng, &format!("x{i}"), [lo, hi])
        })
        .collect();
    let output = random_variable(rng, "y", output_domain);
    let out_terms: Vec<String> = output.terms.keys().cloned().collect();

    let n_rules = rng.random_range(1..=10);
    let mut rules = Vec::new();
    let mut seen = BTreeSet::new();
    for _ in 0..n_rules * 3 {
        if rules.len() == n_rules {
            break;
        }
        let mut ante = Vec::new();
        for var in &inputs {
            if ante.is_empty() || rng.random_bool(0.7) {
                let keys: Vec<&String> = var.terms.keys().collect();
                ante.push((var.name.clone(), keys[rng.random_range(0..keys.len())].clone()));
            }
        }
        ante.sort();
        if !seen.insert(ante.clone()) {
            continue;
        }
        let consequent = &out_terms[rng.random_range(0..out_terms.len())];
        rules.push(Rule::new(
            ante.iter().map(|(v, t)| (v.as_str(), t.as_str())),
            consequent,
        ));
    }
    let values = inputs
        .iter()
        .map(|v| (v.name.clone(), rng.random_range(v.domain[0]..=v.domain[1])))
        .collect();
    let rb = RuleBase::new(inputs, output, rules, resolution).unwrap();
    (rb, values)
}
