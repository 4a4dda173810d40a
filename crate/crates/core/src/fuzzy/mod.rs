//! Mamdani inference with centre-of-area defuzzification.
//!
//! Semantics, fixed for every rule base:
//!
//! * conjunction of antecedents: `min`
//! * implication: `min` (the consequent set is clipped at the firing strength)
//! * aggregation: pointwise `max` over the output domain, sampled at
//!   `resolution` evenly spaced points including both ends
//! * defuzzification: `Σ xᵢ μᵢ / Σ μᵢ` over the samples
//!
//! Degenerate evaluations never fail: when no rule fires, or the clipped
//! sets carry no mass on the sample grid, the result is the midpoint of the
//! output domain and [`Inference::degenerate`] says why.

mod membership;
mod rule_base;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

pub use self::membership::MembershipFunction;
pub use self::rule_base::{LinguisticVariable, Rule, RuleBase, DEFAULT_RESOLUTION};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FuzzyError {
    #[error("membership breakpoints must be finite and non-decreasing: {0:?}")]
    InvalidMembership(Vec<f64>),
    #[error("membership shape expects {expected} parameters, found {found}")]
    ParamCount { expected: usize, found: usize },
    #[error("{0}: domain must be a finite interval [lo, hi] with lo < hi")]
    InvalidDomain(String),
    #[error("{0}: variable has no terms")]
    NoTerms(String),
    #[error("{0}: membership support leaves the variable domain")]
    TermOutsideDomain(String),
    #[error("rule base has no input variables")]
    NoInputs,
    #[error("duplicate input variable `{0}`")]
    DuplicateVariable(String),
    #[error("resolution must be at least 2, got {0}")]
    InvalidResolution(usize),
    #[error("rule base has no rules")]
    EmptyRuleBase,
    #[error("{0}: rule has no antecedent")]
    EmptyAntecedent(String),
    #[error("{0}: duplicate antecedent combination")]
    DuplicateRule(String),
    #[error("unknown variable: {0}")]
    UnknownVariable(String),
    #[error("unknown term: {0}")]
    UnknownTerm(String),
    #[error("no value supplied for input `{0}`")]
    MissingInput(String),
    #[error("expected {expected} input values, found {found}")]
    InputCount { expected: usize, found: usize },
    #[error("input `{variable}` = {value} is outside its domain")]
    InputOutOfDomain { variable: String, value: f64 },
    #[error("empty input")]
    EmptyInput,
}

/// Why an evaluation fell back to the domain midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degenerate {
    NoRuleFired,
    NoMass,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inference {
    pub value: f64,
    pub degenerate: Option<Degenerate>,
}

/// Centre of area of a sampled membership function.
///
/// With zero total mass the midpoint of the sample range is returned and
/// flagged as [`Degenerate::NoMass`].
pub fn defuzz_centroid(samples: &[(f64, f64)]) -> Result<Inference, FuzzyError> {
    if samples.is_empty() {
        return Err(FuzzyError::EmptyInput);
    }
    let (mut num, mut den) = (0.0, 0.0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, mu) in samples {
        num += x * mu;
        den += mu;
        lo = lo.min(x);
        hi = hi.max(x);
    }
    Ok(if den > 0.0 {
        Inference {
            value: num / den,
            degenerate: None,
        }
    } else {
        Inference {
            value: 0.5 * (lo + hi),
            degenerate: Some(Degenerate::NoMass),
        }
    })
}

/// Evaluates `rb` on named crisp inputs. Every input variable must be given.
pub fn mamdani_evaluate(rb: &RuleBase, inputs: &[(&str, f64)]) -> Result<Inference, FuzzyError> {
    rb.evaluate(inputs)
}

impl RuleBase {
    pub fn evaluate(&self, inputs: &[(&str, f64)]) -> Result<Inference, FuzzyError> {
        let mut ordered = vec![f64::NAN; self.inputs().len()];
        let mut given = vec![false; ordered.len()];
        for &(name, value) in inputs {
            let i = self
                .input_index(name)
                .ok_or_else(|| FuzzyError::UnknownVariable(name.into()))?;
            ordered[i] = value;
            given[i] = true;
        }
        if let Some(i) = given.iter().position(|g| !g) {
            return Err(FuzzyError::MissingInput(self.inputs()[i].name.clone()));
        }
        self.evaluate_ordered(&ordered)
    }

    /// Evaluates with inputs given positionally, in [`RuleBase::inputs`] order.
    pub fn evaluate_ordered(&self, values: &[f64]) -> Result<Inference, FuzzyError> {
        if values.len() != self.inputs().len() {
            return Err(FuzzyError::InputCount {
                expected: self.inputs().len(),
                found: values.len(),
            });
        }
        let mut degrees: Vec<Vec<f64>> = Vec::with_capacity(values.len());
        for ((var, terms), &x) in self.inputs().iter().zip(&self.input_terms).zip(values) {
            if !var.contains(x) {
                return Err(FuzzyError::InputOutOfDomain {
                    variable: var.name.clone(),
                    value: x,
                });
            }
            degrees.push(terms.iter().map(|mf| mf.degree(x)).collect());
        }

        // Rules sharing a consequent clip it at their strongest firing.
        let mut clip = vec![0.0f64; self.output_table.len()];
        for rule in &self.compiled {
            let strength = rule
                .antecedents
                .iter()
                .map(|&(v, t)| degrees[v][t])
                .fold(1.0f64, f64::min);
            clip[rule.consequent] = clip[rule.consequent].max(strength);
        }
        if clip.iter().all(|&c| c <= 0.0) {
            let [lo, hi] = self.output().domain;
            return Ok(Inference {
                value: 0.5 * (lo + hi),
                degenerate: Some(Degenerate::NoRuleFired),
            });
        }

        let (mut num, mut den) = (0.0, 0.0);
        for (i, &x) in self.samples.iter().enumerate() {
            let mu = clip
                .iter()
                .zip(&self.output_table)
                .map(|(&c, table)| c.min(table[i]))
                .fold(0.0f64, f64::max);
            num += x * mu;
            den += mu;
        }
        if den > 0.0 {
            Ok(Inference {
                value: num / den,
                degenerate: None,
            })
        } else {
            let [lo, hi] = self.output().domain;
            Ok(Inference {
                value: 0.5 * (lo + hi),
                degenerate: Some(Degenerate::NoMass),
            })
        }
    }
}
