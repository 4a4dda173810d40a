use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::membership::MembershipFunction;
use super::FuzzyError;

pub const DEFAULT_RESOLUTION: usize = 101;

/// A named input or output quantity with its fuzzy partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinguisticVariable {
    pub name: String,
    pub domain: [f64; 2],
    pub terms: BTreeMap<String, MembershipFunction>,
}

impl LinguisticVariable {
    pub fn new(
        name: impl Into<String>,
        domain: [f64; 2],
        terms: impl IntoIterator<Item = (impl Into<String>, MembershipFunction)>,
    ) -> Self {
        Self {
            name: name.into(),
            domain,
            terms: terms.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.domain[0]..=self.domain[1]).contains(&x)
    }

    fn validate(&self, path: &str) -> Result<(), FuzzyError> {
        let [lo, hi] = self.domain;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(FuzzyError::InvalidDomain(format!("{path}.domain")));
        }
        if self.terms.is_empty() {
            return Err(FuzzyError::NoTerms(format!("{path}.terms")));
        }
        for (name, mf) in &self.terms {
            let (a, b) = mf.support();
            if a < lo || b > hi {
                return Err(FuzzyError::TermOutsideDomain(format!("{path}.terms.{name}")));
            }
        }
        Ok(())
    }
}

/// One conjunctive rule: IF every listed variable is its term THEN output is
/// `consequent`. Unlisted inputs do not constrain the rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rule {
    pub antecedents: BTreeMap<String, String>,
    pub consequent: String,
}

impl Rule {
    pub fn new<'a>(antecedents: impl IntoIterator<Item = (&'a str, &'a str)>, consequent: &str) -> Self {
        Self {
            antecedents: antecedents
                .into_iter()
                .map(|(v, t)| (v.to_string(), t.to_string()))
                .collect(),
            consequent: consequent.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(super) struct CompiledRule {
    pub antecedents: Vec<(usize, usize)>,
    pub consequent: usize,
}

/// Immutable, validated Mamdani rule base.
///
/// Serialises to and from the JSON rule-base document; deserialisation runs
/// the same validation as [`RuleBase::new`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RuleBaseDef", into = "RuleBaseDef")]
pub struct RuleBase {
    inputs: Vec<LinguisticVariable>,
    output: LinguisticVariable,
    rules: Vec<Rule>,
    resolution: usize,
    pub(super) compiled: Vec<CompiledRule>,
    /// Input terms in `BTreeMap` order, per input.
    pub(super) input_terms: Vec<Vec<MembershipFunction>>,
    /// Output sample abscissae.
    pub(super) samples: Vec<f64>,
    /// Membership of every output term at every sample.
    pub(super) output_table: Vec<Vec<f64>>,
}

impl RuleBase {
    pub fn new(
        inputs: Vec<LinguisticVariable>,
        output: LinguisticVariable,
        rules: Vec<Rule>,
        resolution: usize,
    ) -> Result<Self, FuzzyError> {
        let mut names = BTreeSet::new();
        for (i, var) in inputs.iter().enumerate() {
            var.validate(&format!("inputs[{i}]"))?;
            if !names.insert(var.name.as_str()) {
                return Err(FuzzyError::DuplicateVariable(var.name.clone()));
            }
        }
        if inputs.is_empty() {
            return Err(FuzzyError::NoInputs);
        }
        output.validate("output")?;
        if resolution < 2 {
            return Err(FuzzyError::InvalidResolution(resolution));
        }
        if rules.is_empty() {
            return Err(FuzzyError::EmptyRuleBase);
        }

        let term_index = |var: &LinguisticVariable, term: &str| {
            var.terms.keys().position(|k| k == term)
        };
        let mut compiled = Vec::with_capacity(rules.len());
        let mut seen = BTreeSet::new();
        for (i, rule) in rules.iter().enumerate() {
            if rule.antecedents.is_empty() {
                return Err(FuzzyError::EmptyAntecedent(format!("rules[{i}].antecedents")));
            }
            let mut antecedents = Vec::with_capacity(rule.antecedents.len());
            for (var_name, term) in &rule.antecedents {
                let path = format!("rules[{i}].antecedents.{var_name}");
                let v = inputs
                    .iter()
                    .position(|var| &var.name == var_name)
                    .ok_or_else(|| FuzzyError::UnknownVariable(path.clone()))?;
                let t = term_index(&inputs[v], term)
                    .ok_or_else(|| FuzzyError::UnknownTerm(format!("{path} = {term}")))?;
                antecedents.push((v, t));
            }
            antecedents.sort_unstable();
            if !seen.insert(antecedents.clone()) {
                return Err(FuzzyError::DuplicateRule(format!("rules[{i}]")));
            }
            let consequent = term_index(&output, &rule.consequent).ok_or_else(|| {
                FuzzyError::UnknownTerm(format!("rules[{i}].consequent = {}", rule.consequent))
            })?;
            compiled.push(CompiledRule {
                antecedents,
                consequent,
            });
        }

        let input_terms = inputs
            .iter()
            .map(|v| v.terms.values().copied().collect())
            .collect();
        let [lo, hi] = output.domain;
        let last = (resolution - 1) as f64;
        let samples: Vec<f64> = (0..resolution)
            .map(|i| lo + (hi - lo) * (i as f64 / last))
            .collect();
        let output_table = output
            .terms
            .values()
            .map(|mf| samples.iter().map(|&x| mf.degree(x)).collect())
            .collect();

        Ok(Self {
            inputs,
            output,
            rules,
            resolution,
            compiled,
            input_terms,
            samples,
            output_table,
        })
    }

    pub fn inputs(&self) -> &[LinguisticVariable] {
        &self.inputs
    }

    pub fn output(&self) -> &LinguisticVariable {
        &self.output
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn input_index(&self, name: &str) -> Option<usize> {
        self.inputs.iter().position(|v| v.name == name)
    }
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleBaseDef {
    inputs: Vec<LinguisticVariable>,
    output: LinguisticVariable,
    rules: Vec<Rule>,
    #[serde(default = "default_resolution")]
    resolution: usize,
}

fn default_resolution() -> usize {
    DEFAULT_RESOLUTION
}

impl TryFrom<RuleBaseDef> for RuleBase {
    type Error = FuzzyError;

    fn try_from(def: RuleBaseDef) -> Result<Self, Self::Error> {
        RuleBase::new(def.inputs, def.output, def.rules, def.resolution)
    }
}

impl From<RuleBase> for RuleBaseDef {
    fn from(rb: RuleBase) -> Self {
        Self {
            inputs: rb.inputs,
            output: rb.output,
            rules: rb.rules,
            resolution: rb.resolution,
        }
    }
}
