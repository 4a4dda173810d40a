//! Rule-base files and the default model suite.
//!
//! A rule base is JSON of the form
//!
//! ```json
//! {
//!   "inputs": [{"name": "x", "domain": [0, 1],
//!               "terms": {"low": {"shape": "triangular", "params": [0, 0, 0.5]}}}],
//!   "output": {"name": "y", "domain": [0, 1], "terms": {...}},
//!   "rules": [{"antecedents": {"x": "low"}, "consequent": "low"}],
//!   "resolution": 101
//! }
//! ```
//!
//! `shape` is `triangular` (3 params) or `trapezoidal` (4 params).

use std::fs;
use std::path::Path;

use eitmap_core::fuzzy::RuleBase;
use eitmap_core::models::ModelSuite;

pub const DEFAULT_HEART: &str = include_str!("../config/heart.json");
pub const DEFAULT_PERFUSION: &str = include_str!("../config/perfusion.json");
pub const DEFAULT_VENTILATION: &str = include_str!("../config/ventilation.json");

#[derive(Debug, thiserror::Error)]
pub enum RuleFileError {
    #[error("cannot read {}: {source}", .path.display())]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Model(#[from] eitmap_core::Error),
}

/// Parses rule-base JSON, reporting the location of the first problem.
pub fn parse_rule_base(text: &str) -> Result<RuleBase, RuleFileError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        RuleFileError::Parse {
            path,
            message: e.into_inner().to_string(),
        }
    })
}

pub fn load_rule_base(path: impl AsRef<Path>) -> Result<RuleBase, RuleFileError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| RuleFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_rule_base(&text)
}

pub fn default_heart() -> RuleBase {
    parse_rule_base(DEFAULT_HEART).expect("embedded heart rule base is valid")
}

pub fn default_perfusion() -> RuleBase {
    parse_rule_base(DEFAULT_PERFUSION).expect("embedded perfusion rule base is valid")
}

pub fn default_ventilation() -> RuleBase {
    parse_rule_base(DEFAULT_VENTILATION).expect("embedded ventilation rule base is valid")
}

pub fn default_suite() -> ModelSuite {
    ModelSuite::new(default_heart(), default_perfusion(), default_ventilation())
        .expect("embedded rule bases form a valid suite")
}
