use std::fmt;
use std::path::{Path, PathBuf};

use eitmap_core::pipeline::{Stage, StageError};
use eitmap_core::Error as CoreError;

/// Failure category, mapped one-to-one onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Model,
}

impl ErrorClass {
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorClass::Config => 1,
            ErrorClass::Data => 2,
            ErrorClass::Model => 3,
        }
    }
}

/// An error tagged with the stage that raised it and, when known, the file
/// involved.
#[derive(Debug)]
pub struct RunError {
    pub class: ErrorClass,
    pub stage: String,
    pub path: Option<PathBuf>,
    pub message: String,
}

impl RunError {
    pub fn new(class: ErrorClass, stage: impl fmt::Display, message: impl fmt::Display) -> Self {
        Self {
            class,
            stage: stage.to_string(),
            path: None,
            message: message.to_string(),
        }
    }

    pub fn config(stage: impl fmt::Display, message: impl fmt::Display) -> Self {
        Self::new(ErrorClass::Config, stage, message)
    }

    pub fn data(stage: impl fmt::Display, message: impl fmt::Display) -> Self {
        Self::new(ErrorClass::Data, stage, message)
    }

    pub fn model(stage: impl fmt::Display, message: impl fmt::Display) -> Self {
        Self::new(ErrorClass::Model, stage, message)
    }

    pub fn at(mut self, path: impl AsRef<Path>) -> Self {
        self.path = Some(path.as_ref().to_path_buf());
        self
    }

    /// Classifies a core error raised in `stage`.
    pub fn from_core(stage: Stage, err: &CoreError) -> Self {
        Self::new(classify(stage, err), stage, err)
    }

    pub fn exit_code(&self) -> u8 {
        self.class.exit_code()
    }
}

impl From<StageError> for RunError {
    fn from(e: StageError) -> Self {
        RunError::from_core(e.stage, &e.source)
    }
}

fn classify(stage: Stage, err: &CoreError) -> ErrorClass {
    match err {
        CoreError::InvalidConfig(_)
        | CoreError::ThresholdOutOfRange(_)
        | CoreError::InvalidSweep { .. }
        | CoreError::RegionOutOfGrid(_)
        | CoreError::InvalidGroupSize(_)
        | CoreError::InvalidLength(_) => ErrorClass::Config,
        CoreError::RuleBaseMismatch(_) | CoreError::Fuzzy(_) => ErrorClass::Model,
        _ => match stage {
            Stage::Infer | Stage::Median => ErrorClass::Model,
            _ => ErrorClass::Data,
        },
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} stage failed", self.stage)?;
        if let Some(p) = &self.path {
            write!(f, " ({})", p.display())?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for RunError {}
