use std::fmt;
use std::io;
use std::path::Path;

use serde::Serialize;
use srl_core::corpus::CorpusError;
use srl_core::encoding::{BackendError, EncodingError};
use srl_core::evaluation::EvalError;
use srl_core::inference::{InferenceError, TagError};

/// Failure classes, each with its own exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Io,
    InputFormat,
    Backend,
    Validation,
}

impl Kind {
    pub fn exit_code(self) -> u8 {
        match self {
            Kind::Io => 3,
            Kind::InputFormat => 4,
            Kind::Backend => 5,
            Kind::Validation => 6,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Failure {
    pub error: Kind,
    pub message: String,
}

impl Failure {
    pub fn new(error: Kind, message: impl Into<String>) -> Self {
        Failure {
            error,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: io::Error) -> Self {
        Failure::new(Kind::Io, format!("{}: {err}", path.display()))
    }

    pub fn format(path: &Path, err: impl fmt::Display) -> Self {
        Failure::new(Kind::InputFormat, format!("{}: {err}", path.display()))
    }

    pub fn corpus(path: &Path, err: CorpusError) -> Self {
        match err {
            CorpusError::Io(e) => Failure::io(path, e),
            other => Failure::format(path, other),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(err: EvalError) -> Self {
        Failure::new(Kind::Validation, err.to_string())
    }
}

impl From<InferenceError> for Failure {
    fn from(err: InferenceError) -> Self {
        let kind = match &err {
            InferenceError::PredicateOutOfRange { .. }
            | InferenceError::DuplicatePredicate(_)
            | InferenceError::WordCountMismatch { .. }
            | InferenceError::EmptyBatch => Kind::Validation,
            InferenceError::Encoding(EncodingError::EmptySentence) => Kind::InputFormat,
            _ => Kind::Backend,
        };
        Failure::new(kind, err.to_string())
    }
}

impl From<TagError> for Failure {
    fn from(err: TagError) -> Self {
        let message = format!("sentence {}: {}", err.sentence + 1, err.source);
        Failure::new(Failure::from(err.source).error, message)
    }
}

impl From<BackendError> for Failure {
    fn from(err: BackendError) -> Self {
        Failure::new(Kind::Backend, err.to_string())
    }
}
