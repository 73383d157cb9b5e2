use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bio::BioTag;
use crate::inference::Batch;

/// Ids of the `[CLS]`, `[SEP]` and `[PAD]` pieces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpecialIds {
    pub cls: u32,
    pub sep: u32,
    pub pad: u32,
}

impl SpecialIds {
    /// BERT-base-cased assignment.
    pub const BERT: SpecialIds = SpecialIds {
        cls: 101,
        sep: 102,
        pad: 0,
    };

    pub fn new(cls: u32, sep: u32, pad: u32) -> Result<Self, BackendError> {
        if cls == sep || cls == pad || sep == pad {
            return Err(BackendError::Protocol(format!(
                "special ids must be distinct (cls={cls}, sep={sep}, pad={pad})"
            )));
        }
        Ok(SpecialIds { cls, sep, pad })
    }

    pub fn contains(&self, id: u32) -> bool {
        id == self.cls || id == self.sep || id == self.pad
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend I/O failed: {0}")]
    Io(#[from] io::Error),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("backend reported {code}: {message}")]
    Remote { code: String, message: String },
    #[error("malformed backend output: {0}")]
    Shape(String),
}

/// Per-word label scores for one batch: `[row][word][label]`.
pub type Scores = Vec<Vec<Vec<f32>>>;

/// The encoder behind the tagger: a context-free word tokenizer and a
/// forward pass that returns per-word label scores.
///
/// Both calls must be deterministic. Implementations are used by one caller
/// at a time, hence `&mut self`.
pub trait TaggerBackend {
    fn special_ids(&self) -> SpecialIds;

    /// The label vocabulary, in score order.
    fn labels(&self) -> &[BioTag];

    fn tokenize(&mut self, word: &str) -> Result<Vec<u32>, BackendError>;

    /// Scores are read at each row's `first_subword_indices`, so the result
    /// has one entry per word, not per subword.
    fn forward(&mut self, batch: &Batch) -> Result<Scores, BackendError>;
}

impl<B: TaggerBackend + ?Sized> TaggerBackend for &mut B {
    fn special_ids(&self) -> SpecialIds {
        (**self).special_ids()
    }

    fn labels(&self) -> &[BioTag] {
        (**self).labels()
    }

    fn tokenize(&mut self, word: &str) -> Result<Vec<u32>, BackendError> {
        (**self).tokenize(word)
    }

    fn forward(&mut self, batch: &Batch) -> Result<Scores, BackendError> {
        (**self).forward(batch)
    }
}

impl<B: TaggerBackend + ?Sized> TaggerBackend for Box<B> {
    fn special_ids(&self) -> SpecialIds {
        (**self).special_ids()
    }

    fn labels(&self) -> &[BioTag] {
        (**self).labels()
    }

    fn tokenize(&mut self, word: &str) -> Result<Vec<u32>, BackendError> {
        (**self).tokenize(word)
    }

    fn forward(&mut self, batch: &Batch) -> Result<Scores, BackendError> {
        (**self).forward(batch)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CallCounts {
    pub tokenize_calls: u64,
    pub forward_calls: u64,
    pub forward_rows: u64,
}

/// Wraps a backend and counts the calls made through it.
#[derive(Debug, Clone)]
pub struct CountingBackend<B> {
    inner: B,
    counts: CallCounts,
}

impl<B> CountingBackend<B> {
    pub fn new(inner: B) -> Self {
        CountingBackend {
            inner,
            counts: CallCounts::default(),
        }
    }

    pub fn counts(&self) -> CallCounts {
        self.counts
    }

    pub fn reset(&mut self) {
        self.counts = CallCounts::default();
    }

    pub fn into_inner(self) -> B {
        self.inner
    }
}

impl<B: TaggerBackend> TaggerBackend for CountingBackend<B> {
    fn special_ids(&self) -> SpecialIds {
        self.inner.special_ids()
    }

    fn labels(&self) -> &[BioTag] {
        self.inner.labels()
    }

    fn tokenize(&mut self, word: &str) -> Result<Vec<u32>, BackendError> {
        self.counts.tokenize_calls += 1;
        self.inner.tokenize(word)
    }

    fn forward(&mut self, batch: &Batch) -> Result<Scores, BackendError> {
        self.counts.forward_calls += 1;
        self.counts.forward_rows += batch.rows() as u64;
        self.inner.forward(batch)
    }
}
