//! JSON Lines instance files shared by every pipeline stage.

use std::io::{self, BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bio::{tokens_from, BioSequence, SrlInstance, Token};
use crate::error::BioError;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: BioError,
    },
    #[error("line {line}: no {field} field")]
    MissingLabels { line: usize, field: &'static str },
}

/// One predicate of one sentence, with gold labels, system labels or both.
///
/// Gold files carry `labels`; tagger output adds `predicted_labels`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub words: Vec<String>,
    pub predicate_word_idx: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<BioSequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_labels: Option<BioSequence>,
}

impl InstanceRecord {
    pub fn tokens(&self) -> Result<Vec<Token>, BioError> {
        tokens_from(&self.words)
    }

    /// Checks lengths and the predicate position against the words.
    pub fn check(&self) -> Result<(), BioError> {
        let tokens = self.tokens()?;
        for labels in [&self.labels, &self.predicted_labels].into_iter().flatten() {
            SrlInstance::new(tokens.clone(), self.predicate_word_idx, labels.clone())?;
        }
        if self.predicate_word_idx >= self.words.len() {
            return Err(BioError::PredicateOutOfRange {
                index: self.predicate_word_idx,
                len: self.words.len(),
            });
        }
        Ok(())
    }

    /// The labels a system produced: `predicted_labels` if present, else
    /// `labels`.
    pub fn system_labels(&self) -> Option<&BioSequence> {
        self.predicted_labels.as_ref().or(self.labels.as_ref())
    }
}

impl From<SrlInstance> for InstanceRecord {
    fn from(inst: SrlInstance) -> Self {
        InstanceRecord {
            words: inst.word_strings(),
            predicate_word_idx: inst.predicate_word_idx(),
            labels: Some(inst.labels().clone()),
            predicted_labels: None,
        }
    }
}

/// Parses one JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| CorpusError::Json { line: i + 1, source })?);
    }
    Ok(out)
}

/// Reads instance records and checks each one.
pub fn read_instances<R: BufRead>(reader: R) -> Result<Vec<InstanceRecord>, CorpusError> {
    let mut records: Vec<InstanceRecord> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: InstanceRecord =
            serde_json::from_str(&line).map_err(|source| CorpusError::Json { line: i + 1, source })?;
        record
            .check()
            .map_err(|source| CorpusError::Invalid { line: i + 1, source })?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_jsonl<T: Serialize, W: Write>(items: &[T], writer: &mut W) -> io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut *writer, item)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

/// A run of consecutive records over the same words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceGroup {
    pub words: Vec<String>,
    /// Indices into the record list.
    pub members: Vec<usize>,
}

/// Groups consecutive records that share their word list.
pub fn group_sentences(records: &[InstanceRecord]) -> Vec<SentenceGroup> {
    let mut groups: Vec<SentenceGroup> = Vec::new();
    for (i, r) in records.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if g.words == r.words => g.members.push(i),
            _ => groups.push(SentenceGroup {
                words: r.words.clone(),
                members: vec![i],
            }),
        }
    }
    groups
}
