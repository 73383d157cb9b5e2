//! Column-format SRL annotations to per-predicate JSON instances.
//!
//! Input is UTF-8 text with one token per line and blank lines between
//! sentences. The first whitespace-separated column is the surface token; each
//! further column holds one predicate's arguments in bracket notation:
//!
//! ```text
//! Mary     (ARG0*)
//! gave     (V*)
//! me       (ARG2*)
//! a        (ARG1*
//! present  *)
//! .        *
//! ```
//!
//! Lines starting with `#` are comments; `# id = <name>` names the sentence.
//! Nested brackets are flattened to the outermost span.

use std::fmt;
use std::io::{self, BufRead, Write};

use regex::Regex;
use serde::Serialize;
use thiserror::Error;

use crate::bio::{tokens_from, BioSequence, LabeledSpan, SrlInstance, Token};
use crate::role::RoleLabel;

/// Default artifact patterns: star-prefixed null elements (`*`, `*T*-1`,
/// `*PRO*`, `*-2`, ...) and bare `%` tokens.
pub const DEFAULT_ARTIFACT_PATTERNS: &[&str] = &[r"^\*", r"^%$"];

#[derive(Debug, Clone)]
pub struct ArtifactPatterns(Vec<Regex>);

impl ArtifactPatterns {
    pub fn new<S: AsRef<str>>(patterns: &[S]) -> Result<Self, regex::Error> {
        patterns
            .iter()
            .map(|p| Regex::new(p.as_ref()))
            .collect::<Result<Vec<_>, _>>()
            .map(ArtifactPatterns)
    }

    /// One regex per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, regex::Error> {
        let lines: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        Self::new(&lines)
    }

    pub fn is_artifact(&self, token: &str) -> bool {
        self.0.iter().any(|re| re.is_match(token))
    }
}

impl Default for ArtifactPatterns {
    fn default() -> Self {
        Self::new(DEFAULT_ARTIFACT_PATTERNS).expect("default patterns compile")
    }
}

/// Drops artifact tokens and re-packs indices densely.
pub fn clean_tokens<S: AsRef<str>>(raw: &[S], patterns: &ArtifactPatterns) -> Vec<Token> {
    let kept: Vec<&str> = raw
        .iter()
        .map(AsRef::as_ref)
        .filter(|t| !t.is_empty() && !t.contains(char::is_whitespace) && !patterns.is_artifact(t))
        .collect();
    tokens_from(&kept).expect("filtered tokens are valid")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnRow {
    pub token: String,
    pub cells: Vec<String>,
}

/// A sentence in column format with one annotation column per predicate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSentence {
    id: String,
    rows: Vec<ColumnRow>,
    predicate_count: usize,
}

impl ColumnSentence {
    pub fn new(id: impl Into<String>, rows: Vec<ColumnRow>) -> Result<Self, SkipReason> {
        let predicate_count = rows.first().map_or(0, |r| r.cells.len());
        for (i, row) in rows.iter().enumerate() {
            if row.cells.len() != predicate_count {
                return Err(SkipReason::RaggedColumns {
                    row: i,
                    expected: predicate_count,
                    found: row.cells.len(),
                });
            }
        }
        Ok(ColumnSentence {
            id: id.into(),
            rows,
            predicate_count,
        })
    }

    /// Renders BIO label sequences back into bracket notation.
    pub fn render(id: impl Into<String>, words: &[String], columns: &[BioSequence]) -> Self {
        let mut rows: Vec<ColumnRow> = words
            .iter()
            .map(|w| ColumnRow {
                token: w.clone(),
                cells: Vec::with_capacity(columns.len()),
            })
            .collect();
        for seq in columns {
            let mut cells = vec!["*".to_string(); words.len()];
            for span in seq.decode_spans() {
                cells[span.start] = format!("({}*", span.role);
                cells[span.end].push(')');
            }
            for (row, cell) in rows.iter_mut().zip(cells) {
                row.cells.push(cell);
            }
        }
        ColumnSentence {
            id: id.into(),
            rows,
            predicate_count: columns.len(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn rows(&self) -> &[ColumnRow] {
        &self.rows
    }

    pub fn predicate_count(&self) -> usize {
        self.predicate_count
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# id = {}\n", self.id);
        for row in &self.rows {
            out.push_str(&row.token);
            for cell in &row.cells {
                out.push('\t');
                out.push_str(cell);
            }
            out.push('\n');
        }
        out
    }
}

/// Why a sentence was excluded from the output.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SkipReason {
    #[error("row {row} has {found} annotation columns, expected {expected}")]
    RaggedColumns { row: usize, expected: usize, found: usize },
    #[error("malformed cell `{cell}` at row {row}, column {column}")]
    MalformedCell { row: usize, column: usize, cell: String },
    #[error("unknown role `{role}` in column {column}")]
    UnknownRole { column: usize, role: String },
    #[error("unbalanced brackets in column {column}")]
    Unbalanced { column: usize },
    #[error("column {column} has no (V* predicate")]
    MissingPredicate { column: usize },
    #[error("column {column} has more than one (V* predicate")]
    MultiplePredicates { column: usize },
    #[error("predicate of column {column} is an artifact token")]
    PredicateIsArtifact { column: usize },
    #[error("sentence is empty after artifact removal")]
    Empty,
}

/// Instances parsed from one sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedSentence {
    pub instances: Vec<SrlInstance>,
    /// Brackets that opened inside an already open span.
    pub nested_flattened: usize,
}

struct Cell<'a> {
    opens: Vec<&'a str>,
    closes: usize,
}

fn parse_cell(cell: &str) -> Option<Cell<'_>> {
    let mut rest = cell;
    let mut opens = Vec::new();
    while let Some(after) = rest.strip_prefix('(') {
        let end = after.find(['(', '*'])?;
        if end == 0 {
            return None;
        }
        opens.push(&after[..end]);
        rest = &after[end..];
    }
    let rest = rest.strip_prefix('*')?;
    if !rest.chars().all(|c| c == ')') {
        return None;
    }
    Some(Cell {
        opens,
        closes: rest.len(),
    })
}

/// Parses bracket columns into instances.
#[derive(Debug, Clone, Default)]
pub struct ColumnParser {
    patterns: ArtifactPatterns,
}

impl ColumnParser {
    pub fn new(patterns: ArtifactPatterns) -> Self {
        ColumnParser { patterns }
    }

    pub fn parse(&self, sent: &ColumnSentence) -> Result<ParsedSentence, SkipReason> {
        let n = sent.rows.len();
        let kept: Vec<usize> = (0..n)
            .filter(|&i| !self.patterns.is_artifact(&sent.rows[i].token))
            .collect();
        if kept.is_empty() {
            return Err(SkipReason::Empty);
        }
        let mut new_index = vec![None; n];
        for (new, &old) in kept.iter().enumerate() {
            new_index[old] = Some(new);
        }
        let raw_words: Vec<&str> = kept.iter().map(|&i| sent.rows[i].token.as_str()).collect();
        let words = tokens_from(&raw_words).map_err(|_| SkipReason::Empty)?;

        let mut instances = Vec::with_capacity(sent.predicate_count);
        let mut nested_flattened = 0;
        for column in 0..sent.predicate_count {
            let (spans, predicate_row, nested) = self.parse_column(sent, column)?;
            nested_flattened += nested;
            let predicate = new_index[predicate_row].ok_or(SkipReason::PredicateIsArtifact { column })?;
            let remapped: Vec<LabeledSpan> = spans
                .into_iter()
                .filter_map(|s| {
                    let start = (s.start..=s.end).find_map(|i| new_index[i])?;
                    let end = (s.start..=s.end).rev().find_map(|i| new_index[i])?;
                    Some(LabeledSpan::new(s.role, start, end))
                })
                .collect();
            let labels =
                BioSequence::encode_spans(&remapped, words.len()).expect("flattened spans are disjoint and in range");
            instances.push(SrlInstance::new(words.clone(), predicate, labels).expect("lengths agree by construction"));
        }
        Ok(ParsedSentence {
            instances,
            nested_flattened,
        })
    }

    /// Outermost spans over raw rows, the predicate row, and the nesting count.
    fn parse_column(
        &self,
        sent: &ColumnSentence,
        column: usize,
    ) -> Result<(Vec<LabeledSpan>, usize, usize), SkipReason> {
        let mut spans = Vec::new();
        let mut stack: Vec<&str> = Vec::new();
        let mut outer: Option<(RoleLabel, usize)> = None;
        let mut predicate_row = None;
        let mut nested = 0;
        for (row_idx, row) in sent.rows.iter().enumerate() {
            let raw = &row.cells[column];
            let cell = parse_cell(raw).ok_or_else(|| SkipReason::MalformedCell {
                row: row_idx,
                column,
                cell: raw.clone(),
            })?;
            for label in cell.opens {
                let role: RoleLabel = label.parse().map_err(|_| SkipReason::UnknownRole {
                    column,
                    role: label.to_string(),
                })?;
                if role.is_predicate() {
                    if predicate_row.is_some() {
                        return Err(SkipReason::MultiplePredicates { column });
                    }
                    predicate_row = Some(row_idx);
                }
                if stack.is_empty() {
                    outer = Some((role, row_idx));
                } else {
                    nested += 1;
                }
                stack.push(label);
            }
            for _ in 0..cell.closes {
                stack.pop().ok_or(SkipReason::Unbalanced { column })?;
                if stack.is_empty() {
                    let (role, start) = outer.take().ok_or(SkipReason::Unbalanced { column })?;
                    spans.push(LabeledSpan::new(role, start, row_idx));
                }
            }
        }
        if !stack.is_empty() {
            return Err(SkipReason::Unbalanced { column });
        }
        let predicate_row = predicate_row.ok_or(SkipReason::MissingPredicate { column })?;
        Ok((spans, predicate_row, nested))
    }
}

/// Parses one sentence with the default artifact patterns.
pub fn parse_column_annotations(sent: &ColumnSentence) -> Result<Vec<SrlInstance>, SkipReason> {
    ColumnParser::default().parse(sent).map(|p| p.instances)
}

/// Reads blank-line-separated column sentences.
///
/// Each item is either a sentence or the reason a block could not be
/// represented as one (ragged rows).
pub fn read_column_sentences<R: BufRead>(reader: R) -> io::Result<Vec<(String, Result<ColumnSentence, SkipReason>)>> {
    let mut out = Vec::new();
    let mut rows: Vec<ColumnRow> = Vec::new();
    let mut id: Option<String> = None;
    let flush = |rows: &mut Vec<ColumnRow>, id: &mut Option<String>, out: &mut Vec<_>| {
        if rows.is_empty() {
            *id = None;
            return;
        }
        let name = id.take().unwrap_or_else(|| (out.len() + 1).to_string());
        let sent = ColumnSentence::new(name.clone(), std::mem::take(rows));
        out.push((name, sent));
    };
    for line in reader.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            flush(&mut rows, &mut id, &mut out);
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some(name) = comment.trim().strip_prefix("id =") {
                id = Some(name.trim().to_string());
            }
            continue;
        }
        let mut fields = trimmed.split_whitespace().map(str::to_string);
        let token = fields.next().expect("non-empty line has a field");
        rows.push(ColumnRow {
            token,
            cells: fields.collect(),
        });
    }
    flush(&mut rows, &mut id, &mut out);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedSentence {
    pub sentence: String,
    pub reason: String,
}

/// Totals for one ingestion run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub sentences_read: usize,
    pub instances_emitted: usize,
    pub sentences_skipped: usize,
    pub nested_spans_flattened: usize,
    pub skip_reasons: Vec<SkippedSentence>,
}

impl IngestReport {
    /// Combines reports from independently processed chunks.
    pub fn merge(mut self, other: IngestReport) -> IngestReport {
        self.sentences_read += other.sentences_read;
        self.instances_emitted += other.instances_emitted;
        self.sentences_skipped += other.sentences_skipped;
        self.nested_spans_flattened += other.nested_spans_flattened;
        self.skip_reasons.extend(other.skip_reasons);
        self
    }
}

impl fmt::Display for IngestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} sentences read, {} instances emitted, {} sentences skipped",
            self.sentences_read, self.instances_emitted, self.sentences_skipped
        )
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("failed to read input: {0}")]
    Read(#[source] io::Error),
    #[error("failed to write output after {flushed} instances: {source}")]
    Write {
        flushed: usize,
        #[source]
        source: io::Error,
    },
}

/// Writes one JSON line per instance and tallies skipped sentences.
pub fn emit_instances<W, I>(parsed: I, sink: &mut W) -> Result<IngestReport, IngestError>
where
    W: Write,
    I: IntoIterator<Item = (String, Result<ParsedSentence, SkipReason>)>,
{
    let mut report = IngestReport::default();
    for (id, outcome) in parsed {
        report.sentences_read += 1;
        match outcome {
            Ok(sentence) => {
                report.nested_spans_flattened += sentence.nested_flattened;
                for inst in &sentence.instances {
                    let line = serde_json::to_string(inst).expect("instances serialize");
                    writeln!(sink, "{}", line).map_err(|source| IngestError::Write {
                        flushed: report.instances_emitted,
                        source,
                    })?;
                    report.instances_emitted += 1;
                }
            }
            Err(reason) => {
                report.sentences_skipped += 1;
                report.skip_reasons.push(SkippedSentence {
                    sentence: id,
                    reason: reason.to_string(),
                });
            }
        }
    }
    sink.flush().map_err(|source| IngestError::Write {
        flushed: report.instances_emitted,
        source,
    })?;
    Ok(report)
}

/// Reads column text, parses every sentence and writes JSON lines.
pub fn ingest<R: BufRead, W: Write>(
    reader: R,
    sink: &mut W,
    parser: &ColumnParser,
) -> Result<IngestReport, IngestError> {
    let sentences = read_column_sentences(reader).map_err(IngestError::Read)?;
    let parsed = sentences
        .into_iter()
        .map(|(id, sent)| (id, sent.and_then(|s| parser.parse(&s))));
    emit_instances(parsed, sink)
}
