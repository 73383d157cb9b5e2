//! BIO tag sequences and the span algebra built on them.
//!
//! Decoding is total: an `I-X` that does not continue an `X` span opens a new
//! span, exactly as if it were `B-X`. [`BioSequence::validate`] reports such
//! orphans (and repeated roles) without rejecting the sequence.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::BioError;
use crate::role::RoleLabel;

/// A surface token and its position in the sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    text: String,
    index: usize,
}

impl Token {
    pub fn new(text: impl Into<String>, index: usize) -> Result<Self, BioError> {
        let text = text.into();
        if text.is_empty() || text.contains(char::is_whitespace) {
            return Err(BioError::InvalidToken(text));
        }
        Ok(Token { text, index })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn index(&self) -> usize {
        self.index
    }
}

/// Builds densely indexed tokens from surface strings.
pub fn tokens_from<S: AsRef<str>>(words: &[S]) -> Result<Vec<Token>, BioError> {
    words
        .iter()
        .enumerate()
        .map(|(i, w)| Token::new(w.as_ref(), i))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BioTag {
    Begin(RoleLabel),
    Inside(RoleLabel),
    Outside,
}

impl BioTag {
    pub fn role(&self) -> Option<&RoleLabel> {
        match self {
            BioTag::Begin(r) | BioTag::Inside(r) => Some(r),
            BioTag::Outside => None,
        }
    }

    pub fn is_outside(&self) -> bool {
        matches!(self, BioTag::Outside)
    }

    /// True when `self` may directly follow `prev` without opening a span.
    fn continues(&self, prev: Option<&BioTag>) -> bool {
        match (self, prev) {
            (BioTag::Inside(r), Some(BioTag::Begin(p) | BioTag::Inside(p))) => r == p,
            _ => false,
        }
    }
}

impl fmt::Display for BioTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BioTag::Begin(r) => write!(f, "B-{}", r),
            BioTag::Inside(r) => write!(f, "I-{}", r),
            BioTag::Outside => f.write_str("O"),
        }
    }
}

impl FromStr for BioTag {
    type Err = BioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "O" {
            return Ok(BioTag::Outside);
        }
        let bad = |_| BioError::UnknownTag(s.to_string());
        if let Some(role) = s.strip_prefix("B-") {
            Ok(BioTag::Begin(role.parse().map_err(bad)?))
        } else if let Some(role) = s.strip_prefix("I-") {
            Ok(BioTag::Inside(role.parse().map_err(bad)?))
        } else {
            Err(BioError::UnknownTag(s.to_string()))
        }
    }
}

impl Serialize for BioTag {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BioTag {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A role-labeled, inclusive token interval.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledSpan {
    pub role: RoleLabel,
    pub start: usize,
    pub end: usize,
}

#[allow(clippy::len_without_is_empty)]
impl LabeledSpan {
    pub fn new(role: RoleLabel, start: usize, end: usize) -> Self {
        LabeledSpan { role, start, end }
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index <= self.end
    }

    pub fn overlaps(&self, other: &LabeledSpan) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

impl fmt::Display for LabeledSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.role, self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// `I-X` that does not follow `B-X` or `I-X`.
    OrphanInside,
    /// A span whose role already labels an earlier span of the same frame.
    DuplicateRole,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Violation {
    pub position: usize,
    pub kind: ViolationKind,
    pub role: RoleLabel,
}

/// One BIO tag per word.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BioSequence(Vec<BioTag>);

impl BioSequence {
    pub fn new(tags: Vec<BioTag>) -> Self {
        BioSequence(tags)
    }

    /// All-`O` sequence of the given length.
    pub fn outside(len: usize) -> Self {
        BioSequence(vec![BioTag::Outside; len])
    }

    pub fn parse<S: AsRef<str>>(tags: &[S]) -> Result<Self, BioError> {
        tags.iter()
            .map(|t| t.as_ref().parse())
            .collect::<Result<Vec<_>, _>>()
            .map(BioSequence)
    }

    pub fn tags(&self) -> &[BioTag] {
        &self.0
    }

    pub fn into_tags(self) -> Vec<BioTag> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&BioTag> {
        self.0.get(i)
    }

    pub fn set(&mut self, i: usize, tag: BioTag) {
        self.0[i] = tag;
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.0.iter().map(ToString::to_string).collect()
    }

    /// Converts tags to spans, sorted by start.
    pub fn decode_spans(&self) -> Vec<LabeledSpan> {
        let mut spans = Vec::new();
        let mut open: Option<(&RoleLabel, usize)> = None;
        for (i, tag) in self.0.iter().enumerate() {
            let continues = tag.continues(i.checked_sub(1).map(|p| &self.0[p]));
            if continues {
                continue;
            }
            if let Some((role, start)) = open.take() {
                spans.push(LabeledSpan::new(role.clone(), start, i - 1));
            }
            if let Some(role) = tag.role() {
                open = Some((role, i));
            }
        }
        if let Some((role, start)) = open {
            spans.push(LabeledSpan::new(role.clone(), start, self.0.len() - 1));
        }
        spans
    }

    /// Encodes non-overlapping spans into a sequence of `length` tags.
    pub fn encode_spans(spans: &[LabeledSpan], length: usize) -> Result<Self, BioError> {
        let mut sorted: Vec<&LabeledSpan> = spans.iter().collect();
        sorted.sort_by_key(|s| (s.start, s.end));
        for s in &sorted {
            if s.start > s.end {
                return Err(BioError::InvertedSpan {
                    role: s.role.to_string(),
                    start: s.start,
                    end: s.end,
                });
            }
            if s.end >= length {
                return Err(BioError::SpanOutOfBounds {
                    role: s.role.to_string(),
                    start: s.start,
                    end: s.end,
                    len: length,
                });
            }
        }
        for pair in sorted.windows(2) {
            if pair[0].overlaps(pair[1]) {
                return Err(BioError::OverlappingSpans {
                    first_start: pair[0].start,
                    first_end: pair[0].end,
                    second_start: pair[1].start,
                    second_end: pair[1].end,
                });
            }
        }
        let mut tags = vec![BioTag::Outside; length];
        for s in sorted {
            tags[s.start] = BioTag::Begin(s.role.clone());
            for tag in &mut tags[s.start + 1..=s.end] {
                *tag = BioTag::Inside(s.role.clone());
            }
        }
        Ok(BioSequence(tags))
    }

    /// Lists orphan `I-X` positions and repeated-role spans, ordered by position.
    ///
    /// Repeats are detected on identical full role strings, so `ARG0` and
    /// `R-ARG0` never collide. `V` participates like any other role.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        for (i, tag) in self.0.iter().enumerate() {
            if let BioTag::Inside(role) = tag {
                if !tag.continues(i.checked_sub(1).map(|p| &self.0[p])) {
                    violations.push(Violation {
                        position: i,
                        kind: ViolationKind::OrphanInside,
                        role: role.clone(),
                    });
                }
            }
        }
        let mut seen = HashSet::new();
        for span in self.decode_spans() {
            if !seen.insert(span.role.clone()) {
                violations.push(Violation {
                    position: span.start,
                    kind: ViolationKind::DuplicateRole,
                    role: span.role,
                });
            }
        }
        violations.sort_by_key(|v| (v.position, v.kind));
        violations
    }

    /// No orphan `I-X` anywhere.
    pub fn is_well_formed(&self) -> bool {
        self.0
            .iter()
            .enumerate()
            .all(|(i, t)| !matches!(t, BioTag::Inside(_)) || t.continues(i.checked_sub(1).map(|p| &self.0[p])))
    }

    /// Promotes every span-initial `I-X` to `B-X`; all other tags are kept.
    pub fn repair_boundaries(&self) -> BioSequence {
        let mut tags = self.0.clone();
        for i in 0..tags.len() {
            let orphan = matches!(tags[i], BioTag::Inside(_)) && !tags[i].continues(i.checked_sub(1).map(|p| &tags[p]));
            if orphan {
                if let BioTag::Inside(role) = &tags[i] {
                    tags[i] = BioTag::Begin(role.clone());
                }
            }
        }
        BioSequence(tags)
    }
}

impl From<Vec<BioTag>> for BioSequence {
    fn from(tags: Vec<BioTag>) -> Self {
        BioSequence(tags)
    }
}

impl fmt::Display for BioSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for t in &self.0 {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "{}", t)?;
        }
        Ok(())
    }
}

/// The labeled spans of one predicate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    predicate_index: usize,
    spans: Vec<LabeledSpan>,
}

impl Frame {
    /// Builds a gold-style frame: spans must not overlap and exactly one
    /// must be `V`.
    pub fn new(predicate_index: usize, mut spans: Vec<LabeledSpan>) -> Result<Self, BioError> {
        spans.sort_by_key(|s| (s.start, s.end));
        for pair in spans.windows(2) {
            if pair[0].overlaps(&pair[1]) {
                return Err(BioError::OverlappingSpans {
                    first_start: pair[0].start,
                    first_end: pair[0].end,
                    second_start: pair[1].start,
                    second_end: pair[1].end,
                });
            }
        }
        let v = spans.iter().filter(|s| s.role.is_predicate()).count();
        if v != 1 {
            return Err(BioError::PredicateSpanCount(v));
        }
        Ok(Frame { predicate_index, spans })
    }

    /// Decodes system output. Unlike [`Frame::new`] this does not require a
    /// `V` span, since taggers do not always produce one.
    pub fn from_sequence(predicate_index: usize, seq: &BioSequence) -> Self {
        Frame {
            predicate_index,
            spans: seq.decode_spans(),
        }
    }

    pub fn predicate_index(&self) -> usize {
        self.predicate_index
    }

    pub fn spans(&self) -> &[LabeledSpan] {
        &self.spans
    }

    pub fn to_sequence(&self, length: usize) -> Result<BioSequence, BioError> {
        BioSequence::encode_spans(&self.spans, length)
    }
}

/// One predicate's view of a sentence, in the JSON instance shape
/// `{"words": [...], "predicate_word_idx": n, "labels": [...]}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SrlInstance {
    words: Vec<Token>,
    predicate_word_idx: usize,
    labels: BioSequence,
}

impl SrlInstance {
    pub fn new(words: Vec<Token>, predicate_word_idx: usize, labels: BioSequence) -> Result<Self, BioError> {
        if words.len() != labels.len() {
            return Err(BioError::LengthMismatch {
                words: words.len(),
                labels: labels.len(),
            });
        }
        if predicate_word_idx >= words.len() {
            return Err(BioError::PredicateOutOfRange {
                index: predicate_word_idx,
                len: words.len(),
            });
        }
        Ok(SrlInstance {
            words,
            predicate_word_idx,
            labels,
        })
    }

    pub fn words(&self) -> &[Token] {
        &self.words
    }

    pub fn word_strings(&self) -> Vec<String> {
        self.words.iter().map(|t| t.text().to_string()).collect()
    }

    pub fn predicate_word_idx(&self) -> usize {
        self.predicate_word_idx
    }

    pub fn labels(&self) -> &BioSequence {
        &self.labels
    }

    /// Whether the predicate position carries `B-V`, as in gold data.
    pub fn predicate_is_tagged(&self) -> bool {
        self.labels.get(self.predicate_word_idx) == Some(&BioTag::Begin(RoleLabel::predicate()))
    }

    pub fn frame(&self) -> Frame {
        Frame::from_sequence(self.predicate_word_idx, &self.labels)
    }
}

#[derive(Serialize, Deserialize)]
struct RawInstance {
    words: Vec<String>,
    predicate_word_idx: usize,
    labels: BioSequence,
}

impl Serialize for SrlInstance {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        RawInstance {
            words: self.word_strings(),
            predicate_word_idx: self.predicate_word_idx,
            labels: self.labels.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SrlInstance {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawInstance::deserialize(deserializer)?;
        let words = tokens_from(&raw.words).map_err(serde::de::Error::custom)?;
        SrlInstance::new(words, raw.predicate_word_idx, raw.labels).map_err(serde::de::Error::custom)
    }
}
