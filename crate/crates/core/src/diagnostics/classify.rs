use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::bio::{BioSequence, BioTag, Frame, LabeledSpan};
use crate::diagnostics::tree::DepTree;
use crate::role::RoleLabel;

/// Outcome of classifying a repeated-role pair, plus `NoBucket` for tokens
/// that belong to no pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ErrorBucket {
    NoBucket,
    OtherRepeat,
    SameHead,
    SubtreeAttach,
    PpAttach,
}

impl ErrorBucket {
    /// Report order: unclassified, unfixable, then the fixable kinds.
    pub const ALL: [ErrorBucket; 5] = [
        ErrorBucket::NoBucket,
        ErrorBucket::OtherRepeat,
        ErrorBucket::SameHead,
        ErrorBucket::SubtreeAttach,
        ErrorBucket::PpAttach,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorBucket::NoBucket => "NO_BUCKET",
            ErrorBucket::OtherRepeat => "OTHER_REPEAT",
            ErrorBucket::SameHead => "same_head",
            ErrorBucket::SubtreeAttach => "subtree_attach",
            ErrorBucket::PpAttach => "pp_attach",
        }
    }

    pub fn is_fixable(self) -> bool {
        matches!(
            self,
            ErrorBucket::SameHead | ErrorBucket::SubtreeAttach | ErrorBucket::PpAttach
        )
    }
}

impl fmt::Display for ErrorBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ErrorBucket {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ErrorBucket::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| format!("unknown bucket `{s}`"))
    }
}

impl Serialize for ErrorBucket {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ErrorBucket {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Two consecutive spans of one frame carrying the same role.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct RepeatedPair {
    pub role: RoleLabel,
    pub earlier: LabeledSpan,
    pub later: LabeledSpan,
}

/// Pairs of neighbouring spans with the same role.
///
/// Only O tokens may separate the two spans, since any labeled span in
/// between would itself be the neighbour. `V` is never paired.
pub fn find_repeated_spans(frame: &Frame) -> Vec<RepeatedPair> {
    frame
        .spans()
        .windows(2)
        .filter(|w| w[0].role == w[1].role && !w[0].role.is_predicate())
        .map(|w| RepeatedPair {
            role: w[0].role.clone(),
            earlier: w[0].clone(),
            later: w[1].clone(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagnosticError {
    #[error("span {start}..={end} lies outside a tree of {len} tokens")]
    SpanOutsideTree { start: usize, end: usize, len: usize },
    #[error("cannot merge {earlier} and {later}: {reason}")]
    Unmergeable {
        earlier: LabeledSpan,
        later: LabeledSpan,
        reason: String,
    },
}

fn check_span(span: &LabeledSpan, tree: &DepTree) -> Result<(), DiagnosticError> {
    if span.start > span.end || span.end >= tree.len() {
        return Err(DiagnosticError::SpanOutsideTree {
            start: span.start,
            end: span.end,
            len: tree.len(),
        });
    }
    Ok(())
}

/// The token of `span` whose head lies outside it; the leftmost if several do.
pub fn span_root(span: &LabeledSpan, tree: &DepTree) -> Result<usize, DiagnosticError> {
    check_span(span, tree)?;
    let root = (span.start..=span.end)
        .find(|&t| tree.head(t).is_none_or(|h| !span.contains(h)))
        .expect("an acyclic tree leaves every span through some token");
    Ok(root)
}

/// Relations that count as prepositional modification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PpRelations {
    relations: BTreeSet<String>,
    /// Also accept any nominal carrying a `case` dependent.
    case_marked: bool,
}

impl PpRelations {
    pub const DEFAULT: &'static [&'static str] = &["prep", "pobj", "nmod"];

    pub fn new<S: AsRef<str>>(relations: &[S], case_marked: bool) -> Self {
        PpRelations {
            relations: relations.iter().map(|r| r.as_ref().to_string()).collect(),
            case_marked,
        }
    }

    fn attaches_as_pp(&self, token: usize, tree: &DepTree) -> bool {
        self.relations.contains(tree.base_relation(token))
            || (self.case_marked && tree.children(token).any(|c| tree.base_relation(c) == "case"))
    }
}

impl Default for PpRelations {
    fn default() -> Self {
        PpRelations::new(PpRelations::DEFAULT, true)
    }
}

/// Assigns repeated pairs to buckets, testing pp_attach, then same_head,
/// then subtree_attach.
#[derive(Debug, Clone, Default)]
pub struct Classifier {
    pp: PpRelations,
}

impl Classifier {
    pub fn new(pp: PpRelations) -> Self {
        Classifier { pp }
    }

    pub fn classify(&self, pair: &RepeatedPair, tree: &DepTree) -> Result<ErrorBucket, DiagnosticError> {
        let (a, b) = (&pair.earlier, &pair.later);
        let ra = span_root(a, tree)?;
        let rb = span_root(b, tree)?;
        let pp_into = |root: usize, other: &LabeledSpan| {
            tree.head(root).is_some_and(|h| other.contains(h)) && self.pp.attaches_as_pp(root, tree)
        };
        if pp_into(rb, a) || pp_into(ra, b) {
            return Ok(ErrorBucket::PpAttach);
        }
        if tree.head(ra).is_some() && tree.head(ra) == tree.head(rb) {
            return Ok(ErrorBucket::SameHead);
        }
        if tree.is_proper_descendant(ra, rb) || tree.is_proper_descendant(rb, ra) {
            return Ok(ErrorBucket::SubtreeAttach);
        }
        Ok(ErrorBucket::OtherRepeat)
    }
}

/// Classifies with the default relation set.
pub fn classify_pair(pair: &RepeatedPair, tree: &DepTree) -> Result<ErrorBucket, DiagnosticError> {
    Classifier::default().classify(pair, tree)
}

/// Joins the two spans of a pair, and any O tokens between them, into one
/// span that opens with B.
///
/// Refuses when either span is not present in `seq` exactly as given or when
/// a labeled token separates them.
pub fn merge_pair(seq: &BioSequence, pair: &RepeatedPair) -> Result<BioSequence, DiagnosticError> {
    let unmergeable = |reason: String| DiagnosticError::Unmergeable {
        earlier: pair.earlier.clone(),
        later: pair.later.clone(),
        reason,
    };
    let spans = seq.decode_spans();
    for span in [&pair.earlier, &pair.later] {
        if span.role != pair.role || !spans.contains(span) {
            return Err(unmergeable(format!("{span} is not a span of the sequence")));
        }
    }
    if pair.earlier.end >= pair.later.start {
        return Err(unmergeable("spans are not in order".to_string()));
    }
    if let Some(i) = (pair.earlier.end + 1..pair.later.start).find(|&i| !seq.tags()[i].is_outside()) {
        return Err(unmergeable(format!("token {i} carries {}", seq.tags()[i])));
    }
    let mut out = seq.clone();
    out.set(pair.earlier.start, BioTag::Begin(pair.role.clone()));
    for i in pair.earlier.start + 1..=pair.later.end {
        out.set(i, BioTag::Inside(pair.role.clone()));
    }
    Ok(out)
}

/// Opens every span with B. See [`BioSequence::repair_boundaries`].
pub fn repair_boundary(seq: &BioSequence) -> BioSequence {
    seq.repair_boundaries()
}
