//! Transfer of BIO labels from a source sentence to its translation through
//! word alignments.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::bio::{BioSequence, BioTag};
use crate::diagnostics::{AnalysisSentence, Analyzer, SentenceTree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProjectionError {
    #[error("bad alignment pair `{0}`, expected `i-j`")]
    BadPair(String),
    #[error("alignment {source_index}-{target} outside sentences of {source_len} and {target_len} tokens")]
    OutOfBounds {
        source_index: usize,
        target: usize,
        source_len: usize,
        target_len: usize,
    },
    #[error("alignment is not one-to-one at {0}-{1}")]
    NotInjective(usize, usize),
}

/// A set of `(source, target)` token links.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Alignment(BTreeSet<(usize, usize)>);

impl Alignment {
    pub fn new<I: IntoIterator<Item = (usize, usize)>>(pairs: I) -> Self {
        Alignment(pairs.into_iter().collect())
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, source: usize, target: usize) -> bool {
        self.0.contains(&(source, target))
    }

    /// No source or target index appears twice.
    pub fn is_one_to_one(&self) -> bool {
        let mut sources = HashSet::new();
        let mut targets = HashSet::new();
        self.pairs().all(|(s, t)| sources.insert(s) && targets.insert(t))
    }

    pub fn check_bounds(&self, source_len: usize, target_len: usize) -> Result<(), ProjectionError> {
        match self.pairs().find(|&(s, t)| s >= source_len || t >= target_len) {
            Some((s, t)) => Err(ProjectionError::OutOfBounds {
                source_index: s,
                target: t,
                source_len,
                target_len,
            }),
            None => Ok(()),
        }
    }
}

impl FromStr for Alignment {
    type Err = ProjectionError;

    /// Parses one line of Pharaoh format: whitespace-separated `i-j` pairs.
    fn from_str(line: &str) -> Result<Self, Self::Err> {
        line.split_whitespace()
            .map(|pair| {
                let bad = || ProjectionError::BadPair(pair.to_string());
                let (s, t) = pair.split_once('-').ok_or_else(bad)?;
                Ok((s.parse().map_err(|_| bad())?, t.parse().map_err(|_| bad())?))
            })
            .collect::<Result<BTreeSet<_>, _>>()
            .map(Alignment)
    }
}

impl fmt::Display for Alignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pairs: Vec<String> = self.pairs().map(|(s, t)| format!("{s}-{t}")).collect();
        f.write_str(&pairs.join(" "))
    }
}

/// The result of making an alignment one-to-one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolved {
    pub kept: Alignment,
    pub dropped: Vec<(usize, usize)>,
}

/// Chooses which links survive when a token has several.
pub trait AlignmentPolicy {
    fn resolve(&self, alignment: &Alignment) -> Resolved;
}

/// Keeps links in order of increasing `|i - j|`, then smaller source, then
/// smaller target, skipping any link whose source or target is already used.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NearestFirst;

impl AlignmentPolicy for NearestFirst {
    fn resolve(&self, alignment: &Alignment) -> Resolved {
        let mut order: Vec<(usize, usize)> = alignment.pairs().collect();
        order.sort_by_key(|&(s, t)| (s.abs_diff(t), s, t));
        let mut sources = HashSet::new();
        let mut targets = HashSet::new();
        let mut kept = BTreeSet::new();
        let mut dropped = Vec::new();
        for (s, t) in order {
            if sources.contains(&s) || targets.contains(&t) {
                dropped.push((s, t));
            } else {
                sources.insert(s);
                targets.insert(t);
                kept.insert((s, t));
            }
        }
        dropped.sort_unstable();
        Resolved {
            kept: Alignment(kept),
            dropped,
        }
    }
}

pub fn enforce_one_to_one(alignment: &Alignment) -> Resolved {
    NearestFirst.resolve(alignment)
}

/// Target labels plus, per target token, the source token it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProjectedTags {
    pub labels: BioSequence,
    pub provenance: Vec<Option<usize>>,
}

/// Copies each aligned source tag onto its target token, leaves unaligned
/// targets O and then opens every projected span with B.
pub fn project_tags(
    source: &BioSequence,
    alignment: &Alignment,
    target_len: usize,
) -> Result<ProjectedTags, ProjectionError> {
    alignment.check_bounds(source.len(), target_len)?;
    let mut tags = vec![BioTag::Outside; target_len];
    let mut provenance = vec![None; target_len];
    let mut sources = HashSet::new();
    for (s, t) in alignment.pairs() {
        if provenance[t].is_some() || !sources.insert(s) {
            return Err(ProjectionError::NotInjective(s, t));
        }
        tags[t] = source.tags()[s].clone();
        provenance[t] = Some(s);
    }
    Ok(ProjectedTags {
        labels: BioSequence::new(tags).repair_boundaries(),
        provenance,
    })
}

/// A tagged source sentence: words plus `(predicate index, labels)` frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSentence {
    pub id: String,
    pub words: Vec<String>,
    pub frames: Vec<(usize, BioSequence)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProjectedFrame {
    pub source_predicate: usize,
    /// Where the predicate landed, if it is aligned.
    pub target_predicate: Option<usize>,
    /// Source labels after repair, as projected.
    pub source_labels: BioSequence,
    #[serde(flatten)]
    pub projected: ProjectedTags,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProjectedSentence {
    pub id: String,
    pub words: Vec<String>,
    pub frames: Vec<ProjectedFrame>,
    pub dropped_alignments: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProjectionFailure {
    pub sentence: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ProjectionOutput {
    pub sentences: Vec<ProjectedSentence>,
    pub skipped: Vec<ProjectionFailure>,
    pub auto_merged: usize,
}

/// One target sentence and its raw alignment to the source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetSentence {
    pub words: Vec<String>,
    pub alignment: Alignment,
}

/// Repairs source frames, then projects them sentence by sentence.
///
/// Sentences are paired by position. With trees, source frames go through
/// the dependency-aware analyzer first; every frame then has its span
/// boundaries repaired. A source sentence without a target (or the
/// reverse) is reported and skipped.
pub fn project_corpus(
    sources: &[SourceSentence],
    targets: &[TargetSentence],
    trees: Option<&[SentenceTree]>,
    analyzer: &Analyzer,
    policy: &dyn AlignmentPolicy,
) -> ProjectionOutput {
    let mut out = ProjectionOutput::default();
    for (i, source) in sources.iter().enumerate() {
        let Some(target) = targets.get(i) else {
            out.skipped.push(ProjectionFailure {
                sentence: source.id.clone(),
                reason: "no target sentence".to_string(),
            });
            continue;
        };
        let mut frames = source.frames.clone();
        if let Some(trees) = trees {
            let tree = trees.get(i).cloned().unwrap_or(SentenceTree::Missing);
            let analysis = analyzer.analyze_corpus(&[AnalysisSentence {
                id: source.id.clone(),
                frames,
                tree,
            }]);
            out.auto_merged += analysis.report.auto_merged;
            frames = analysis
                .sentences
                .into_iter()
                .next()
                .expect("one sentence in, one out")
                .frames;
        }
        let resolved = policy.resolve(&target.alignment);
        let projected: Result<Vec<ProjectedFrame>, ProjectionError> = frames
            .into_iter()
            .map(|(p, labels)| {
                let labels = labels.repair_boundaries();
                let projected = project_tags(&labels, &resolved.kept, target.words.len())?;
                Ok(ProjectedFrame {
                    source_predicate: p,
                    target_predicate: resolved.kept.pairs().find(|&(s, _)| s == p).map(|(_, t)| t),
                    source_labels: labels,
                    projected,
                })
            })
            .collect();
        match projected {
            Ok(frames) => out.sentences.push(ProjectedSentence {
                id: source.id.clone(),
                words: target.words.clone(),
                frames,
                dropped_alignments: resolved.dropped,
            }),
            Err(e) => out.skipped.push(ProjectionFailure {
                sentence: source.id.clone(),
                reason: e.to_string(),
            }),
        }
    }
    for i in sources.len()..targets.len() {
        out.skipped.push(ProjectionFailure {
            sentence: (i + 1).to_string(),
            reason: "no source sentence".to_string(),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(tags: &[&str]) -> BioSequence {
        BioSequence::parse(tags).unwrap()
    }

    #[test]
    fn parses_pharaoh() {
        let a: Alignment = "0-0 1-2  2-1 1-2".parse().unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(a.to_string(), "0-0 1-2 2-1");
        assert!("0-x".parse::<Alignment>().is_err());
        assert!("01".parse::<Alignment>().is_err());
        assert!("".parse::<Alignment>().unwrap().is_empty());
    }

    #[test]
    fn nearest_links_win() {
        let a: Alignment = "7-5 8-6 9-7 9-9 10-10 11-7".parse().unwrap();
        let r = enforce_one_to_one(&a);
        assert_eq!(r.dropped, [(9, 7)]);
        assert!(r.kept.contains(11, 7) && r.kept.contains(9, 9));
        assert!(r.kept.is_one_to_one());
        assert_eq!(enforce_one_to_one(&r.kept).kept, r.kept);
        // equal distance: smaller source first
        let r = enforce_one_to_one(&"0-1 2-1".parse().unwrap());
        assert_eq!(r.dropped, [(2, 1)]);
    }

    #[test]
    fn projection_basics() {
        let src = seq(&["B-ARG0", "B-V", "B-ARG1", "I-ARG1"]);
        let ident = Alignment::new((0..4).map(|i| (i, i)));
        assert_eq!(project_tags(&src, &ident, 4).unwrap().labels, src);
        let empty = project_tags(&src, &Alignment::default(), 3).unwrap();
        assert_eq!(empty.labels, BioSequence::outside(3));
        assert_eq!(empty.provenance, [None, None, None]);
        // ARG1 reversed in the target: I lands first and is promoted
        let flipped = Alignment::new([(0, 0), (1, 1), (2, 3), (3, 2)]);
        let out = project_tags(&src, &flipped, 4).unwrap();
        assert_eq!(out.labels, seq(&["B-ARG0", "B-V", "B-ARG1", "B-ARG1"]));
        assert_eq!(out.provenance, [Some(0), Some(1), Some(3), Some(2)]);
    }

    #[test]
    fn projection_rejects_bad_alignments() {
        let src = seq(&["B-ARG0", "B-V"]);
        assert!(matches!(
            project_tags(&src, &Alignment::new([(0, 0), (1, 0)]), 2),
            Err(ProjectionError::NotInjective(1, 0))
        ));
        assert!(matches!(
            project_tags(&src, &Alignment::new([(0, 5)]), 2),
            Err(ProjectionError::OutOfBounds { .. })
        ));
    }

    #[test]
    fn corpus_pairs_by_position() {
        let sources = vec![
            SourceSentence {
                id: "a".into(),
                words: vec!["he".into(), "left".into()],
                frames: vec![(1, seq(&["I-ARG0", "B-V"]))],
            },
            SourceSentence {
                id: "b".into(),
                words: vec!["x".into()],
                frames: vec![],
            },
        ];
        let targets = vec![TargetSentence {
            words: vec!["il".into(), "est".into(), "parti".into()],
            alignment: "0-0 1-2".parse().unwrap(),
        }];
        let out = project_corpus(&sources, &targets, None, &Analyzer::default(), &NearestFirst);
        assert_eq!(out.sentences.len(), 1);
        let f = &out.sentences[0].frames[0];
        assert_eq!(f.projected.labels, seq(&["B-ARG0", "O", "B-V"]));
        assert_eq!(f.source_labels, seq(&["B-ARG0", "B-V"]));
        assert_eq!(f.target_predicate, Some(2));
        assert_eq!(out.skipped[0].sentence, "b");
    }
}
