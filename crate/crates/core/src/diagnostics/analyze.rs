use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::bio::{BioSequence, Frame, LabeledSpan};
use crate::diagnostics::classify::{find_repeated_spans, merge_pair, Classifier, ErrorBucket, RepeatedPair};
use crate::diagnostics::tree::{DepTree, TreeError};
use crate::percent::Percent;
use crate::role::RoleLabel;

/// The dependency parse available for a sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SentenceTree {
    Available(DepTree),
    Malformed(TreeError),
    Missing,
}

impl From<Option<Result<DepTree, TreeError>>> for SentenceTree {
    fn from(tree: Option<Result<DepTree, TreeError>>) -> Self {
        match tree {
            Some(Ok(t)) => SentenceTree::Available(t),
            Some(Err(e)) => SentenceTree::Malformed(e),
            None => SentenceTree::Missing,
        }
    }
}

/// Predicted frames of one sentence, as `(predicate index, labels)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisSentence {
    pub id: String,
    pub frames: Vec<(usize, BioSequence)>,
    pub tree: SentenceTree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairAction {
    AutoMerged,
    ReviewRequired,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiagnosisRecord {
    pub sentence: String,
    pub predicate_index: usize,
    pub role: RoleLabel,
    pub earlier: LabeledSpan,
    pub later: LabeledSpan,
    pub bucket: ErrorBucket,
    pub action: RepairAction,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BucketRow {
    pub bucket: ErrorBucket,
    pub tokens: u64,
    pub percent: Percent,
}

/// Token counts per bucket, in the order of [`ErrorBucket::ALL`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BucketHistogram {
    pub total_tokens: u64,
    pub rows: Vec<BucketRow>,
}

impl BucketHistogram {
    /// `counts` holds the non-NO_BUCKET tokens; the rest of `total_tokens`
    /// lands in NO_BUCKET.
    pub fn from_counts(total_tokens: u64, counts: &BTreeMap<ErrorBucket, u64>) -> BucketHistogram {
        let classified: u64 = counts
            .iter()
            .filter(|(b, _)| **b != ErrorBucket::NoBucket)
            .map(|(_, c)| c)
            .sum();
        let rows = ErrorBucket::ALL
            .into_iter()
            .map(|bucket| {
                let tokens = if bucket == ErrorBucket::NoBucket {
                    total_tokens - classified
                } else {
                    counts.get(&bucket).copied().unwrap_or(0)
                };
                BucketRow {
                    bucket,
                    tokens,
                    percent: Percent::of(tokens, total_tokens),
                }
            })
            .collect();
        BucketHistogram { total_tokens, rows }
    }

    pub fn row(&self, bucket: ErrorBucket) -> &BucketRow {
        self.rows
            .iter()
            .find(|r| r.bucket == bucket)
            .expect("every bucket has a row")
    }
}

impl fmt::Display for BucketHistogram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let header = format!("% of {}", self.total_tokens);
        writeln!(f, "{:<16} {:>10} {:>12}", "bucket", "tokens", header)?;
        for row in &self.rows {
            writeln!(
                f,
                "{:<16} {:>10} {:>12}",
                row.bucket.as_str(),
                row.tokens,
                row.percent.to_string()
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LabelCount {
    pub label: String,
    pub count: u64,
    pub percent: Percent,
}

/// Sorts `(label, count)` by descending count, then label, with shares of
/// the total.
pub(crate) fn ranked(counts: BTreeMap<String, u64>) -> Vec<LabelCount> {
    let total: u64 = counts.values().sum();
    let mut rows: Vec<LabelCount> = counts
        .into_iter()
        .map(|(label, count)| LabelCount {
            percent: Percent::of(count, total),
            label,
            count,
        })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.label.cmp(&b.label)));
    rows
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnanalyzableSentence {
    pub sentence: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnalysisReport {
    pub sentences: usize,
    pub frames: usize,
    pub repeated_pairs: usize,
    pub auto_merged: usize,
    pub review_required: usize,
    pub histogram: BucketHistogram,
    /// Orphan and repeated-role violations in the input, per full role label.
    pub violations_by_label: Vec<LabelCount>,
    pub unanalyzable: Vec<UnanalyzableSentence>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairedSentence {
    pub id: String,
    pub frames: Vec<(usize, BioSequence)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Analysis {
    pub sentences: Vec<RepairedSentence>,
    pub records: Vec<DiagnosisRecord>,
    pub report: AnalysisReport,
}

impl Analysis {
    pub fn review_queue(&self) -> impl Iterator<Item = &DiagnosisRecord> {
        self.records.iter().filter(|r| r.action == RepairAction::ReviewRequired)
    }
}

struct FrameOutcome {
    labels: BioSequence,
    records: Vec<DiagnosisRecord>,
    /// Bucket of each token, if a classified pair covers it.
    owners: Vec<Option<ErrorBucket>>,
}

/// Finds, classifies and repairs repeated-role spans across a corpus.
#[derive(Debug, Clone, Default)]
pub struct Analyzer {
    classifier: Classifier,
}

impl Analyzer {
    pub fn new(classifier: Classifier) -> Self {
        Analyzer { classifier }
    }

    /// Repeatedly merges the leftmost fixable pair of the frame until only
    /// unfixable pairs (if any) remain; those go to review untouched.
    fn analyze_frame(&self, id: &str, predicate: usize, labels: &BioSequence, tree: &SentenceTree) -> FrameOutcome {
        let mut seq = labels.clone();
        let mut records = Vec::new();
        let mut owners = vec![None; labels.len()];
        let record = |pair: &RepeatedPair, bucket, action, note: Option<String>| DiagnosisRecord {
            sentence: id.to_string(),
            predicate_index: predicate,
            role: pair.role.clone(),
            earlier: pair.earlier.clone(),
            later: pair.later.clone(),
            bucket,
            action,
            note,
        };
        let mut claim = |pair: &RepeatedPair, bucket: ErrorBucket| {
            for t in (pair.earlier.start..=pair.earlier.end).chain(pair.later.start..=pair.later.end) {
                owners[t].get_or_insert(bucket);
            }
        };
        loop {
            let pairs = find_repeated_spans(&Frame::from_sequence(predicate, &seq));
            if pairs.is_empty() {
                break;
            }
            let tree = match tree {
                SentenceTree::Available(t) if t.len() == seq.len() => t,
                SentenceTree::Available(t) => {
                    let note = TreeError::TokenCount {
                        tree: t.len(),
                        sentence: seq.len(),
                    }
                    .to_string();
                    for p in &pairs {
                        claim(p, ErrorBucket::OtherRepeat);
                        records.push(record(
                            p,
                            ErrorBucket::OtherRepeat,
                            RepairAction::ReviewRequired,
                            Some(note.clone()),
                        ));
                    }
                    break;
                }
                SentenceTree::Malformed(e) => {
                    let note = format!("malformed dependency tree: {e}");
                    for p in &pairs {
                        claim(p, ErrorBucket::OtherRepeat);
                        records.push(record(
                            p,
                            ErrorBucket::OtherRepeat,
                            RepairAction::ReviewRequired,
                            Some(note.clone()),
                        ));
                    }
                    break;
                }
                SentenceTree::Missing => {
                    for p in &pairs {
                        records.push(record(
                            p,
                            ErrorBucket::NoBucket,
                            RepairAction::None,
                            Some("no dependency tree".to_string()),
                        ));
                    }
                    break;
                }
            };
            let classified: Vec<(RepeatedPair, Result<ErrorBucket, String>)> = pairs
                .into_iter()
                .map(|p| {
                    let bucket = self.classifier.classify(&p, tree).map_err(|e| e.to_string());
                    (p, bucket)
                })
                .collect();
            let fixable = classified.iter().find(|(_, b)| matches!(b, Ok(b) if b.is_fixable()));
            if let Some((pair, Ok(bucket))) = fixable {
                match merge_pair(&seq, pair) {
                    Ok(merged) => {
                        claim(pair, *bucket);
                        records.push(record(pair, *bucket, RepairAction::AutoMerged, None));
                        seq = merged;
                        continue;
                    }
                    Err(e) => unreachable!("pairs from find_repeated_spans always merge: {e}"),
                }
            }
            for (pair, outcome) in classified {
                let note = outcome.err();
                claim(&pair, ErrorBucket::OtherRepeat);
                records.push(record(
                    &pair,
                    ErrorBucket::OtherRepeat,
                    RepairAction::ReviewRequired,
                    note,
                ));
            }
            break;
        }
        FrameOutcome {
            labels: seq,
            records,
            owners,
        }
    }

    pub fn analyze_corpus(&self, sentences: &[AnalysisSentence]) -> Analysis {
        let mut repaired = Vec::with_capacity(sentences.len());
        let mut records = Vec::new();
        let mut bucket_tokens: BTreeMap<ErrorBucket, u64> = BTreeMap::new();
        let mut violations: BTreeMap<String, u64> = BTreeMap::new();
        let mut unanalyzable = Vec::new();
        let mut total_tokens = 0u64;
        let mut frames = 0;
        for sentence in sentences {
            match &sentence.tree {
                SentenceTree::Missing => unanalyzable.push(UnanalyzableSentence {
                    sentence: sentence.id.clone(),
                    reason: "no dependency tree".to_string(),
                }),
                SentenceTree::Malformed(e) => unanalyzable.push(UnanalyzableSentence {
                    sentence: sentence.id.clone(),
                    reason: e.to_string(),
                }),
                SentenceTree::Available(_) => {}
            }
            let mut out_frames = Vec::with_capacity(sentence.frames.len());
            for (predicate, labels) in &sentence.frames {
                frames += 1;
                total_tokens += labels.len() as u64;
                for v in labels.validate() {
                    *violations.entry(v.role.to_string()).or_default() += 1;
                }
                let outcome = self.analyze_frame(&sentence.id, *predicate, labels, &sentence.tree);
                for bucket in outcome.owners.into_iter().flatten() {
                    *bucket_tokens.entry(bucket).or_default() += 1;
                }
                records.extend(outcome.records);
                out_frames.push((*predicate, outcome.labels));
            }
            repaired.push(RepairedSentence {
                id: sentence.id.clone(),
                frames: out_frames,
            });
        }
        let count = |action| records.iter().filter(|r| r.action == action).count();
        let report = AnalysisReport {
            sentences: sentences.len(),
            frames,
            repeated_pairs: records.len(),
            auto_merged: count(RepairAction::AutoMerged),
            review_required: count(RepairAction::ReviewRequired),
            histogram: BucketHistogram::from_counts(total_tokens, &bucket_tokens),
            violations_by_label: ranked(violations),
            unanalyzable,
        };
        Analysis {
            sentences: repaired,
            records,
            report,
        }
    }
}

/// Analyzes with the default classifier.
pub fn analyze_corpus(sentences: &[AnalysisSentence]) -> Analysis {
    Analyzer::default().analyze_corpus(sentences)
}
