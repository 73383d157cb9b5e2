//! Dependency-aware diagnosis of repeated same-role spans.
//!
//! A tagger that emits two spans of the same role for one predicate breaks
//! the one-argument-per-role constraint. Pairs of such spans are classified
//! against a dependency parse; pairs that are structurally fragments of one
//! argument are merged, the rest are queued for review.

mod analyze;
mod classify;
mod tree;

pub(crate) use analyze::ranked;
pub use analyze::{
    analyze_corpus, Analysis, AnalysisReport, AnalysisSentence, Analyzer, BucketHistogram, BucketRow, DiagnosisRecord,
    LabelCount, RepairAction, RepairedSentence, SentenceTree, UnanalyzableSentence,
};
pub use classify::{
    classify_pair, find_repeated_spans, merge_pair, repair_boundary, span_root, Classifier, DiagnosticError,
    ErrorBucket, PpRelations, RepeatedPair,
};
pub use tree::{read_conllu, DepTree, TreeError};
