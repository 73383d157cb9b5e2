use thiserror::Error;

/// Errors raised while building or converting BIO structures.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BioError {
    #[error("unknown role label `{0}`")]
    UnknownRole(String),
    #[error("malformed BIO tag `{0}`")]
    UnknownTag(String),
    #[error("invalid token `{0}`: tokens must be non-empty and contain no whitespace")]
    InvalidToken(String),
    #[error("span {role} [{start}, {end}] has start after end")]
    InvertedSpan { role: String, start: usize, end: usize },
    #[error("span {role} [{start}, {end}] lies outside a sentence of length {len}")]
    SpanOutOfBounds {
        role: String,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("spans [{first_start}, {first_end}] and [{second_start}, {second_end}] overlap")]
    OverlappingSpans {
        first_start: usize,
        first_end: usize,
        second_start: usize,
        second_end: usize,
    },
    #[error("frame must contain exactly one V span, found {0}")]
    PredicateSpanCount(usize),
    #[error("{labels} labels for {words} words")]
    LengthMismatch { words: usize, labels: usize },
    #[error("predicate index {index} out of range for {len} words")]
    PredicateOutOfRange { index: usize, len: usize },
}
