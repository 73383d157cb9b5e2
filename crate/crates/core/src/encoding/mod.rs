//! Sentence-level subword encoding, computed once and reused per predicate.

mod backend;
mod mock;

use thiserror::Error;

use crate::bio::Token;

pub use backend::{BackendError, CallCounts, CountingBackend, Scores, SpecialIds, TaggerBackend};
pub use mock::{mock_backend, mock_pieces, HashedVocab, MockBackend, MOCK_LABELS, MOCK_PIECE_CHARS, MOCK_VOCAB_SIZE};

#[derive(Debug, Error)]
pub enum EncodingError {
    #[error("cannot encode an empty sentence")]
    EmptySentence,
    #[error("word {index} `{word}` tokenized to zero subwords")]
    EmptyTokenization { index: usize, word: String },
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Flattened subword ids of a sentence plus, for each word, the position of
/// its first subword in `[CLS] sent ...` (the leading `[CLS]` is already
/// counted, so the first word maps to 1).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EncodedSentence {
    subword_ids: Vec<u32>,
    first_subword_index_per_word: Vec<usize>,
}

impl EncodedSentence {
    pub fn subword_ids(&self) -> &[u32] {
        &self.subword_ids
    }

    pub fn first_subword_index_per_word(&self) -> &[usize] {
        &self.first_subword_index_per_word
    }

    pub fn word_count(&self) -> usize {
        self.first_subword_index_per_word.len()
    }
}

/// Tokenizes each word exactly once and records first-subword positions.
pub fn encode_sentence_once<B: TaggerBackend + ?Sized>(
    words: &[Token],
    backend: &mut B,
) -> Result<EncodedSentence, EncodingError> {
    if words.is_empty() {
        return Err(EncodingError::EmptySentence);
    }
    let mut subword_ids = Vec::with_capacity(words.len() * 2);
    let mut first = Vec::with_capacity(words.len());
    for (index, word) in words.iter().enumerate() {
        let pieces = backend.tokenize(word.text())?;
        if pieces.is_empty() {
            return Err(EncodingError::EmptyTokenization {
                index,
                word: word.text().to_string(),
            });
        }
        first.push(subword_ids.len() + 1);
        subword_ids.extend(pieces);
    }
    Ok(EncodedSentence {
        subword_ids,
        first_subword_index_per_word: first,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bio::tokens_from;
    use crate::inference::Batch;

    #[test]
    fn one_piece_per_short_word() {
        let words = tokens_from(&["I", "want", "to", "go", "home"]).unwrap();
        let enc = encode_sentence_once(&words, &mut mock_backend(0)).unwrap();
        assert_eq!(enc.subword_ids().len(), 5);
        assert_eq!(enc.first_subword_index_per_word(), [1, 2, 3, 4, 5]);
    }

    #[test]
    fn multi_piece_word_shifts_later_offsets() {
        let words = tokens_from(&["Mary", "gave", "me", "a", "present", "."]).unwrap();
        let enc = encode_sentence_once(&words, &mut mock_backend(0)).unwrap();
        assert_eq!(enc.first_subword_index_per_word(), [1, 2, 3, 4, 5, 7]);
        assert_eq!(enc.subword_ids().len(), 7);
    }

    #[test]
    fn tokenizes_each_word_once() {
        let words = tokens_from(&["temperament", "through", "study"]).unwrap();
        let mut counting = CountingBackend::new(mock_backend(3));
        let a = encode_sentence_once(&words, &mut counting).unwrap();
        assert_eq!(counting.counts().tokenize_calls, 3);
        let b = encode_sentence_once(&words, &mut counting).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_empty_inputs() {
        assert!(matches!(
            encode_sentence_once(&[], &mut mock_backend(0)),
            Err(EncodingError::EmptySentence)
        ));

        struct Silent(MockBackend);
        impl TaggerBackend for Silent {
            fn special_ids(&self) -> SpecialIds {
                self.0.special_ids()
            }
            fn labels(&self) -> &[crate::bio::BioTag] {
                self.0.labels()
            }
            fn tokenize(&mut self, word: &str) -> Result<Vec<u32>, BackendError> {
                if word == "ghost" {
                    Ok(vec![])
                } else {
                    self.0.tokenize(word)
                }
            }
            fn forward(&mut self, batch: &Batch) -> Result<Scores, BackendError> {
                self.0.forward(batch)
            }
        }

        let words = tokens_from(&["a", "ghost"]).unwrap();
        let err = encode_sentence_once(&words, &mut Silent(mock_backend(0))).unwrap_err();
        assert!(matches!(err, EncodingError::EmptyTokenization { index: 1, ref word } if word == "ghost"));
    }
}
