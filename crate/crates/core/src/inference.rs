//! Predicate-conditioned input assembly and tagging.
//!
//! Every predicate gets its own `[CLS] sent [SEP] pred [SEP]` row. The
//! baseline path re-tokenizes the sentence for each row; the cached path
//! tokenizes it once and reuses the ids.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bio::{BioSequence, BioTag, Token};
use crate::encoding::{encode_sentence_once, BackendError, EncodedSentence, EncodingError, SpecialIds, TaggerBackend};

/// One row of model input.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelInput {
    pub ids: Vec<u32>,
    pub segment_ids: Vec<u8>,
    pub attention_mask: Vec<u8>,
    pub predicate_word_index: usize,
    pub first_subword_indices: Vec<usize>,
}

impl ModelInput {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Position of the first `[SEP]`, i.e. `1 + |sent|`.
    pub fn sentence_end(&self) -> usize {
        self.segment_ids
            .iter()
            .position(|&s| s == 1)
            .map_or(self.len(), |p| p - 1)
    }
}

/// Padded rows, laid out the way the forward call and the wire format expect.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batch {
    pub ids: Vec<Vec<u32>>,
    pub segment_ids: Vec<Vec<u8>>,
    pub attention_mask: Vec<Vec<u8>>,
    pub predicate_word_index: Vec<usize>,
    pub first_subword_indices: Vec<Vec<usize>>,
}

impl Batch {
    pub fn rows(&self) -> usize {
        self.ids.len()
    }

    pub fn width(&self) -> usize {
        self.ids.first().map_or(0, Vec::len)
    }

    /// Recovers the original rows by trimming each to its mask length.
    pub fn unpad(&self) -> Vec<ModelInput> {
        (0..self.rows())
            .map(|r| {
                let len = self.attention_mask[r].iter().take_while(|&&m| m == 1).count();
                ModelInput {
                    ids: self.ids[r][..len].to_vec(),
                    segment_ids: self.segment_ids[r][..len].to_vec(),
                    attention_mask: self.attention_mask[r][..len].to_vec(),
                    predicate_word_index: self.predicate_word_index[r],
                    first_subword_indices: self.first_subword_indices[r].clone(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Cached,
    Baseline,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Cached => "cached",
            Mode::Baseline => "baseline",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cached" => Ok(Mode::Cached),
            "baseline" => Ok(Mode::Baseline),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("predicate index {index} out of range for {len} words")]
    PredicateOutOfRange { index: usize, len: usize },
    #[error("predicate index {0} requested twice")]
    DuplicatePredicate(usize),
    #[error("predicate word {index} `{word}` tokenized to zero subwords")]
    EmptyPredicate { index: usize, word: String },
    #[error("encoded sentence has {encoded} words, input has {words}")]
    WordCountMismatch { encoded: usize, words: usize },
    #[error("cannot stack an empty batch")]
    EmptyBatch,
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error("could not start a backend: {0}")]
    BackendSetup(#[source] BackendError),
    #[error("backend failed on batch {batch}: {source}")]
    Backend {
        batch: usize,
        #[source]
        source: BackendError,
    },
}

fn check_predicates(predicates: &[usize], len: usize) -> Result<(), InferenceError> {
    let mut seen = HashSet::with_capacity(predicates.len());
    for &p in predicates {
        if p >= len {
            return Err(InferenceError::PredicateOutOfRange { index: p, len });
        }
        if !seen.insert(p) {
            return Err(InferenceError::DuplicatePredicate(p));
        }
    }
    Ok(())
}

fn tokenize_predicate<B: TaggerBackend + ?Sized>(
    words: &[Token],
    p: usize,
    backend: &mut B,
) -> Result<Vec<u32>, InferenceError> {
    let pieces = backend
        .tokenize(words[p].text())
        .map_err(|e| InferenceError::Encoding(e.into()))?;
    if pieces.is_empty() {
        return Err(InferenceError::EmptyPredicate {
            index: p,
            word: words[p].text().to_string(),
        });
    }
    Ok(pieces)
}

fn assemble(enc: &EncodedSentence, pred: &[u32], predicate: usize, specials: SpecialIds) -> ModelInput {
    let sent = enc.subword_ids();
    let len = sent.len() + pred.len() + 3;
    let mut ids = Vec::with_capacity(len);
    ids.push(specials.cls);
    ids.extend_from_slice(sent);
    ids.push(specials.sep);
    ids.extend_from_slice(pred);
    ids.push(specials.sep);
    let mut segment_ids = vec![0u8; 1 + sent.len() + 1];
    segment_ids.resize(len, 1);
    ModelInput {
        ids,
        segment_ids,
        attention_mask: vec![1; len],
        predicate_word_index: predicate,
        first_subword_indices: enc.first_subword_index_per_word().to_vec(),
    }
}

/// Builds one input per predicate on top of a sentence encoded once.
///
/// Only the predicate words are tokenized here.
pub fn build_inputs_cached<B: TaggerBackend + ?Sized>(
    enc: &EncodedSentence,
    words: &[Token],
    predicates: &[usize],
    backend: &mut B,
) -> Result<Vec<ModelInput>, InferenceError> {
    if enc.word_count() != words.len() {
        return Err(InferenceError::WordCountMismatch {
            encoded: enc.word_count(),
            words: words.len(),
        });
    }
    check_predicates(predicates, words.len())?;
    let specials = backend.special_ids();
    predicates
        .iter()
        .map(|&p| {
            let pred = tokenize_predicate(words, p, backend)?;
            Ok(assemble(enc, &pred, p, specials))
        })
        .collect()
}

/// Builds one input per predicate, re-encoding the sentence every time.
pub fn build_inputs_baseline<B: TaggerBackend + ?Sized>(
    words: &[Token],
    predicates: &[usize],
    backend: &mut B,
) -> Result<Vec<ModelInput>, InferenceError> {
    check_predicates(predicates, words.len())?;
    let specials = backend.special_ids();
    predicates
        .iter()
        .map(|&p| {
            let enc = encode_sentence_once(words, backend)?;
            let pred = tokenize_predicate(words, p, backend)?;
            Ok(assemble(&enc, &pred, p, specials))
        })
        .collect()
}

/// Pads every row to the longest one with `pad` / segment 0 / mask 0.
pub fn pad_and_stack(inputs: &[ModelInput], pad: u32) -> Result<Batch, InferenceError> {
    let width = inputs
        .iter()
        .map(ModelInput::len)
        .max()
        .ok_or(InferenceError::EmptyBatch)?;
    let mut batch = Batch {
        ids: Vec::with_capacity(inputs.len()),
        segment_ids: Vec::with_capacity(inputs.len()),
        attention_mask: Vec::with_capacity(inputs.len()),
        predicate_word_index: Vec::with_capacity(inputs.len()),
        first_subword_indices: Vec::with_capacity(inputs.len()),
    };
    for input in inputs {
        let mut ids = input.ids.clone();
        ids.resize(width, pad);
        let mut segments = input.segment_ids.clone();
        segments.resize(width, 0);
        let mut mask = input.attention_mask.clone();
        mask.resize(width, 0);
        batch.ids.push(ids);
        batch.segment_ids.push(segments);
        batch.attention_mask.push(mask);
        batch.predicate_word_index.push(input.predicate_word_index);
        batch.first_subword_indices.push(input.first_subword_indices.clone());
    }
    Ok(batch)
}

/// A sentence with one label sequence per requested predicate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedSentence {
    pub words: Vec<Token>,
    /// `(predicate index, labels)` in request order.
    pub frames: Vec<(usize, BioSequence)>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PredictOptions {
    /// Upper bound on rows per forward call; `None` puts every predicate of
    /// the sentence in one batch.
    pub max_batch: Option<usize>,
}

fn argmax(scores: &[f32]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

fn decode_row(
    scores: &[Vec<f32>],
    labels: &[BioTag],
    words: usize,
    batch: usize,
) -> Result<BioSequence, InferenceError> {
    let shape = |msg: String| InferenceError::Backend {
        batch,
        source: BackendError::Shape(msg),
    };
    if scores.len() != words {
        return Err(shape(format!("{} word scores for {} words", scores.len(), words)));
    }
    let mut tags = Vec::with_capacity(words);
    for word in scores {
        if word.len() != labels.len() {
            return Err(shape(format!("{} scores for {} labels", word.len(), labels.len())));
        }
        tags.push(labels[argmax(word)].clone());
    }
    Ok(BioSequence::new(tags).repair_boundaries())
}

/// Tags every requested predicate of one sentence.
///
/// Labels are the per-word argmax over the backend's label vocabulary, with
/// span-initial `I-X` promoted to `B-X`.
pub fn predict_srl<B: TaggerBackend + ?Sized>(
    words: &[Token],
    predicates: &[usize],
    backend: &mut B,
    mode: Mode,
    options: PredictOptions,
) -> Result<TaggedSentence, InferenceError> {
    check_predicates(predicates, words.len())?;
    if predicates.is_empty() {
        return Ok(TaggedSentence {
            words: words.to_vec(),
            frames: Vec::new(),
        });
    }
    let inputs = match mode {
        Mode::Cached => {
            let enc = encode_sentence_once(words, backend)?;
            build_inputs_cached(&enc, words, predicates, backend)?
        }
        Mode::Baseline => build_inputs_baseline(words, predicates, backend)?,
    };
    let chunk = options.max_batch.unwrap_or(inputs.len()).max(1);
    let pad = backend.special_ids().pad;
    let mut frames = Vec::with_capacity(inputs.len());
    for (batch_idx, rows) in inputs.chunks(chunk).enumerate() {
        let batch = pad_and_stack(rows, pad)?;
        let scores = backend.forward(&batch).map_err(|source| InferenceError::Backend {
            batch: batch_idx,
            source,
        })?;
        if scores.len() != rows.len() {
            return Err(InferenceError::Backend {
                batch: batch_idx,
                source: BackendError::Shape(format!("{} score rows for {} inputs", scores.len(), rows.len())),
            });
        }
        for (row, input) in scores.iter().zip(rows) {
            let seq = decode_row(row, backend.labels(), words.len(), batch_idx)?;
            frames.push((input.predicate_word_index, seq));
        }
    }
    Ok(TaggedSentence {
        words: words.to_vec(),
        frames,
    })
}

/// A sentence and the predicates to tag in it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceRequest {
    pub words: Vec<Token>,
    pub predicates: Vec<usize>,
}

#[derive(Debug, Error)]
#[error("sentence {sentence}: {source}")]
pub struct TagError {
    pub sentence: usize,
    #[source]
    pub source: InferenceError,
}

/// Tags many sentences on up to `jobs` threads.
///
/// Each worker owns one backend from `make_backend`, so no backend sees
/// concurrent calls. Results come back in input order; on failure the error
/// of the lowest-numbered failing sentence is returned.
pub fn tag_sentences<B, F>(
    requests: &[SentenceRequest],
    jobs: usize,
    make_backend: F,
    mode: Mode,
    options: PredictOptions,
) -> Result<Vec<TaggedSentence>, TagError>
where
    B: TaggerBackend,
    F: Fn() -> Result<B, BackendError> + Sync,
{
    let setup = |source| TagError {
        sentence: 0,
        source: InferenceError::BackendSetup(source),
    };
    if jobs <= 1 || requests.len() <= 1 {
        let mut backend = make_backend().map_err(setup)?;
        return requests
            .iter()
            .enumerate()
            .map(|(sentence, r)| {
                predict_srl(&r.words, &r.predicates, &mut backend, mode, options)
                    .map_err(|source| TagError { sentence, source })
            })
            .collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<TaggedSentence, InferenceError>>>> =
        Mutex::new((0..requests.len()).map(|_| None).collect());
    let setup_error: Mutex<Option<BackendError>> = Mutex::new(None);
    thread::scope(|scope| {
        for _ in 0..jobs.min(requests.len()) {
            scope.spawn(|| {
                let mut backend = match make_backend() {
                    Ok(b) => b,
                    Err(e) => {
                        setup_error
                            .lock()
                            .expect("no worker panics holding the lock")
                            .get_or_insert(e);
                        return;
                    }
                };
                loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(r) = requests.get(i) else { break };
                    let out = predict_srl(&r.words, &r.predicates, &mut backend, mode, options);
                    slots.lock().expect("no worker panics holding the lock")[i] = Some(out);
                }
            });
        }
    });
    let slots = slots.into_inner().expect("workers joined");
    let mut out = Vec::with_capacity(requests.len());
    for (sentence, slot) in slots.into_iter().enumerate() {
        match slot {
            Some(Ok(t)) => out.push(t),
            Some(Err(source)) => return Err(TagError { sentence, source }),
            None => {
                let e = setup_error
                    .into_inner()
                    .expect("workers joined")
                    .expect("a sentence is only left untagged when every worker failed to start");
                return Err(TagError {
                    sentence,
                    source: InferenceError::BackendSetup(e),
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bio::tokens_from;
    use crate::encoding::{mock_backend, CountingBackend};

    fn words(s: &str) -> Vec<Token> {
        tokens_from(&s.split(' ').collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn cached_inputs_share_the_sentence_segment() {
        let w = words("I want to go home");
        let mut b = mock_backend(0);
        let enc = encode_sentence_once(&w, &mut b).unwrap();
        let inputs = build_inputs_cached(&enc, &w, &[1, 3], &mut b).unwrap();
        assert_eq!(inputs.len(), 2);
        assert_eq!(inputs[0].ids[..7], inputs[1].ids[..7]);
        assert_ne!(inputs[0].ids[7], inputs[1].ids[7]);
        for input in &inputs {
            // [CLS] + 5 pieces + [SEP] = 7 segment-0 positions
            assert_eq!(input.segment_ids, [0, 0, 0, 0, 0, 0, 0, 1, 1]);
            assert_eq!(input.sentence_end(), 6);
            assert_eq!(input.ids[0], 101);
            assert_eq!(input.ids[6], 102);
            assert_eq!(*input.ids.last().unwrap(), 102);
            assert!(input.attention_mask.iter().all(|&m| m == 1));
        }
    }

    #[test]
    fn multi_piece_predicate_extends_segment_one() {
        let w = words("Mary gave me a present .");
        let mut b = mock_backend(0);
        let enc = encode_sentence_once(&w, &mut b).unwrap();
        let inputs = build_inputs_cached(&enc, &w, &[4], &mut b).unwrap();
        // 7 sentence pieces, 2 predicate pieces
        assert_eq!(inputs[0].len(), 1 + 7 + 1 + 2 + 1);
        assert_eq!(inputs[0].segment_ids.iter().filter(|&&s| s == 1).count(), 3);
        assert_eq!(inputs[0].first_subword_indices, [1, 2, 3, 4, 5, 7]);
    }

    #[test]
    fn tokenize_counts_per_path() {
        let w = words("I want to go home");
        let mut cached = CountingBackend::new(mock_backend(0));
        let enc = encode_sentence_once(&w, &mut cached).unwrap();
        build_inputs_cached(&enc, &w, &[1, 3], &mut cached).unwrap();
        assert_eq!(cached.counts().tokenize_calls, 5 + 2);

        let mut base = CountingBackend::new(mock_backend(0));
        build_inputs_baseline(&w, &[1, 3], &mut base).unwrap();
        assert_eq!(base.counts().tokenize_calls, 2 * 5 + 2);
    }

    #[test]
    fn single_predicate_paths_cost_the_same() {
        let w = words("Mary gave me a present .");
        let mut cached = CountingBackend::new(mock_backend(0));
        predict_srl(&w, &[1], &mut cached, Mode::Cached, PredictOptions::default()).unwrap();
        let mut base = CountingBackend::new(mock_backend(0));
        predict_srl(&w, &[1], &mut base, Mode::Baseline, PredictOptions::default()).unwrap();
        assert_eq!(cached.counts(), base.counts());
    }

    #[test]
    fn rejects_bad_predicates() {
        let w = words("a b c");
        let mut b = mock_backend(0);
        assert!(matches!(
            build_inputs_baseline(&w, &[3], &mut b),
            Err(InferenceError::PredicateOutOfRange { index: 3, len: 3 })
        ));
        assert!(matches!(
            predict_srl(&w, &[1, 1], &mut b, Mode::Cached, PredictOptions::default()),
            Err(InferenceError::DuplicatePredicate(1))
        ));
    }

    #[test]
    fn pads_to_widest_row() {
        let mk = |n: usize| ModelInput {
            ids: vec![5; n],
            segment_ids: vec![0; n],
            attention_mask: vec![1; n],
            predicate_word_index: 0,
            first_subword_indices: vec![1],
        };
        let inputs = vec![mk(7), mk(9)];
        let batch = pad_and_stack(&inputs, 0).unwrap();
        assert_eq!(batch.width(), 9);
        assert_eq!(batch.attention_mask[0][7..], [0, 0]);
        assert_eq!(batch.ids[0][7..], [0, 0]);
        assert_eq!(batch.unpad(), inputs);
        let single = pad_and_stack(&inputs[..1], 0).unwrap();
        assert_eq!(single.unpad(), inputs[..1]);
        assert!(matches!(pad_and_stack(&[], 0), Err(InferenceError::EmptyBatch)));
    }

    #[test]
    fn empty_predicate_list_tags_nothing() {
        let w = words("nothing happens");
        let mut b = CountingBackend::new(mock_backend(0));
        let out = predict_srl(&w, &[], &mut b, Mode::Cached, PredictOptions::default()).unwrap();
        assert!(out.frames.is_empty());
        assert_eq!(b.counts().tokenize_calls, 0);
    }

    #[test]
    fn frames_follow_request_order_and_batching_is_transparent() {
        let w = words("the committee said it would review the proposal next week");
        let preds = [6, 2, 5];
        let mut b = mock_backend(11);
        let whole = predict_srl(&w, &preds, &mut b, Mode::Cached, PredictOptions::default()).unwrap();
        assert_eq!(whole.frames.iter().map(|f| f.0).collect::<Vec<_>>(), preds);
        let mut counting = CountingBackend::new(mock_backend(11));
        let split = predict_srl(
            &w,
            &preds,
            &mut counting,
            Mode::Cached,
            PredictOptions { max_batch: Some(2) },
        )
        .unwrap();
        assert_eq!(whole, split);
        assert_eq!(counting.counts().forward_calls, 2);
        for (_, seq) in &whole.frames {
            assert_eq!(seq.len(), w.len());
            assert!(seq.is_well_formed());
        }
    }

    #[test]
    fn parallel_tagging_matches_sequential() {
        let requests: Vec<SentenceRequest> = [
            ("the cat sat on the mat", vec![2]),
            ("prices rose sharply after the announcement yesterday", vec![1, 5]),
            ("she said he would come", vec![1, 4]),
            ("go", vec![0]),
        ]
        .iter()
        .map(|(s, p)| SentenceRequest {
            words: words(s),
            predicates: p.clone(),
        })
        .collect();
        let make = || Ok(mock_backend(5));
        let one = tag_sentences(&requests, 1, make, Mode::Cached, PredictOptions::default()).unwrap();
        let many = tag_sentences(&requests, 3, make, Mode::Baseline, PredictOptions::default()).unwrap();
        assert_eq!(one, many);
        assert_eq!(one[1].frames.len(), 2);

        let failing =
            || -> Result<crate::encoding::MockBackend, BackendError> { Err(BackendError::Protocol("down".into())) };
        let err = tag_sentences(&requests, 2, failing, Mode::Cached, PredictOptions::default()).unwrap_err();
        assert!(matches!(err.source, InferenceError::BackendSetup(_)));
    }
}
