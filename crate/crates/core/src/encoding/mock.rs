use crate::bio::BioTag;
use crate::encoding::backend::{BackendError, Scores, SpecialIds, TaggerBackend};
use crate::hash::{mix, Fnv};
use crate::inference::Batch;

/// Vocabulary size of the hashed mock vocabulary (that of BERT-base-cased).
pub const MOCK_VOCAB_SIZE: u32 = 28_996;

/// Longest piece, in characters, produced by the mock tokenizer.
pub const MOCK_PIECE_CHARS: usize = 4;

/// Label vocabulary of the mock backend.
pub const MOCK_LABELS: &[&str] = &[
    "O",
    "B-V",
    "B-ARG0",
    "I-ARG0",
    "B-ARG1",
    "I-ARG1",
    "B-ARG2",
    "I-ARG2",
    "B-ARG3",
    "I-ARG3",
    "B-ARGM-TMP",
    "I-ARGM-TMP",
    "B-ARGM-LOC",
    "I-ARGM-LOC",
    "B-ARGM-MNR",
    "I-ARGM-MNR",
    "B-ARGM-ADV",
    "I-ARGM-ADV",
    "B-ARGM-DIS",
    "I-ARGM-DIS",
    "B-ARGM-NEG",
    "B-ARGM-MOD",
    "B-R-ARG0",
    "B-C-ARG1",
    "I-C-ARG1",
];

/// Hash-based piece-to-id map that never yields a special id.
#[derive(Debug, Clone)]
pub struct HashedVocab {
    seed: u64,
    size: u32,
    specials: SpecialIds,
}

impl HashedVocab {
    pub fn new(seed: u64, size: u32, specials: SpecialIds) -> Self {
        assert!(size > 3, "vocabulary must leave room beyond the special ids");
        HashedVocab { seed, size, specials }
    }

    pub fn id_of(&self, piece: &str) -> u32 {
        let h = Fnv::new().u64(self.seed).bytes(piece.as_bytes()).finish();
        let mut id = (h % u64::from(self.size)) as u32;
        while self.specials.contains(id) {
            id = (id + 1) % self.size;
        }
        id
    }

    pub fn specials(&self) -> SpecialIds {
        self.specials
    }
}

/// Splits a word into consecutive pieces of at most four characters.
pub fn mock_pieces(word: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    chars.chunks(MOCK_PIECE_CHARS).map(|c| c.iter().collect()).collect()
}

/// Deterministic stand-in for a transformer tagger.
///
/// Scores depend on every real id and segment id of a row, on the predicate
/// position and on the word being read, so any change to the predicate
/// conditioned input changes the output.
#[derive(Debug, Clone)]
pub struct MockBackend {
    seed: u64,
    vocab: HashedVocab,
    labels: Vec<BioTag>,
}

impl MockBackend {
    pub fn new(seed: u64) -> Self {
        let labels = MOCK_LABELS
            .iter()
            .map(|l| l.parse().expect("mock labels are well formed"))
            .collect();
        MockBackend {
            seed,
            vocab: HashedVocab::new(seed, MOCK_VOCAB_SIZE, SpecialIds::BERT),
            labels,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn vocab(&self) -> &HashedVocab {
        &self.vocab
    }
}

/// Seeded mock backend.
pub fn mock_backend(seed: u64) -> MockBackend {
    MockBackend::new(seed)
}

fn unit(h: u64) -> f32 {
    (h >> 40) as f32 / (1u64 << 24) as f32
}

impl TaggerBackend for MockBackend {
    fn special_ids(&self) -> SpecialIds {
        self.vocab.specials()
    }

    fn labels(&self) -> &[BioTag] {
        &self.labels
    }

    fn tokenize(&mut self, word: &str) -> Result<Vec<u32>, BackendError> {
        Ok(mock_pieces(word).iter().map(|p| self.vocab.id_of(p)).collect())
    }

    fn forward(&mut self, batch: &Batch) -> Result<Scores, BackendError> {
        let mut out = Vec::with_capacity(batch.rows());
        for row in 0..batch.rows() {
            let ids = &batch.ids[row];
            let segments = &batch.segment_ids[row];
            let real = batch.attention_mask[row].iter().take_while(|&&m| m == 1).count();
            let predicate = batch.predicate_word_index[row];
            let mut digest = Fnv::new().u64(self.seed).u64(predicate as u64);
            for i in 0..real {
                digest = digest.u64(u64::from(ids[i])).u64(u64::from(segments[i]));
            }
            let digest = digest.finish();
            let mut words = Vec::with_capacity(batch.first_subword_indices[row].len());
            for (w, &pos) in batch.first_subword_indices[row].iter().enumerate() {
                if pos >= real {
                    return Err(BackendError::Shape(format!(
                        "row {row}: first subword index {pos} beyond {real} real positions"
                    )));
                }
                let base = mix(digest ^ mix(w as u64) ^ mix(u64::from(ids[pos]) << 20));
                let scores = (0..self.labels.len())
                    .map(|l| unit(mix(base.wrapping_add(l as u64))))
                    .collect();
                words.push(scores);
            }
            out.push(words);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_words_are_single_pieces() {
        let mut b = mock_backend(7);
        let first = b.tokenize("go").unwrap();
        assert_eq!(first.len(), 1);
        assert_eq!(b.tokenize("go").unwrap(), first);
        assert_eq!(b.tokenize("home").unwrap().len(), 1);
    }

    #[test]
    fn long_words_split_every_four_chars() {
        assert_eq!(mock_pieces("temperament"), ["temp", "eram", "ent"]);
        assert_eq!(mock_pieces("present"), ["pres", "ent"]);
        assert_eq!(mock_pieces("écrasement"), ["écra", "seme", "nt"]);
        assert!(mock_pieces("").is_empty());
        let mut b = mock_backend(7);
        assert_eq!(b.tokenize("temperament").unwrap().len(), 3);
    }

    #[test]
    fn ids_avoid_specials_and_depend_on_seed() {
        let v = HashedVocab::new(0, 4, SpecialIds::new(0, 1, 2).unwrap());
        for piece in ["a", "b", "c", "d", "e", "f", "g"] {
            assert_eq!(v.id_of(piece), 3);
        }
        let a = mock_backend(1).vocab().id_of("word");
        let b = mock_backend(2).vocab().id_of("word");
        assert_ne!(a, b);
    }

    #[test]
    fn special_ids_must_be_distinct() {
        assert!(SpecialIds::new(1, 1, 0).is_err());
        assert!(SpecialIds::new(101, 102, 0).is_ok());
    }
}
