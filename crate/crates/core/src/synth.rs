//! Deterministic synthetic corpora for benchmarks and end-to-end checks.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bio::{tokens_from, BioSequence, BioTag};
use crate::corpus::InstanceRecord;
use crate::diagnostics::{AnalysisSentence, DepTree, ErrorBucket, SentenceTree};
use crate::inference::SentenceRequest;
use crate::role::RoleLabel;

const LEXICON: &[&str] = &[
    "the",
    "a",
    "market",
    "investors",
    "said",
    "shares",
    "rose",
    "fell",
    "percent",
    "company",
    "on",
    "in",
    "after",
    "report",
    "quarterly",
    "earnings",
    "analysts",
    "expected",
    "would",
    "continue",
    "to",
    "trading",
    "yesterday",
    "government",
    "announced",
    "new",
    "regulations",
    "for",
    "banks",
    "and",
    "that",
    "it",
    "recovered",
    "value",
    "october",
    "crash",
    "committee",
    "approved",
    "proposal",
    "revisions",
    "trade",
    "law",
    "temperament",
    "through",
    "study",
    "practice",
    "long",
    "section",
    "of",
    "road",
    "he",
    "she",
    "gave",
    "present",
    "management",
    "restructuring",
    "was",
    "not",
    "by",
    "with",
    ".",
    ",",
];

/// Sentences of 8 to 44 words (26 on average) whose predicate counts add up
/// to `predicates`, spread at random with at most six per sentence.
///
/// Panics if `predicates` is below `sentences` or above six per sentence.
pub fn bench_corpus(seed: u64, sentences: usize, predicates: usize) -> Vec<SentenceRequest> {
    assert!(
        (sentences..=6 * sentences).contains(&predicates),
        "need between one and six predicates per sentence"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lengths: Vec<usize> = (0..sentences).map(|_| rng.gen_range(8..=44)).collect();
    let mut counts = vec![1usize; sentences];
    let mut extra = predicates - sentences;
    while extra > 0 {
        let i = rng.gen_range(0..sentences);
        if counts[i] < 6 {
            counts[i] += 1;
            extra -= 1;
        }
    }
    lengths
        .into_iter()
        .zip(counts)
        .map(|(len, k)| {
            let words: Vec<&str> = (0..len).map(|_| LEXICON[rng.gen_range(0..LEXICON.len())]).collect();
            let mut preds = sample(&mut rng, len, k).into_vec();
            preds.sort_unstable();
            SentenceRequest {
                words: tokens_from(&words).expect("lexicon words are valid tokens"),
                predicates: preds,
            }
        })
        .collect()
}

/// Token totals per bucket for [`bucket_corpus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BucketTokens {
    pub no_bucket: u64,
    pub other_repeat: u64,
    pub same_head: u64,
    pub subtree_attach: u64,
    pub pp_attach: u64,
}

/// A tagged sentence with its parse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticSentence {
    pub words: Vec<String>,
    pub frames: Vec<(usize, BioSequence)>,
    pub tree: DepTree,
}

impl SyntheticSentence {
    pub fn to_analysis(&self, id: impl Into<String>) -> AnalysisSentence {
        AnalysisSentence {
            id: id.into(),
            frames: self.frames.clone(),
            tree: SentenceTree::Available(self.tree.clone()),
        }
    }

    /// One record per frame, labels given as system output.
    pub fn records(&self) -> Vec<InstanceRecord> {
        self.frames
            .iter()
            .map(|(p, labels)| InstanceRecord {
                words: self.words.clone(),
                predicate_word_idx: *p,
                labels: None,
                predicted_labels: Some(labels.clone()),
            })
            .collect()
    }
}

/// Words unique to sentence `id`, so neighbours never share a word list.
fn words(id: usize, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("s{id}w{i}")).collect()
}

/// `V`, an ARG1 pair of `a` and `b` tokens, and a trailing O token, with a
/// tree that puts the pair in `bucket`.
fn pair_sentence(id: usize, bucket: ErrorBucket, a: usize, b: usize) -> SyntheticSentence {
    let n = a + b + 2;
    let (a0, b0, last) = (1, 1 + a, n - 1);
    let arg = RoleLabel::arg(1);
    let mut tags = vec![BioTag::Begin(RoleLabel::predicate())];
    for start in [a0, b0] {
        let len = if start == a0 { a } else { b };
        tags.push(BioTag::Begin(arg.clone()));
        tags.extend((1..len).map(|_| BioTag::Inside(arg.clone())));
    }
    tags.push(BioTag::Outside);

    let mut heads = vec![None; n];
    let mut rels = vec!["dep"; n];
    rels[0] = "root";
    heads[a0] = Some(0);
    rels[a0] = "obj";
    heads[a0 + 1..b0].fill(Some(a0));
    let (head, rel) = match bucket {
        ErrorBucket::SameHead => (0, "obj"),
        ErrorBucket::PpAttach => (a0, "nmod"),
        ErrorBucket::SubtreeAttach => (a0, "acl"),
        ErrorBucket::OtherRepeat => (last, "dep"),
        ErrorBucket::NoBucket => unreachable!("no pair is built for NO_BUCKET"),
    };
    heads[b0] = Some(head);
    rels[b0] = rel;
    heads[b0 + 1..last].fill(Some(b0));
    heads[last] = Some(0);
    rels[last] = "punct";
    let tree = DepTree::new(
        words(id, n),
        heads,
        rels.iter().map(|r| r.to_string()).collect(),
        vec!["X".to_string(); n],
    )
    .expect("template trees are well formed");
    SyntheticSentence {
        words: words(id, n),
        frames: vec![(0, BioSequence::new(tags))],
        tree,
    }
}

/// A clean frame of `n` tokens: ARG0, V, then one ARG1 span.
fn filler_sentence(id: usize, n: usize) -> SyntheticSentence {
    let (pred, tags): (usize, Vec<&str>) = match n {
        1 => (0, vec!["B-V"]),
        _ => {
            let mut t = vec!["B-ARG0", "B-V"];
            if n > 2 {
                t.push("B-ARG1");
                t.extend(std::iter::repeat_n("I-ARG1", n - 3));
            }
            (1, t)
        }
    };
    let heads = (0..n).map(|i| if i == pred { None } else { Some(pred) }).collect();
    let rels = (0..n)
        .map(|i| if i == pred { "root" } else { "dep" }.to_string())
        .collect();
    SyntheticSentence {
        words: words(id, n),
        frames: vec![(pred, BioSequence::parse(&tags).expect("fixed tags parse"))],
        tree: DepTree::new(words(id, n), heads, rels, vec!["X".to_string(); n]).expect("star trees are well formed"),
    }
}

/// Splits `tokens` into pair sizes of 4, folding the remainder into the last.
fn pair_sizes(tokens: u64) -> Result<Vec<(usize, usize)>, String> {
    let t = tokens as usize;
    match t {
        0 => Ok(Vec::new()),
        1 => Err("a repeated pair covers at least two tokens".to_string()),
        2..=7 => Ok(vec![(t / 2, t - t / 2)]),
        _ => {
            let k = t / 4;
            let last = t - 4 * (k - 1);
            let mut sizes = vec![(2, 2); k - 1];
            sizes.push((last / 2, last - last / 2));
            Ok(sizes)
        }
    }
}

/// Builds a corpus that the analyzer buckets into exactly `counts` tokens.
pub fn bucket_corpus(counts: BucketTokens) -> Result<Vec<SyntheticSentence>, String> {
    let mut out = Vec::new();
    for (bucket, tokens) in [
        (ErrorBucket::OtherRepeat, counts.other_repeat),
        (ErrorBucket::SameHead, counts.same_head),
        (ErrorBucket::SubtreeAttach, counts.subtree_attach),
        (ErrorBucket::PpAttach, counts.pp_attach),
    ] {
        for (a, b) in pair_sizes(tokens).map_err(|e| format!("{bucket}: {e}"))? {
            out.push(pair_sentence(out.len(), bucket, a, b));
        }
    }
    // each pair sentence also holds a V and a trailing O token
    let used = 2 * out.len() as u64;
    let mut left = counts
        .no_bucket
        .checked_sub(used)
        .ok_or_else(|| format!("NO_BUCKET needs at least {used} tokens for the pair sentences"))?;
    while left > 0 {
        let n = left.min(26);
        out.push(filler_sentence(out.len(), n as usize));
        left -= n;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bench_corpus_hits_totals() {
        let c = bench_corpus(3, 200, 580);
        assert_eq!(c.len(), 200);
        assert_eq!(c.iter().map(|r| r.predicates.len()).sum::<usize>(), 580);
        assert!(c.iter().all(|r| (1..=6).contains(&r.predicates.len())));
        assert_eq!(bench_corpus(3, 200, 580), c);
    }

    #[test]
    fn pair_sizes_add_up() {
        for t in [2u64, 3, 7, 8, 43, 141, 314, 933] {
            let sizes = pair_sizes(t).unwrap();
            assert_eq!(sizes.iter().map(|(a, b)| (a + b) as u64).sum::<u64>(), t);
            assert!(sizes.iter().all(|&(a, b)| a >= 1 && b >= 1));
        }
        assert!(pair_sizes(1).is_err());
    }

    #[test]
    fn filler_sentences_are_clean() {
        for n in 1..6 {
            let s = filler_sentence(0, n);
            assert_eq!(s.frames[0].1.len(), n);
            assert!(s.frames[0].1.validate().is_empty());
        }
    }
}
