use proptest::prelude::*;

use srl_core::bio::tokens_from;
use srl_core::encoding::mock_backend;
use srl_core::evaluation::{score_spans, ScoreOptions};
use srl_core::inference::{build_inputs_baseline, pad_and_stack, predict_srl, Mode, PredictOptions};
use srl_core::ingest::{ColumnParser, ColumnSentence};
use srl_core::projection::{enforce_one_to_one, project_tags, Alignment};
use srl_core::{BioSequence, Frame, LabeledSpan, Percent, RoleLabel};

const ROLES: &[&str] = &["ARG0", "ARG1", "ARG2", "ARGM-TMP", "R-ARG0"];

fn tag_strategy() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("O".to_string()),
        (0..ROLES.len(), any::<bool>()).prop_map(|(r, b)| format!("{}-{}", if b { "B" } else { "I" }, ROLES[r])),
    ]
}

fn sequence(max: usize) -> impl Strategy<Value = BioSequence> {
    (0..max).prop_flat_map(sequence_of)
}

fn sequence_of(len: usize) -> impl Strategy<Value = BioSequence> {
    prop::collection::vec(tag_strategy(), len).prop_map(|t| BioSequence::parse(&t).unwrap())
}

/// Non-overlapping spans over `len` tokens, built from random cut points.
fn spans(len: usize) -> impl Strategy<Value = Vec<LabeledSpan>> {
    prop::collection::vec((any::<bool>(), 0..ROLES.len(), 1..4usize), 0..len).prop_map(move |pieces| {
        let mut out = Vec::new();
        let mut at = 0;
        for (labeled, role, width) in pieces {
            if at + width > len {
                break;
            }
            if labeled {
                out.push(LabeledSpan::new(ROLES[role].parse().unwrap(), at, at + width - 1));
            }
            at += width;
        }
        out
    })
}

fn words(n: usize) -> Vec<String> {
    const LEX: &[&str] = &[
        "the",
        "crash",
        "temperament",
        "a",
        "markets",
        "recovered",
        "in",
        "October",
        "x",
    ];
    (0..n).map(|i| LEX[(i * 7 + n) % LEX.len()].to_string()).collect()
}

proptest! {
    #[test]
    fn decode_then_encode_repairs_boundaries(seq in sequence(12)) {
        let spans = seq.decode_spans();
        let back = BioSequence::encode_spans(&spans, seq.len()).unwrap();
        prop_assert_eq!(&back, &seq.repair_boundaries());
        prop_assert_eq!(back.decode_spans(), spans);
    }

    #[test]
    fn encode_then_decode_is_identity((len, spans) in (1..16usize).prop_flat_map(|n| (Just(n), spans(n)))) {
        let seq = BioSequence::encode_spans(&spans, len).unwrap();
        prop_assert!(seq.is_well_formed());
        prop_assert_eq!(seq.decode_spans(), spans);
    }

    #[test]
    fn repair_is_idempotent_and_well_formed(seq in sequence(12)) {
        let once = seq.repair_boundaries();
        prop_assert!(once.is_well_formed());
        prop_assert_eq!(once.repair_boundaries(), once.clone());
        prop_assert_eq!(once.decode_spans(), seq.decode_spans());
    }

    #[test]
    fn column_render_parses_back(
        columns in (1..10usize).prop_flat_map(|n| prop::collection::vec(
            (0..n, spans(n)).prop_map(move |(p, s)| (n, p, s)), 1..4)),
    ) {
        let n = columns[0].0;
        let mut sequences = Vec::new();
        for (_, pred, spans) in &columns {
            let mut kept: Vec<LabeledSpan> = spans.iter().filter(|s| !s.contains(*pred)).cloned().collect();
            kept.push(LabeledSpan::new(RoleLabel::predicate(), *pred, *pred));
            sequences.push(BioSequence::encode_spans(&kept, n).unwrap());
        }
        let sentence = ColumnSentence::render("g", &words(n), &sequences);
        let parsed = ColumnParser::default().parse(&sentence).unwrap();
        let labels: Vec<BioSequence> = parsed.instances.iter().map(|i| i.labels().clone()).collect();
        prop_assert_eq!(labels, sequences);
        prop_assert_eq!(parsed.nested_flattened, 0);
    }

    #[test]
    fn padding_unpads(n in 1..12usize, preds in prop::collection::btree_set(0..12usize, 1..5)) {
        let preds: Vec<usize> = preds.into_iter().filter(|&p| p < n).collect();
        prop_assume!(!preds.is_empty());
        let mut backend = mock_backend(5);
        let tokens = tokens_from(&words(n)).unwrap();
        let inputs = build_inputs_baseline(&tokens, &preds, &mut backend).unwrap();
        let batch = pad_and_stack(&inputs, 0).unwrap();
        prop_assert_eq!(batch.rows(), inputs.len());
        prop_assert_eq!(batch.width(), inputs.iter().map(|i| i.len()).max().unwrap());
        for (row, input) in batch.attention_mask.iter().zip(&inputs) {
            prop_assert_eq!(row.iter().map(|&m| m as usize).sum::<usize>(), input.len());
        }
        prop_assert_eq!(batch.unpad(), inputs);
    }

    #[test]
    fn both_paths_agree(seed in 0..50u64, n in 1..20usize, preds in prop::collection::btree_set(0..20usize, 1..6)) {
        let preds: Vec<usize> = preds.into_iter().filter(|&p| p < n).collect();
        prop_assume!(!preds.is_empty());
        let tokens = tokens_from(&words(n)).unwrap();
        let mut backend = mock_backend(seed);
        let cached = predict_srl(&tokens, &preds, &mut backend, Mode::Cached, PredictOptions::default()).unwrap();
        let baseline = predict_srl(&tokens, &preds, &mut backend, Mode::Baseline, PredictOptions { max_batch: Some(2) }).unwrap();
        prop_assert_eq!(&cached, &baseline);
        for (_, labels) in &cached.frames {
            prop_assert!(labels.is_well_formed());
        }
    }

    #[test]
    fn projection_never_leaves_orphans(
        seq in sequence(10),
        links in prop::collection::vec((0..10usize, 0..10usize), 0..15),
        target_len in 1..10usize,
    ) {
        let links: Vec<(usize, usize)> = links.into_iter().filter(|&(s, t)| s < seq.len() && t < target_len).collect();
        let resolved = enforce_one_to_one(&Alignment::new(links.clone()));
        prop_assert!(resolved.kept.is_one_to_one());
        prop_assert_eq!(resolved.kept.len() + resolved.dropped.len(), Alignment::new(links).len());
        let projected = project_tags(&seq, &resolved.kept, target_len).unwrap();
        prop_assert!(projected.labels.is_well_formed());
        for (t, source) in projected.provenance.iter().enumerate() {
            match source {
                Some(s) => prop_assert_eq!(projected.labels.tags()[t].role(), seq.tags()[*s].role()),
                None => prop_assert!(projected.labels.tags()[t].is_outside()),
            }
        }
    }

    #[test]
    fn self_scoring_is_perfect_and_swap_exchanges_p_and_r(
        (a, b) in (0..10usize).prop_flat_map(|n| (sequence_of(n), sequence_of(n))),
    ) {
        let fa = [Frame::from_sequence(0, &a)];
        let fb = [Frame::from_sequence(0, &b)];
        let options = ScoreOptions::default();
        let same = score_spans(&fa, &fa, options).unwrap();
        prop_assert_eq!(same.true_positives, same.gold_spans);
        let ab = score_spans(&fa, &fb, options).unwrap();
        let ba = score_spans(&fb, &fa, options).unwrap();
        prop_assert_eq!(ab.precision, ba.recall);
        prop_assert_eq!(ab.f1, ba.f1);
    }

    #[test]
    fn percent_rounds_half_up(total in 1..1_000_000u64, count_frac in 0..=1000u64) {
        let count = total * count_frac / 1000;
        let scaled = count * 10_000;
        let (q, r) = (scaled / total, scaled % total);
        let expected = if 2 * r >= total { q + 1 } else { q };
        prop_assert_eq!(Percent::of(count, total).hundredths(), expected);
    }
}
