//! Exact-match span scoring, system agreement partitions and missing-role
//! distributions.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::bio::{Frame, LabeledSpan};
use crate::diagnostics::{ranked, LabelCount};
use crate::percent::Percent;
use crate::role::{BaseRole, RoleLabel};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("{pred} predicted frames but {gold} gold frames")]
    FrameCount { pred: usize, gold: usize },
    #[error("predicate positions differ at frames {0:?}")]
    Misaligned(Vec<usize>),
    #[error("streams differ in length: a={a}, b={b}, gold={gold}")]
    StreamLength { a: usize, b: usize, gold: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScoreOptions {
    /// Score `V` spans too.
    pub include_v: bool,
    /// Score `R-X` and `C-X` spans as `X`.
    pub fold_cr: bool,
}

/// Micro-averaged span scores; P, R and F1 are percentages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoreReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: u64,
    pub predicted_spans: u64,
    pub gold_spans: u64,
}

impl ScoreReport {
    pub fn from_counts(true_positives: u64, predicted_spans: u64, gold_spans: u64) -> ScoreReport {
        let ratio = |n: u64, d: u64| if d == 0 { 0.0 } else { 100.0 * n as f64 / d as f64 };
        let precision = ratio(true_positives, predicted_spans);
        let recall = ratio(true_positives, gold_spans);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        ScoreReport {
            precision,
            recall,
            f1,
            true_positives,
            predicted_spans,
            gold_spans,
        }
    }
}

impl fmt::Display for ScoreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>10} {:>10} {:>10} {:>8} {:>8} {:>8}",
            "P (%)", "R (%)", "F1 (%)", "TP", "pred", "gold"
        )?;
        writeln!(
            f,
            "{:>10} {:>10} {:>10} {:>8} {:>8} {:>8}",
            Percent::from_f64(self.precision).to_string(),
            Percent::from_f64(self.recall).to_string(),
            Percent::from_f64(self.f1).to_string(),
            self.true_positives,
            self.predicted_spans,
            self.gold_spans
        )
    }
}

fn check_aligned(pred: &[Frame], gold: &[Frame]) -> Result<(), EvalError> {
    if pred.len() != gold.len() {
        return Err(EvalError::FrameCount {
            pred: pred.len(),
            gold: gold.len(),
        });
    }
    let bad: Vec<usize> = (0..pred.len())
        .filter(|&i| pred[i].predicate_index() != gold[i].predicate_index())
        .collect();
    if !bad.is_empty() {
        return Err(EvalError::Misaligned(bad));
    }
    Ok(())
}

fn scored_spans<'a>(frame: &'a Frame, options: ScoreOptions) -> impl Iterator<Item = (RoleLabel, usize, usize)> + 'a {
    frame
        .spans()
        .iter()
        .filter(move |s| options.include_v || !s.role.is_predicate())
        .map(move |s| {
            let role = if options.fold_cr {
                s.role.without_link()
            } else {
                s.role.clone()
            };
            (role, s.start, s.end)
        })
}

/// Scores predicted frames against gold frames paired by position.
///
/// A predicted span counts as correct when a gold span of the same frame
/// has the same role, start and end.
pub fn score_spans(pred: &[Frame], gold: &[Frame], options: ScoreOptions) -> Result<ScoreReport, EvalError> {
    check_aligned(pred, gold)?;
    let (mut tp, mut n_pred, mut n_gold) = (0u64, 0u64, 0u64);
    for (p, g) in pred.iter().zip(gold) {
        let mut remaining: HashMap<(RoleLabel, usize, usize), u32> = HashMap::new();
        for span in scored_spans(g, options) {
            n_gold += 1;
            *remaining.entry(span).or_default() += 1;
        }
        for span in scored_spans(p, options) {
            n_pred += 1;
            if let Some(left) = remaining.get_mut(&span).filter(|n| **n > 0) {
                *left -= 1;
                tp += 1;
            }
        }
    }
    Ok(ScoreReport::from_counts(tp, n_pred, n_gold))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AgreementCell {
    pub count: u64,
    /// Share of the cell's partition.
    pub within: Percent,
    /// Share of all tokens.
    pub of_total: Percent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AgreementSide {
    pub count: u64,
    pub of_total: Percent,
}

/// Token outcomes of two systems against gold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct AgreementCounts {
    pub both_correct: u64,
    pub both_wrong: u64,
    pub a_correct: u64,
    pub b_correct: u64,
    pub neither: u64,
}

impl AgreementCounts {
    pub fn total(&self) -> u64 {
        self.both_correct + self.both_wrong + self.a_correct + self.b_correct + self.neither
    }

    pub fn merge(self, other: AgreementCounts) -> AgreementCounts {
        AgreementCounts {
            both_correct: self.both_correct + other.both_correct,
            both_wrong: self.both_wrong + other.both_wrong,
            a_correct: self.a_correct + other.a_correct,
            b_correct: self.b_correct + other.b_correct,
            neither: self.neither + other.neither,
        }
    }

    pub fn report(&self) -> AgreementReport {
        let total = self.total();
        let agree = self.both_correct + self.both_wrong;
        let disagree = self.a_correct + self.b_correct + self.neither;
        let cell = |count, partition| AgreementCell {
            count,
            within: Percent::of(count, partition),
            of_total: Percent::of(count, total),
        };
        AgreementReport {
            total,
            agreement: AgreementSide {
                count: agree,
                of_total: Percent::of(agree, total),
            },
            disagreement: AgreementSide {
                count: disagree,
                of_total: Percent::of(disagree, total),
            },
            both_correct: cell(self.both_correct, agree),
            both_wrong: cell(self.both_wrong, agree),
            a_correct: cell(self.a_correct, disagree),
            b_correct: cell(self.b_correct, disagree),
            neither: cell(self.neither, disagree),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AgreementReport {
    pub total: u64,
    pub agreement: AgreementSide,
    pub disagreement: AgreementSide,
    pub both_correct: AgreementCell,
    pub both_wrong: AgreementCell,
    pub a_correct: AgreementCell,
    pub b_correct: AgreementCell,
    pub neither: AgreementCell,
}

impl fmt::Display for AgreementReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<16} {:>10} {:>10} {:>10}", "", "tokens", "within", "of total")?;
        let rows = [
            ("agreement", None, self.agreement.count, self.agreement.of_total),
            (
                "  both correct",
                Some(self.both_correct.within),
                self.both_correct.count,
                self.both_correct.of_total,
            ),
            (
                "  both wrong",
                Some(self.both_wrong.within),
                self.both_wrong.count,
                self.both_wrong.of_total,
            ),
            (
                "disagreement",
                None,
                self.disagreement.count,
                self.disagreement.of_total,
            ),
            (
                "  A correct",
                Some(self.a_correct.within),
                self.a_correct.count,
                self.a_correct.of_total,
            ),
            (
                "  B correct",
                Some(self.b_correct.within),
                self.b_correct.count,
                self.b_correct.of_total,
            ),
            (
                "  neither",
                Some(self.neither.within),
                self.neither.count,
                self.neither.of_total,
            ),
        ];
        for (name, within, count, total) in rows {
            let within = within.map_or(String::new(), |w| w.to_string());
            writeln!(f, "{:<16} {:>10} {:>10} {:>10}", name, count, within, total.to_string())?;
        }
        Ok(())
    }
}

/// Splits tokens by whether systems A and B agree, and by who matches gold.
pub fn agreement_partition<T: PartialEq>(a: &[T], b: &[T], gold: &[T]) -> Result<AgreementReport, EvalError> {
    Ok(agreement_counts(a, b, gold)?.report())
}

pub fn agreement_counts<T: PartialEq>(a: &[T], b: &[T], gold: &[T]) -> Result<AgreementCounts, EvalError> {
    if a.len() != b.len() || a.len() != gold.len() {
        return Err(EvalError::StreamLength {
            a: a.len(),
            b: b.len(),
            gold: gold.len(),
        });
    }
    let mut c = AgreementCounts::default();
    for ((x, y), g) in a.iter().zip(b).zip(gold) {
        let slot = match (x == y, x == g, y == g) {
            (true, true, _) => &mut c.both_correct,
            (true, false, _) => &mut c.both_wrong,
            (false, true, _) => &mut c.a_correct,
            (false, _, true) => &mut c.b_correct,
            (false, false, false) => &mut c.neither,
        };
        *slot += 1;
    }
    Ok(c)
}

/// Gold spans with no overlapping predicted span of the same role.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MissingRoleReport {
    pub gold_spans: u64,
    pub missing: u64,
    /// Every role, ranked by misses.
    pub roles: Vec<LabelCount>,
    /// Modifier roles only, with shares of the modifier misses.
    pub modifiers: Vec<LabelCount>,
}

impl MissingRoleReport {
    pub fn is_empty(&self) -> bool {
        self.missing == 0
    }
}

impl fmt::Display for MissingRoleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} of {} gold spans missing", self.missing, self.gold_spans)?;
        for (title, rows) in [("role", &self.roles), ("modifier", &self.modifiers)] {
            if rows.is_empty() {
                continue;
            }
            writeln!(f, "{:<16} {:>8} {:>8}", title, "missed", "%")?;
            for r in rows.iter() {
                writeln!(f, "{:<16} {:>8} {:>8}", r.label, r.count, r.percent.to_string())?;
            }
        }
        Ok(())
    }
}

pub fn missing_roles(pred: &[Frame], gold: &[Frame]) -> Result<MissingRoleReport, EvalError> {
    check_aligned(pred, gold)?;
    let mut roles: BTreeMap<String, u64> = BTreeMap::new();
    let mut modifiers: BTreeMap<String, u64> = BTreeMap::new();
    let (mut gold_spans, mut missing) = (0, 0);
    for (p, g) in pred.iter().zip(gold) {
        for span in g.spans() {
            gold_spans += 1;
            let found = p
                .spans()
                .iter()
                .any(|s: &LabeledSpan| s.role == span.role && s.overlaps(span));
            if found {
                continue;
            }
            missing += 1;
            let label = span.role.to_string();
            if matches!(span.role.base(), BaseRole::Modifier(_)) {
                *modifiers.entry(label.clone()).or_default() += 1;
            }
            *roles.entry(label).or_default() += 1;
        }
    }
    Ok(MissingRoleReport {
        gold_spans,
        missing,
        roles: ranked(roles),
        modifiers: ranked(modifiers),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bio::BioSequence;

    fn frame(pred: usize, tags: &[&str]) -> Frame {
        Frame::from_sequence(pred, &BioSequence::parse(tags).unwrap())
    }

    const GIFT: &[&str] = &["B-ARG0", "B-V", "B-ARG2", "B-ARG1", "I-ARG1", "O"];

    #[test]
    fn identity_scores_full_marks() {
        let g = [frame(1, GIFT)];
        let r = score_spans(&g, &g, ScoreOptions::default()).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (100.0, 100.0, 100.0));
        assert_eq!(r.gold_spans, 3);
        let with_v = score_spans(
            &g,
            &g,
            ScoreOptions {
                include_v: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(with_v.gold_spans, 4);
    }

    #[test]
    fn boundary_shift_is_fp_and_fn() {
        let g = [frame(1, GIFT)];
        let p = [frame(1, &["B-ARG0", "B-V", "B-ARG2", "B-ARG1", "I-ARG1", "I-ARG1"])];
        let r = score_spans(&p, &g, ScoreOptions::default()).unwrap();
        assert_eq!((r.true_positives, r.predicted_spans, r.gold_spans), (2, 3, 3));
        let swapped = score_spans(&g, &p, ScoreOptions::default()).unwrap();
        assert_eq!(swapped.precision, r.recall);
        assert_eq!(swapped.recall, r.precision);
    }

    #[test]
    fn cr_folding_is_optional() {
        let g = [frame(1, &["B-ARG0", "B-V", "B-R-ARG0"])];
        let p = [frame(1, &["B-ARG0", "B-V", "B-ARG0"])];
        assert_eq!(score_spans(&p, &g, ScoreOptions::default()).unwrap().true_positives, 1);
        let folded = ScoreOptions {
            fold_cr: true,
            ..Default::default()
        };
        assert_eq!(score_spans(&p, &g, folded).unwrap().true_positives, 2);
    }

    #[test]
    fn misalignment_lists_frames() {
        let g = [frame(1, GIFT), frame(1, GIFT)];
        let p = [frame(1, GIFT), frame(2, GIFT)];
        assert_eq!(
            score_spans(&p, &g, ScoreOptions::default()),
            Err(EvalError::Misaligned(vec![1]))
        );
        assert!(matches!(
            score_spans(&p[..1], &g, ScoreOptions::default()),
            Err(EvalError::FrameCount { pred: 1, gold: 2 })
        ));
        let r = score_spans(&[], &[], ScoreOptions::default()).unwrap();
        assert_eq!(r.f1, 0.0);
    }

    #[test]
    fn agreement_cells() {
        let gold = ["a", "a", "a", "a", "a"];
        let a = ["a", "b", "a", "b", "c"];
        let b = ["a", "b", "c", "a", "d"];
        let c = agreement_counts(&a, &b, &gold).unwrap();
        assert_eq!(
            c,
            AgreementCounts {
                both_correct: 1,
                both_wrong: 1,
                a_correct: 1,
                b_correct: 1,
                neither: 1
            }
        );
        let r = agreement_partition(&gold, &gold, &gold).unwrap();
        assert_eq!(r.both_correct.within.to_string(), "100.00");
        assert_eq!(r.both_correct.of_total.to_string(), "100.00");
        assert!(agreement_partition(&a, &b[..4], &gold).is_err());
    }

    #[test]
    fn missing_roles_by_overlap() {
        let g = [frame(
            1,
            &["B-ARG0", "B-V", "B-ARGM-TMP", "I-ARGM-TMP", "B-ARGM-LOC", "B-ARG1"],
        )];
        let p = [frame(1, &["B-ARG0", "B-V", "O", "O", "B-ARGM-LOC", "O"])];
        let r = missing_roles(&p, &g).unwrap();
        assert_eq!(r.missing, 2);
        assert_eq!(r.modifiers.len(), 1);
        assert_eq!(r.modifiers[0].label, "ARGM-TMP");
        assert_eq!(r.modifiers[0].percent.to_string(), "100.00");
        assert_eq!(
            r.roles.iter().map(|c| c.label.as_str()).collect::<Vec<_>>(),
            ["ARG1", "ARGM-TMP"]
        );
        // a partial overlap is not a miss
        let p = [frame(1, &["B-ARG0", "B-V", "O", "B-ARGM-TMP", "B-ARGM-LOC", "B-ARG1"])];
        assert!(missing_roles(&p, &g).unwrap().is_empty());
    }
}
