//! Side-by-side timing and call counting of the two tagging paths.

use std::time::Instant;

use serde::Serialize;

use crate::encoding::{BackendError, CountingBackend, TaggerBackend};
use crate::inference::{predict_srl, InferenceError, Mode, PredictOptions, SentenceRequest, TaggedSentence};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeReport {
    pub mode: Mode,
    /// Wall clock of each repetition.
    pub wall_clock_ms: Vec<f64>,
    pub mean_wall_clock_ms: f64,
    pub tokenize_calls: u64,
    /// Tokenize calls spent on sentence words.
    pub sentence_tokenize_calls: u64,
    /// Tokenize calls spent on predicate words.
    pub predicate_tokenize_calls: u64,
    pub forward_calls: u64,
    pub forward_rows: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub sentences: usize,
    pub predicates: usize,
    pub words: usize,
    pub mean_predicates_per_sentence: f64,
    pub repeat: usize,
    pub cached: ModeReport,
    pub baseline: ModeReport,
    /// Baseline over cached sentence tokenize calls.
    pub sentence_tokenize_ratio: f64,
    /// Baseline over cached tokenize calls, predicates included.
    pub tokenize_ratio: f64,
    /// Baseline over cached mean wall clock.
    pub speedup: f64,
    /// Whether both paths produced identical tags.
    pub outputs_identical: bool,
}

fn run_mode<B, F>(
    requests: &[SentenceRequest],
    mode: Mode,
    repeat: usize,
    options: PredictOptions,
    make_backend: &mut F,
) -> Result<(ModeReport, Vec<TaggedSentence>), InferenceError>
where
    B: TaggerBackend,
    F: FnMut() -> Result<B, BackendError>,
{
    let predicates: u64 = requests.iter().map(|r| r.predicates.len() as u64).sum();
    let mut times = Vec::with_capacity(repeat);
    let mut counts = None;
    let mut outputs = Vec::new();
    for _ in 0..repeat.max(1) {
        let mut backend = CountingBackend::new(make_backend().map_err(InferenceError::BackendSetup)?);
        let start = Instant::now();
        let tagged: Vec<TaggedSentence> = requests
            .iter()
            .map(|r| predict_srl(&r.words, &r.predicates, &mut backend, mode, options))
            .collect::<Result<_, _>>()?;
        times.push(start.elapsed().as_secs_f64() * 1000.0);
        let c = backend.counts();
        debug_assert!(counts.is_none_or(|prev| prev == c), "call counts are deterministic");
        counts = Some(c);
        outputs = tagged;
    }
    let c = counts.expect("at least one repetition");
    let mean = times.iter().sum::<f64>() / times.len() as f64;
    Ok((
        ModeReport {
            mode,
            wall_clock_ms: times,
            mean_wall_clock_ms: mean,
            tokenize_calls: c.tokenize_calls,
            sentence_tokenize_calls: c.tokenize_calls - predicates,
            predicate_tokenize_calls: predicates,
            forward_calls: c.forward_calls,
            forward_rows: c.forward_rows,
        },
        outputs,
    ))
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// Runs both paths `repeat` times on a fresh backend each time.
pub fn run_bench<B, F>(
    requests: &[SentenceRequest],
    repeat: usize,
    options: PredictOptions,
    mut make_backend: F,
) -> Result<BenchReport, InferenceError>
where
    B: TaggerBackend,
    F: FnMut() -> Result<B, BackendError>,
{
    let (cached, cached_out) = run_mode(requests, Mode::Cached, repeat, options, &mut make_backend)?;
    let (baseline, baseline_out) = run_mode(requests, Mode::Baseline, repeat, options, &mut make_backend)?;
    let predicates: usize = requests.iter().map(|r| r.predicates.len()).sum();
    Ok(BenchReport {
        sentences: requests.len(),
        predicates,
        words: requests.iter().map(|r| r.words.len()).sum(),
        mean_predicates_per_sentence: ratio(predicates as f64, requests.len() as f64),
        repeat: repeat.max(1),
        sentence_tokenize_ratio: ratio(
            baseline.sentence_tokenize_calls as f64,
            cached.sentence_tokenize_calls as f64,
        ),
        tokenize_ratio: ratio(baseline.tokenize_calls as f64, cached.tokenize_calls as f64),
        speedup: ratio(baseline.mean_wall_clock_ms, cached.mean_wall_clock_ms),
        outputs_identical: cached_out == baseline_out,
        cached,
        baseline,
    })
}
