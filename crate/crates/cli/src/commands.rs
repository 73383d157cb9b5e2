use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use srl_core::bench::{run_bench, BenchReport};
use srl_core::bridge::{serve, BridgeBackend};
use srl_core::corpus::{group_sentences, read_instances, write_jsonl, InstanceRecord, SentenceGroup};
use srl_core::diagnostics::{
    read_conllu, AnalysisReport, AnalysisSentence, Analyzer, Classifier, DiagnosisRecord, PpRelations, RepairAction,
    SentenceTree,
};
use srl_core::encoding::{mock_backend, BackendError, TaggerBackend};
use srl_core::evaluation::{
    agreement_counts, missing_roles, score_spans, AgreementCounts, AgreementReport, MissingRoleReport, ScoreOptions,
    ScoreReport,
};
use srl_core::inference::{tag_sentences, PredictOptions, SentenceRequest};
use srl_core::ingest::{ingest as run_ingest, ArtifactPatterns, ColumnParser, IngestError};
use srl_core::projection::{project_corpus, Alignment, NearestFirst, SourceSentence, TargetSentence};
use srl_core::synth::bench_corpus;
use srl_core::{BioSequence, Frame, Token};

use crate::failure::{Failure, Kind};
use crate::{
    AgreementArgs, AnalyzeArgs, BackendArgs, BackendKind, BenchArgs, IngestArgs, Output, ProjectArgs, ScoreArgs,
    TagArgs,
};

type DynBackend = Box<dyn TaggerBackend + Send>;

fn open_input(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path).map(BufReader::new).map_err(|e| Failure::io(path, e))
}

/// Fails early when the output's directory does not exist.
fn check_output(path: &Path) -> Result<(), Failure> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(Failure::io(
            path,
            io::Error::new(io::ErrorKind::NotFound, "directory does not exist"),
        )),
        _ => Ok(()),
    }
}

fn create_output(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure::io(path, e))
}

fn write_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<(), Failure> {
    let mut w = create_output(path)?;
    write_jsonl(items, &mut w).map_err(|e| Failure::io(path, e))
}

/// Writes the JSON report where requested and prints either it or `summary`.
fn emit<T: Serialize>(out: &Output, report: &T, summary: &str) -> Result<(), Failure> {
    let json = serde_json::to_string_pretty(report).expect("reports serialize");
    if let Some(path) = &out.report {
        std::fs::write(path, format!("{json}\n")).map_err(|e| Failure::io(path, e))?;
    }
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    let printed = if out.json {
        writeln!(lock, "{json}")
    } else {
        write!(lock, "{summary}")
    };
    printed.map_err(|e| Failure::new(Kind::Io, format!("stdout: {e}")))
}

fn backend_factory(args: &BackendArgs) -> impl Fn() -> Result<DynBackend, BackendError> + Sync {
    let kind = args.backend;
    let seed = args.seed;
    let addr = args.bridge_addr.clone();
    move || -> Result<DynBackend, BackendError> {
        match kind {
            BackendKind::Mock => Ok(Box::new(mock_backend(seed))),
            BackendKind::Bridge => {
                let addr = addr.as_deref().expect("clap requires an address for the bridge");
                Ok(Box::new(BridgeBackend::connect(addr)?))
            }
        }
    }
}

fn predict_options(args: &BackendArgs) -> PredictOptions {
    PredictOptions {
        max_batch: args.max_batch.map(|n| n as usize),
    }
}

fn load_instances(path: &Path) -> Result<Vec<InstanceRecord>, Failure> {
    read_instances(open_input(path)?).map_err(|e| Failure::corpus(path, e))
}

fn requests(
    records: &[InstanceRecord],
    groups: &[SentenceGroup],
    path: &Path,
) -> Result<Vec<SentenceRequest>, Failure> {
    groups
        .iter()
        .map(|g| {
            let words: Vec<Token> = records[g.members[0]].tokens().map_err(|e| Failure::format(path, e))?;
            Ok(SentenceRequest {
                words,
                predicates: g.members.iter().map(|&m| records[m].predicate_word_idx).collect(),
            })
        })
        .collect()
}

fn system_labels<'a>(record: &'a InstanceRecord, line: usize, path: &Path) -> Result<&'a BioSequence, Failure> {
    record
        .system_labels()
        .ok_or_else(|| Failure::format(path, format!("instance {line} has no labels")))
}

fn gold_labels<'a>(record: &'a InstanceRecord, line: usize, path: &Path) -> Result<&'a BioSequence, Failure> {
    record
        .labels
        .as_ref()
        .ok_or_else(|| Failure::format(path, format!("instance {line} has no gold labels")))
}

pub fn ingest(args: IngestArgs) -> Result<(), Failure> {
    let input = open_input(&args.input)?;
    let patterns = match &args.artifact_patterns {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
            ArtifactPatterns::parse(&text).map_err(|e| Failure::format(path, e))?
        }
        None => ArtifactPatterns::default(),
    };
    check_output(&args.output)?;
    let mut sink = create_output(&args.output)?;
    let report = run_ingest(input, &mut sink, &ColumnParser::new(patterns)).map_err(|e| match e {
        IngestError::Read(source) => Failure::io(&args.input, source),
        write @ IngestError::Write { .. } => Failure::new(Kind::Io, format!("{}: {write}", args.output.display())),
    })?;
    let mut summary = format!("{report}\n");
    for skip in &report.skip_reasons {
        let _ = writeln!(summary, "  skipped sentence {}: {}", skip.sentence, skip.reason);
    }
    emit(&args.out, &report, &summary)
}

#[derive(Serialize)]
struct TagReport {
    mode: String,
    backend: String,
    sentences: usize,
    instances: usize,
}

pub fn tag(args: TagArgs) -> Result<(), Failure> {
    let mut records = load_instances(&args.instances)?;
    check_output(&args.output)?;
    let groups = group_sentences(&records);
    let requests = requests(&records, &groups, &args.instances)?;
    let tagged = tag_sentences(
        &requests,
        args.jobs as usize,
        backend_factory(&args.backend),
        args.mode,
        predict_options(&args.backend),
    )?;
    for (group, sentence) in groups.iter().zip(tagged) {
        for (&member, (_, labels)) in group.members.iter().zip(sentence.frames) {
            records[member].predicted_labels = Some(labels);
        }
    }
    write_lines(&args.output, &records)?;
    let report = TagReport {
        mode: args.mode.to_string(),
        backend: format!("{:?}", args.backend.backend).to_lowercase(),
        sentences: groups.len(),
        instances: records.len(),
    };
    let summary = format!(
        "tagged {} instances in {} sentences ({} mode)\n",
        report.instances, report.sentences, report.mode
    );
    emit(&args.out, &report, &summary)
}

fn bench_table(r: &BenchReport) -> String {
    let mut s = format!(
        "{} sentences, {} predicates ({:.2} per sentence), {} words, {} repetition(s)\n",
        r.sentences, r.predicates, r.mean_predicates_per_sentence, r.words, r.repeat
    );
    let _ = writeln!(
        s,
        "{:<9} {:>10} {:>10} {:>10} {:>8} {:>8} {:>10}",
        "mode", "tokenize", "sentence", "predicate", "forward", "rows", "mean ms"
    );
    for m in [&r.cached, &r.baseline] {
        let _ = writeln!(
            s,
            "{:<9} {:>10} {:>10} {:>10} {:>8} {:>8} {:>10.2}",
            m.mode.to_string(),
            m.tokenize_calls,
            m.sentence_tokenize_calls,
            m.predicate_tokenize_calls,
            m.forward_calls,
            m.forward_rows,
            m.mean_wall_clock_ms
        );
    }
    let _ = writeln!(
        s,
        "sentence tokenize ratio {:.4}, total tokenize ratio {:.4}, speedup {:.2}x, identical outputs: {}",
        r.sentence_tokenize_ratio, r.tokenize_ratio, r.speedup, r.outputs_identical
    );
    s
}

pub fn bench(args: BenchArgs) -> Result<(), Failure> {
    let requests = match (&args.instances, args.synthetic) {
        (Some(path), _) => {
            let records = load_instances(path)?;
            let groups = group_sentences(&records);
            requests(&records, &groups, path)?
        }
        (None, Some((n, k))) => bench_corpus(args.backend.seed, n, k),
        (None, None) => unreachable!("clap requires one input"),
    };
    let factory = backend_factory(&args.backend);
    let report = run_bench(&requests, args.repeat as usize, predict_options(&args.backend), factory)?;
    emit(&args.out, &report, &bench_table(&report))
}

#[derive(Serialize)]
struct ReviewEntry<'a> {
    words: &'a [String],
    #[serde(flatten)]
    record: &'a DiagnosisRecord,
}

#[derive(Serialize)]
struct AnalyzeReport<'a> {
    #[serde(flatten)]
    analysis: &'a AnalysisReport,
    unused_trees: usize,
}

pub fn analyze(args: AnalyzeArgs) -> Result<(), Failure> {
    let records = load_instances(&args.pred)?;
    let trees = read_conllu(open_input(&args.deps)?).map_err(|e| Failure::io(&args.deps, e))?;
    for path in [&args.out_fixed, &args.out_review] {
        check_output(path)?;
    }
    let groups = group_sentences(&records);
    let mut sentences = Vec::with_capacity(groups.len());
    for (i, g) in groups.iter().enumerate() {
        let frames = g
            .members
            .iter()
            .map(|&m| {
                Ok((
                    records[m].predicate_word_idx,
                    system_labels(&records[m], m + 1, &args.pred)?.clone(),
                ))
            })
            .collect::<Result<Vec<_>, Failure>>()?;
        sentences.push(AnalysisSentence {
            id: (i + 1).to_string(),
            frames,
            tree: SentenceTree::from(trees.get(i).cloned()),
        });
    }
    let classifier = Classifier::new(PpRelations::new(&args.pp_relations, !args.no_case_marked));
    let analysis = Analyzer::new(classifier).analyze_corpus(&sentences);

    let mut fixed = records.clone();
    for (g, repaired) in groups.iter().zip(&analysis.sentences) {
        for (&m, (_, labels)) in g.members.iter().zip(&repaired.frames) {
            let slot = if fixed[m].predicted_labels.is_some() {
                &mut fixed[m].predicted_labels
            } else {
                &mut fixed[m].labels
            };
            *slot = Some(labels.clone());
        }
    }
    write_lines(&args.out_fixed, &fixed)?;
    let review: Vec<ReviewEntry> = analysis
        .review_queue()
        .map(|r| {
            let sentence: usize = r.sentence.parse().expect("sentence ids are ordinals");
            ReviewEntry {
                words: &groups[sentence - 1].words,
                record: r,
            }
        })
        .collect();
    write_lines(&args.out_review, &review)?;

    let report = AnalyzeReport {
        analysis: &analysis.report,
        unused_trees: trees.len().saturating_sub(groups.len()),
    };
    let r = &analysis.report;
    let mut summary = r.histogram.to_string();
    let _ = writeln!(
        summary,
        "{} repeated pairs: {} auto-merged, {} for review, {} without a tree",
        r.repeated_pairs,
        r.auto_merged,
        r.review_required,
        analysis
            .records
            .iter()
            .filter(|d| d.action == RepairAction::None)
            .count()
    );
    for u in &r.unanalyzable {
        let _ = writeln!(summary, "  sentence {} not analyzable: {}", u.sentence, u.reason);
    }
    emit(&args.out, &report, &summary)
}

#[derive(Serialize)]
struct ScoreOutput {
    scores: ScoreReport,
    missing_roles: MissingRoleReport,
}

fn check_same_words(pred: &[InstanceRecord], gold: &[InstanceRecord]) -> Result<(), Failure> {
    if pred.len() != gold.len() {
        return Err(Failure::new(
            Kind::Validation,
            format!("{} predicted instances but {} gold instances", pred.len(), gold.len()),
        ));
    }
    let bad: Vec<usize> = (0..pred.len())
        .filter(|&i| pred[i].words != gold[i].words)
        .map(|i| i + 1)
        .collect();
    if !bad.is_empty() {
        return Err(Failure::new(
            Kind::Validation,
            format!("instances {bad:?} have different words"),
        ));
    }
    Ok(())
}

pub fn score(args: ScoreArgs) -> Result<(), Failure> {
    let pred = load_instances(&args.pred)?;
    let gold = load_instances(&args.gold)?;
    check_same_words(&pred, &gold)?;
    let frames = |records: &[InstanceRecord], gold_side: bool, path: &Path| {
        records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let labels = if gold_side {
                    gold_labels(r, i + 1, path)?
                } else {
                    system_labels(r, i + 1, path)?
                };
                Ok(Frame::from_sequence(r.predicate_word_idx, labels))
            })
            .collect::<Result<Vec<_>, Failure>>()
    };
    let p = frames(&pred, false, &args.pred)?;
    let g = frames(&gold, true, &args.gold)?;
    let options = ScoreOptions {
        include_v: args.include_v,
        fold_cr: args.fold_cr,
    };
    let out = ScoreOutput {
        scores: score_spans(&p, &g, options)?,
        missing_roles: missing_roles(&p, &g)?,
    };
    emit(&args.out, &out, &out.scores.to_string())
}

pub fn agreement(args: AgreementArgs) -> Result<(), Failure> {
    let a = load_instances(&args.a)?;
    let b = load_instances(&args.b)?;
    let gold = load_instances(&args.gold)?;
    check_same_words(&a, &gold)?;
    check_same_words(&b, &gold)?;
    let mut counts = AgreementCounts::default();
    for i in 0..gold.len() {
        let x = system_labels(&a[i], i + 1, &args.a)?;
        let y = system_labels(&b[i], i + 1, &args.b)?;
        let g = gold_labels(&gold[i], i + 1, &args.gold)?;
        counts = counts.merge(agreement_counts(x.tags(), y.tags(), g.tags())?);
    }
    let report: AgreementReport = counts.report();
    emit(&args.out, &report, &report.to_string())
}

#[derive(Serialize)]
struct ProjectReport {
    sentences: usize,
    projected: usize,
    skipped: Vec<srl_core::projection::ProjectionFailure>,
    dropped_alignments: usize,
    auto_merged: usize,
}

pub fn project(args: ProjectArgs) -> Result<(), Failure> {
    let records = load_instances(&args.src)?;
    let tgt_lines: Vec<String> = open_input(&args.tgt)?
        .lines()
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::io(&args.tgt, e))?;
    let align_lines: Vec<String> = open_input(&args.align)?
        .lines()
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::io(&args.align, e))?;
    let trees = match &args.deps {
        Some(path) => Some(read_conllu(open_input(path)?).map_err(|e| Failure::io(path, e))?),
        None => None,
    };
    check_output(&args.out)?;
    if tgt_lines.len() != align_lines.len() {
        return Err(Failure::new(
            Kind::Validation,
            format!(
                "{} target sentences but {} alignment lines",
                tgt_lines.len(),
                align_lines.len()
            ),
        ));
    }
    let mut targets = Vec::with_capacity(tgt_lines.len());
    for (i, (words, align)) in tgt_lines.iter().zip(&align_lines).enumerate() {
        let alignment: Alignment = align
            .parse()
            .map_err(|e| Failure::format(&args.align, format!("line {}: {e}", i + 1)))?;
        targets.push(TargetSentence {
            words: words.split_whitespace().map(str::to_string).collect(),
            alignment,
        });
    }
    let groups = group_sentences(&records);
    let mut sources = Vec::with_capacity(groups.len());
    for (i, g) in groups.iter().enumerate() {
        let frames = g
            .members
            .iter()
            .map(|&m| {
                Ok((
                    records[m].predicate_word_idx,
                    system_labels(&records[m], m + 1, &args.src)?.clone(),
                ))
            })
            .collect::<Result<Vec<_>, Failure>>()?;
        sources.push(SourceSentence {
            id: (i + 1).to_string(),
            words: g.words.clone(),
            frames,
        });
    }
    let trees: Option<Vec<SentenceTree>> = trees.map(|t| {
        (0..sources.len())
            .map(|i| SentenceTree::from(t.get(i).cloned()))
            .collect()
    });
    let output = project_corpus(
        &sources,
        &targets,
        trees.as_deref(),
        &Analyzer::default(),
        &NearestFirst,
    );
    write_lines(&args.out, &output.sentences)?;
    let report = ProjectReport {
        sentences: sources.len(),
        projected: output.sentences.len(),
        dropped_alignments: output.sentences.iter().map(|s| s.dropped_alignments.len()).sum(),
        auto_merged: output.auto_merged,
        skipped: output.skipped,
    };
    let mut summary = format!(
        "projected {} of {} sentences; {} alignment links dropped, {} source pairs merged\n",
        report.projected, report.sentences, report.dropped_alignments, report.auto_merged
    );
    for s in &report.skipped {
        let _ = writeln!(summary, "  skipped sentence {}: {}", s.sentence, s.reason);
    }
    emit(&args.output, &report, &summary)
}

pub fn serve_mock(seed: u64) -> Result<(), Failure> {
    let stdin = io::stdin();
    let stdout = io::stdout();
    serve(&mut mock_backend(seed), stdin.lock(), stdout.lock()).map_err(|e| Failure::new(Kind::Io, e.to_string()))
}
