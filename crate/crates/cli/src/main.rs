mod commands;
mod failure;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use srl_core::inference::Mode;

const EXIT_CODES: &str = "\
Exit status:
  0  success
  2  usage error (unknown flag, missing argument)
  3  I/O error (unreadable input, unwritable output)
  4  malformed input (bad JSON, column or CoNLL-U data)
  5  backend or bridge protocol failure
  6  validation error (misaligned files, bad predicate indices)

Failures are also reported on stderr as one JSON object:
  {\"error\": \"<kind>\", \"message\": \"...\"}";

#[derive(Parser, Debug)]
#[command(name = "srl", version, about = "Semantic role labeling pipeline tools", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert column-format annotations into JSON Lines instances
    Ingest(IngestArgs),
    /// Tag instances with a backend, adding `predicted_labels`
    Tag(TagArgs),
    /// Compare the cached and per-predicate tagging paths
    Bench(BenchArgs),
    /// Find, classify and repair repeated same-role spans
    Analyze(AnalyzeArgs),
    /// Span precision, recall and F1 against gold
    Score(ScoreArgs),
    /// Token agreement between two systems relative to gold
    Agreement(AgreementArgs),
    /// Project labels onto translations through word alignments
    Project(ProjectArgs),
    /// Serve the mock backend over the bridge protocol on stdin/stdout
    ServeMock {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
struct Output {
    /// Write the JSON report to this file
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    /// Print the JSON report instead of the text summary
    #[arg(long)]
    json: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum BackendKind {
    Mock,
    Bridge,
}

#[derive(Args, Debug, Clone)]
struct BackendArgs {
    #[arg(long, value_enum, default_value = "mock")]
    backend: BackendKind,
    /// Bridge address: `host:port`, or `exec:<command>` to spawn one
    #[arg(long, env = "SRL_BRIDGE_ADDR", required_if_eq("backend", "bridge"))]
    bridge_addr: Option<String>,
    /// Seed of the mock backend
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Most predicate rows per forward call (default: whole sentence)
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    max_batch: Option<u64>,
}

#[derive(Args, Debug)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// One regular expression per line matching tokens to drop
    #[arg(long, value_name = "FILE")]
    artifact_patterns: Option<PathBuf>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Debug)]
struct TagArgs {
    #[arg(long)]
    instances: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_parser = parse_mode, default_value = "cached")]
    mode: Mode,
    /// Sentences tagged in parallel, one backend each
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: u64,
    #[command(flatten)]
    backend: BackendArgs,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    instances: Option<PathBuf>,
    /// Generate `SENTENCES:PREDICATES` random sentences instead
    #[arg(long, value_name = "SENTENCES:PREDICATES", value_parser = parse_synthetic)]
    synthetic: Option<(usize, usize)>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    repeat: u64,
    #[command(flatten)]
    backend: BackendArgs,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Tagged instances (`predicted_labels`, else `labels`)
    #[arg(long)]
    pred: PathBuf,
    /// Dependency parses, one CoNLL-U block per sentence
    #[arg(long)]
    deps: PathBuf,
    #[arg(long)]
    out_fixed: PathBuf,
    #[arg(long)]
    out_review: PathBuf,
    /// Relations treated as prepositional attachment
    #[arg(long, value_delimiter = ',', default_value = "prep,pobj,nmod")]
    pp_relations: Vec<String>,
    /// Do not treat nominals with a `case` dependent as prepositional
    #[arg(long)]
    no_case_marked: bool,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    /// Score predicate (V) spans as well
    #[arg(long)]
    include_v: bool,
    /// Score R- and C- spans as their base role
    #[arg(long)]
    fold_cr: bool,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Debug)]
struct AgreementArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Debug)]
struct ProjectArgs {
    /// Tagged source instances
    #[arg(long)]
    src: PathBuf,
    /// Target sentences, one per line, tokens separated by spaces
    #[arg(long)]
    tgt: PathBuf,
    /// Pharaoh alignments, one line per sentence
    #[arg(long)]
    align: PathBuf,
    /// Source dependency parses; enables repair before projection
    #[arg(long)]
    deps: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    output: Output,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

fn parse_synthetic(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or("expected SENTENCES:PREDICATES")?;
    let n: usize = a.parse().map_err(|e| format!("{e}"))?;
    let k: usize = b.parse().map_err(|e| format!("{e}"))?;
    if n == 0 || k < n || k > 6 * n {
        return Err("need at least one sentence and one to six predicates per sentence".to_string());
    }
    Ok((n, k))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Ingest(args) => commands::ingest(args),
        Command::Tag(args) => commands::tag(args),
        Command::Bench(args) => commands::bench(args),
        Command::Analyze(args) => commands::analyze(args),
        Command::Score(args) => commands::score(args),
        Command::Agreement(args) => commands::agreement(args),
        Command::Project(args) => commands::project(args),
        Command::ServeMock { seed } => commands::serve_mock(seed),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let line = serde_json::to_string(&failure).expect("failures serialize");
            let _ = writeln!(std::io::stderr(), "{line}");
            ExitCode::from(failure.error.exit_code())
        }
    }
}
