//! `valuetree`: run the pipeline from the command line.
//!
//! Exit codes: 0 success, 2 invalid input, 3 a decision is pending,
//! 4 a file could not be read or written, 5 internal failure.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use valuetree_core::compare::{compare_trees, DEFAULT_THRESHOLD};
use valuetree_core::decisions::{
    replay, DecisionError, DecisionProvider, DecisionRequest, DecisionTranscript,
    InteractiveProvider, Reply, ScriptedProvider, Stage,
};
use valuetree_core::io::artifacts::run_artifacts;
use valuetree_core::io::{
    read_text, to_canonical_json, to_dot, write_text, AnyMap, IoError, MapDocument, MappingFile,
    ScriptFile, TranscriptFile,
};
use valuetree_core::pipeline::{run_stages, FailureKind, StageName, Start};
use valuetree_core::NodeId;

const EXIT_VALIDATION: u8 = 2;
const EXIT_PENDING: u8 = 3;
const EXIT_IO: u8 = 4;
const EXIT_INTERNAL: u8 = 5;

#[derive(Parser)]
#[command(name = "valuetree", version, about = "Build value trees from cognitive maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    /// Missing answers stop the run with exit code 3.
    Strict,
    /// Missing answers take the request's default where it has one.
    Lenient,
    /// Missing answers are asked on the terminal.
    Interactive,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Input map (cognitive, value or ends-means, by stage).
    input: PathBuf,
    /// Concept-to-value mapping; required for a cognitive map.
    #[arg(long)]
    mapping: Option<PathBuf>,
    /// Answers keyed by request id.
    #[arg(long)]
    decisions: Option<PathBuf>,
    /// Transcript of an earlier run to answer from first.
    #[arg(long)]
    replay: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "strict")]
    mode: Mode,
    #[arg(long, env = "VALUETREE_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "json,dot")]
    format: Vec<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a map document and report every violation.
    Validate { input: PathBuf },
    /// Cognitive map to value map.
    ToVcm(RunArgs),
    /// Through the ends-means map.
    ToEmm(RunArgs),
    /// Through the value tree.
    ToTree(RunArgs),
    /// Every stage from a cognitive map.
    Pipeline(RunArgs),
    /// Match the nodes of two value trees.
    Compare {
        left: PathBuf,
        right: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render any map as Graphviz.
    ExportDot {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the HTTP session service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "VALUETREE_DATA_ROOT", default_value = "sessions")]
        data_root: PathBuf,
    },
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        let code = match e {
            IoError::Io { .. } => EXIT_IO,
            _ => EXIT_VALIDATION,
        };
        Failure::new(code, e.to_string())
    }
}

fn load_map(path: &Path) -> Result<AnyMap, Failure> {
    let map = MapDocument::parse(&read_text(path)?)?.into_any()?;
    let report = map.validate();
    if !report.is_valid() {
        return Err(Failure::new(
            EXIT_VALIDATION,
            format!("{}: invalid {}\n{report}", path.display(), map.kind().name()),
        ));
    }
    Ok(map)
}

/// Script answers first, then the terminal.
struct ScriptThenAsk<P> {
    answers: BTreeMap<String, String>,
    next: P,
}

impl<P: DecisionProvider> DecisionProvider for ScriptThenAsk<P> {
    fn next_answer(&mut self, request: &DecisionRequest) -> Result<Reply, DecisionError> {
        match ScriptedProvider::strict(self.answers.clone()).next_answer(request)? {
            Reply::Suspend => self.next.next_answer(request),
            answered => Ok(answered),
        }
    }
}

fn run(last: StageName, args: RunArgs, cognitive_only: bool) -> Result<(), Failure> {
    let input = load_map(&args.input)?;
    let start = match input {
        AnyMap::Cognitive(cm) => {
            let path = args.mapping.as_deref().ok_or_else(|| {
                Failure::new(EXIT_VALIDATION, "a cognitive map needs --mapping")
            })?;
            let m = MappingFile::parse(&read_text(path)?)?;
            let fundamental = m.fundamental.as_deref().map(NodeId::from).ok_or_else(|| {
                Failure::new(EXIT_VALIDATION, format!("{}: no fundamental", path.display()))
            })?;
            Start::Cognitive {
                cm,
                mapping: m.to_mapping(),
                fundamental,
            }
        }
        _ if cognitive_only => {
            return Err(Failure::new(EXIT_VALIDATION, "pipeline starts from a cognitive map"))
        }
        AnyMap::Value(vcm) => Start::Value(vcm),
        AnyMap::EndsMeans(emm) if last == StageName::Tree => Start::EndsMeans(emm),
        other => {
            return Err(Failure::new(
                EXIT_VALIDATION,
                format!("cannot reach the {last} stage from a {}", other.kind().name()),
            ))
        }
    };

    let answers = match &args.decisions {
        Some(p) => ScriptFile::parse(&read_text(p)?)?.answers,
        None => BTreeMap::new(),
    };
    let earlier = match &args.replay {
        Some(p) => TranscriptFile::parse(&read_text(p)?)?
            .to_transcript()
            .map_err(Failure::from)?,
        None => DecisionTranscript::default(),
    };
    let mut provider = match args.mode {
        Mode::Strict => replay(&earlier).then(ScriptedProvider::strict(answers)),
        Mode::Lenient => replay(&earlier).then(ScriptedProvider::lenient(answers)),
        Mode::Interactive => replay(&earlier).then(ScriptThenAsk {
            answers,
            next: InteractiveProvider::new(io::stdin().lock(), io::stderr()),
        }),
    };
    let outcome = run_stages(start, last, &mut provider);

    fs::create_dir_all(&args.out_dir)
        .map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", args.out_dir.display())))?;
    let json = args.format.contains(&Format::Json);
    let dot = args.format.contains(&Format::Dot);
    for a in run_artifacts(&outcome, dot)? {
        let is_json = a.name.ends_with(".json");
        if is_json && !json && !a.name.starts_with("transcript.") {
            continue;
        }
        write_text(&args.out_dir.join(&a.name), &a.contents)?;
    }

    if let Some(e) = &outcome.failure {
        let code = match e.kind() {
            FailureKind::Validation => EXIT_VALIDATION,
            FailureKind::Pending => EXIT_PENDING,
            FailureKind::Internal => EXIT_INTERNAL,
        };
        return Err(Failure::new(code, e.to_string()));
    }
    if let Some(r) = &outcome.pending {
        print!("{}", to_canonical_json(r)?);
        let stage = match r.stage() {
            Some(Stage::Emm) => StageName::Emm,
            _ => StageName::Tree,
        };
        return Err(Failure::new(
            EXIT_PENDING,
            format!("{stage} stage: decision {} is pending", r.id),
        ));
    }
    Ok(())
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => Ok(write_text(p, text)?),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::new(EXIT_IO, e.to_string()))
        }
    }
}

fn tree_of(path: &Path) -> Result<valuetree_core::ValueTree, Failure> {
    match load_map(path)? {
        AnyMap::Tree(t) => Ok(t),
        other => Err(Failure::new(
            EXIT_VALIDATION,
            format!("{}: a {}, not a value tree", path.display(), other.kind().name()),
        )),
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Validate { input } => {
            let map = MapDocument::parse(&read_text(&input)?)?.into_any()?;
            let report = map.validate();
            if report.is_valid() {
                println!("{}: valid {} ({} nodes)", input.display(), map.kind().name(), map.node_count());
                Ok(())
            } else {
                print!("{report}");
                Err(Failure::new(
                    EXIT_VALIDATION,
                    format!("{}: {} violation(s)", input.display(), report.violations.len()),
                ))
            }
        }
        Command::ToVcm(args) => run(StageName::Vcm, args, false),
        Command::ToEmm(args) => run(StageName::Emm, args, false),
        Command::ToTree(args) => run(StageName::Tree, args, false),
        Command::Pipeline(args) => run(StageName::Tree, args, true),
        Command::Compare {
            left,
            right,
            threshold,
            out,
        } => {
            if !(0.0..=1.0).contains(&threshold) {
                return Err(Failure::new(EXIT_VALIDATION, "--threshold must lie in [0, 1]"));
            }
            let report = compare_trees(&tree_of(&left)?, &tree_of(&right)?, threshold);
            write_or_print(out.as_deref(), &to_canonical_json(&report)?)
        }
        Command::ExportDot { input, out } => {
            let map = load_map(&input)?;
            write_or_print(out.as_deref(), &to_dot(&map))
        }
        Command::Serve { port, data_root } => {
            let rt = tokio::runtime::Runtime::new()
                .map_err(|e| Failure::new(EXIT_INTERNAL, e.to_string()))?;
            eprintln!("serving on 127.0.0.1:{port}, sessions in {}", data_root.display());
            rt.block_on(valuetree_service::serve(port, data_root))
                .map_err(|e| Failure::new(EXIT_IO, e.to_string()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let _ = io::stdout().flush();
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
