use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use malgebra::eval::{self, GradeMode, Transcript};
use malgebra::forge::{self, DatasetConfig};
use malgebra::malrules::{catalog, BINDINGS};
use malgebra::space::enumerate;
use malgebra::{
    classify, reduce, reduce_with_misconceptions, Edge, Equation, Error, Form, MisconceptionId,
    MisconceptionSet, ProblemType, Rational, ReductionTrace, TypeGraph,
};
use serde_json::json;

/// Misconception-aware solver for one-variable linear equations.
#[derive(Debug, Parser)]
#[command(name = "malgebra", version, about, propagate_version = true)]
struct Cli {
    /// Print the resolved configuration to stderr before running.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the problem type of an equation.
    Classify {
        equation: String,
    },
    /// Solve with correct steps only.
    Solve {
        equation: String,
        /// Print one `<type> | <equation> | <rule>` line per step.
        #[arg(long)]
        trace: bool,
    },
    /// Solve, letting the listed misconceptions replace correct steps.
    Malsolve {
        equation: String,
        /// Comma-separated ids in priority order, e.g. `M2_S3,M19`.
        #[arg(long, short)]
        misconceptions: MisconceptionSet,
        #[arg(long)]
        trace: bool,
    },
    /// Enumerate every correct and misconception path.
    Tree {
        equation: String,
        #[arg(long, short, default_value = "")]
        misconceptions: MisconceptionSet,
        /// Most misconceptions allowed on one path.
        #[arg(long, default_value_t = 1)]
        cap: usize,
        #[arg(long, value_enum, default_value_t = TreeFormat::Json)]
        format: TreeFormat,
    },
    /// Print the misconception catalog.
    Catalog {
        #[arg(long, value_enum, default_value_t = Report::Text)]
        format: Report,
    },
    /// Generate a dataset: train.jsonl, test.jsonl and manifest.json.
    Gen {
        /// TOML file with dataset settings; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        n_correct_per_type: Option<usize>,
        #[arg(long)]
        n_m: Option<usize>,
        /// n_c / n_m: one of 0, 0.25, 0.5, 1.0.
        #[arg(long)]
        ratio: Option<f64>,
        #[arg(long)]
        test_per_type: Option<usize>,
        #[arg(long)]
        misconception: Option<MisconceptionId>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay every record of a dataset file or directory.
    Verify {
        path: PathBuf,
    },
    /// Explain erroneous transcripts by misconception.
    Diagnose {
        /// JSON-lines transcripts.
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Report::Json)]
        report: Report,
    },
    /// Compute MA, CA_A, CA_NA, OCA and the student-model verdict.
    Score {
        /// JSON-lines transcripts.
        file: PathBuf,
        #[arg(long)]
        misconception: MisconceptionId,
        #[arg(long, value_enum, default_value_t = Mode::Answer)]
        mode: Mode,
        #[arg(long, default_value = "90")]
        theta_m: Rational,
        #[arg(long, default_value = "90")]
        theta_c: Rational,
        #[arg(long, value_enum, default_value_t = Report::Text)]
        report: Report,
    },
    /// Print the type graph as one record per edge.
    DumpGraph,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TreeFormat {
    Json,
    Dot,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Report {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Answer,
    Steps,
}

#[derive(Debug, thiserror::Error)]
enum Failure {
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Empty(String),
    /// Already reported on stdout; only the exit code is left.
    #[error("")]
    Silent(u8),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Empty(_) => 3,
            Failure::Silent(code) => *code,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let message = e.to_string();
        match e {
            Error::EmptyBatch => Failure::Empty(message),
            Error::Parse(_)
            | Error::Schema { .. }
            | Error::Json(_)
            | Error::Io(_)
            | Error::InvalidRatio(_)
            | Error::InvalidRange(..)
            | Error::InvalidConfig(_) => Failure::Usage(message),
            _ => Failure::Domain(message),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn parse_equation(text: &str) -> CliResult<Equation> {
    text.parse().map_err(|e| Failure::from(Error::Parse(e)))
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn answer_line(trace: &ReductionTrace) -> String {
    let last = trace.steps.last().expect("traces are non-empty");
    match &last.form {
        Form::Solved(_) | Form::Typed(_) => last.equation.to_string(),
        Form::NoSolution => format!("{} (no solution)", last.equation),
        Form::Identity => format!("{} (all values)", last.equation),
    }
}

fn print_trace(trace: &ReductionTrace, with_steps: bool) {
    if with_steps {
        for step in &trace.steps {
            let Some(edge) = step.edge else { continue };
            let label = match edge {
                Edge::Misconception(id) => format!("{id} [misconception]"),
                other => other.to_string(),
            };
            println!("{} | {} | {label}", step.form, step.equation);
        }
    }
    println!("{}", answer_line(trace));
}

/// Large outputs are often piped into `head`; a closed pipe is not an error.
fn print_json(value: &serde_json::Value) {
    let text = serde_json::to_string_pretty(value).expect("json values serialize");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn resolve_gen_config(command: &Command) -> CliResult<DatasetConfig> {
    let Command::Gen {
        config,
        n_correct_per_type,
        n_m,
        ratio,
        test_per_type,
        misconception,
        seed,
        out,
    } = command
    else {
        unreachable!("called for gen only");
    };
    let mut resolved = match config {
        Some(path) => toml::from_str(&read(path)?)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
        None => DatasetConfig::default(),
    };
    if let Some(v) = n_correct_per_type {
        resolved.n_correct_per_type = *v;
    }
    if let Some(v) = n_m {
        resolved.n_m = *v;
    }
    if let Some(v) = ratio {
        resolved.ratio = *v;
    }
    if let Some(v) = test_per_type {
        resolved.test_per_type = *v;
    }
    if let Some(v) = misconception {
        resolved.misconception = Some(*v);
    }
    if let Some(v) = seed {
        resolved.seed = *v;
    }
    if let Some(v) = out {
        resolved.out = v.clone();
    }
    Ok(resolved)
}

fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Classify { equation } => {
            println!("{}", classify(&parse_equation(equation)?)?);
        }
        Command::Solve { equation, trace } => {
            print_trace(&reduce(&parse_equation(equation)?)?, *trace);
        }
        Command::Malsolve {
            equation,
            misconceptions,
            trace,
        } => {
            let result = reduce_with_misconceptions(&parse_equation(equation)?, misconceptions)?;
            print_trace(&result, *trace);
        }
        Command::Tree {
            equation,
            misconceptions,
            cap,
            format,
        } => {
            let tree = enumerate(&parse_equation(equation)?, misconceptions, *cap)?;
            match format {
                TreeFormat::Json => print_json(&tree.to_json()),
                TreeFormat::Dot => print!("{}", tree.to_dot()),
            }
        }
        Command::Catalog { format } => print_catalog(*format),
        command @ Command::Gen { .. } => {
            let config = resolve_gen_config(command)?;
            if cli.verbose {
                eprintln!(
                    "config: {} out={}",
                    serde_json::to_string(&config).expect("config serializes"),
                    config.out.display()
                );
            }
            let manifest = forge::generate(&config)?;
            let test_lines = manifest.files[forge::TEST_FILE].lines;
            println!(
                "wrote {} train records ({} misconception, {} correct) and {test_lines} test records to {}",
                manifest.n_misconception + manifest.n_correct,
                manifest.n_misconception,
                manifest.n_correct,
                config.out.display()
            );
            println!("digest {}", manifest.digest);
        }
        Command::Verify { path } => {
            if !path.exists() {
                return Err(Failure::Usage(format!("{}: no such file", path.display())));
            }
            let report = forge::verify_path(path)?;
            println!(
                "checked {} records: {} passed, {} failed, {} schema errors",
                report.total,
                report.passed,
                report.failures.len(),
                report.schema_errors.len()
            );
            for (line, message) in &report.schema_errors {
                println!("line {line}: schema: {message}");
            }
            for (line, message) in &report.failures {
                println!("line {line}: {message}");
            }
            if !report.schema_errors.is_empty() {
                return Err(Failure::Silent(2));
            }
            if !report.failures.is_empty() {
                return Err(Failure::Silent(1));
            }
        }
        Command::Diagnose { file, report } => {
            let transcripts = eval::read_transcripts(&read(file)?)?;
            if transcripts.is_empty() {
                return Err(Error::EmptyBatch.into());
            }
            print_diagnoses(&transcripts, *report);
        }
        Command::Score {
            file,
            misconception,
            mode,
            theta_m,
            theta_c,
            report,
        } => {
            let transcripts = eval::read_transcripts(&read(file)?)?;
            let mode = match mode {
                Mode::Answer => GradeMode::AnswerOnly,
                Mode::Steps => GradeMode::StrictSteps,
            };
            if cli.verbose {
                eprintln!(
                    "config: misconception={misconception} mode={mode:?} theta_m={theta_m} theta_c={theta_c}"
                );
            }
            let metrics = eval::score(&transcripts, *misconception, mode, theta_m, theta_c)?;
            match report {
                Report::Json => print_json(&metrics.to_json()),
                Report::Text => print!("{}", metrics.to_text()),
            }
        }
        Command::DumpGraph => {
            let graph = TypeGraph::new();
            let nodes: Vec<serde_json::Value> = ProblemType::ALL
                .iter()
                .map(|t| json!({ "id": t.label(), "template": t.template() }))
                .collect();
            print_json(&json!({ "nodes": nodes, "edges": graph.edge_records() }));
        }
    }
    Ok(())
}

fn print_catalog(format: Report) {
    match format {
        Report::Text => {
            println!("{:<8} {:<36} {:<22} description", "id", "expression", "types");
            for m in catalog() {
                let types = if m.applicable_types.len() == ProblemType::ALL.len() {
                    "all".to_string()
                } else {
                    let labels: Vec<&str> = m.applicable_types.iter().map(|t| t.label()).collect();
                    labels.join(",")
                };
                println!("{:<8} {:<36} {:<22} {}", m.id, m.expression, types, m.description);
            }
        }
        Report::Json => {
            let rows: Vec<serde_json::Value> = catalog()
                .iter()
                .map(|m| {
                    let bindings: Vec<serde_json::Value> = BINDINGS
                        .iter()
                        .filter(|(id, _, _)| *id == m.id)
                        .map(|(_, t, rule)| json!({ "type": t.label(), "rewrite": rule }))
                        .collect();
                    json!({
                        "id": m.id,
                        "expression": m.expression,
                        "applicable_types": m.applicable_types.iter().map(|t| t.label()).collect::<Vec<_>>(),
                        "description": m.description,
                        "bindings": bindings,
                    })
                })
                .collect();
            print_json(&serde_json::Value::Array(rows));
        }
    }
}

fn print_diagnoses(transcripts: &[Transcript], report: Report) {
    let results: Vec<_> = transcripts.iter().map(eval::diagnose).collect();
    match report {
        Report::Json => {
            let rows: Vec<serde_json::Value> = transcripts
                .iter()
                .zip(&results)
                .enumerate()
                .map(|(i, (t, d))| {
                    json!({
                        "index": i,
                        "equation": t.equation,
                        "matches": d.matches,
                        "note": d.note,
                    })
                })
                .collect();
            print_json(&serde_json::Value::Array(rows));
        }
        Report::Text => {
            for (i, (t, d)) in transcripts.iter().zip(&results).enumerate() {
                let found: Vec<String> = d
                    .matches
                    .iter()
                    .map(|m| {
                        let ids: Vec<&str> = m.misconceptions.iter().map(|id| id.as_str()).collect();
                        match m.quality {
                            eval::MatchQuality::Full => format!("{} (full)", ids.join("+")),
                            eval::MatchQuality::Prefix { matched } => {
                                format!("{} (first {matched} steps)", ids.join("+"))
                            }
                        }
                    })
                    .collect();
                let summary = match (&d.note, found.is_empty()) {
                    (Some(note), _) => note.clone(),
                    (None, true) => "correct".to_string(),
                    (None, false) => found.join(", "),
                };
                println!("{i} | {} | {summary}", t.equation);
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.verbose {
        eprintln!("{cli:?}");
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            if !matches!(failure, Failure::Silent(_)) {
                eprintln!("error: {failure}");
            }
            ExitCode::from(failure.code())
        }
    }
}
