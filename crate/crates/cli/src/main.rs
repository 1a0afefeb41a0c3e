//! Command-line interface: build the knowledge graphs from a dataset
//! directory, inspect stats, run queries and questions, benchmark, and
//! export.
//!
//! Exit codes: 0 ok, 1 I/O, 2 validation, 64 usage, 70 backend/transport.

mod config;

use std::io::{BufRead, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use soccerkg::builder::{
    build_all, export_cypher, BuildOutput, BuildStats, EntityDictionary, GraphSel, GraphStats,
};
use soccerkg::eval::{
    load_bank, render_accuracy_text, render_bench_text, render_density_text, report_density,
    run_accuracy, run_timing, BaselineFile, QuestionBankEntry,
};
use soccerkg::ingest::{load_dataset, validate_dataset};
use soccerkg::nl::{ask, render_outcome, AskConfig, Backend, HttpTransport, NlEngine};
use soccerkg::query::run_query;
use soccerkg::snapshot::{snapshot_load, snapshot_save};

use config::{load_config, FileConfig, OutputFormat};

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Validation(String),
    Backend(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Backend(_) => 70,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Io(_) => "io",
            CliError::Validation(_) => "validation",
            CliError::Backend(_) => "backend",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Io(m) | CliError::Validation(m) | CliError::Backend(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "soccerkg",
    about = "Knowledge-graph construction and graph-grounded Q&A over structured soccer match data",
    version
)]
struct Cli {
    /// Key-value config file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output format for machine consumption.
    #[arg(long, global = true, value_parser = ["text", "json"])]
    format: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SnapshotArgs {
    /// Directory holding labels.kgf, captions.kgf, entities.json.
    #[arg(long)]
    snapshots: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct BackendArgs {
    /// Translation backend.
    #[arg(long, value_parser = ["rule", "llm"])]
    backend: Option<String>,
    /// Log prompts and raw replies verbatim.
    #[arg(long)]
    trace: bool,
    /// Force all queries onto one graph instead of per-category routing.
    #[arg(long, value_parser = ["labels", "captions"])]
    graph: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a dataset directory and write graph snapshots plus stats.
    Build {
        /// Dataset root laid out as league/season/game/.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Output directory for snapshots (defaults to the data directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print node/edge counts and density per graph.
    Stats {
        #[command(flatten)]
        snapshots: SnapshotArgs,
    },
    /// Run one query against a graph and print the result table.
    Query {
        /// Query text; "-" reads from stdin.
        query: String,
        #[command(flatten)]
        snapshots: SnapshotArgs,
        /// Which graph to query.
        #[arg(long, default_value = "captions", value_parser = ["labels", "captions"])]
        graph: String,
    },
    /// Answer one natural-language question.
    Ask {
        question: String,
        #[command(flatten)]
        snapshots: SnapshotArgs,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Interactive question loop (:quit, :backend, :trace).
    Repl {
        #[command(flatten)]
        snapshots: SnapshotArgs,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Timing comparison over the question bank.
    Bench {
        #[command(flatten)]
        snapshots: SnapshotArgs,
        #[command(flatten)]
        backend: BackendArgs,
        /// Question bank (JSON lines).
        #[arg(long)]
        bank: PathBuf,
        /// Repetitions per question (an extra cold run is discarded).
        #[arg(long, default_value_t = 5)]
        reps: usize,
        /// Baseline latency file for the improvement column.
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Run every bank question instead of the default subset.
        #[arg(long)]
        all: bool,
    },
    /// Repeated-question accuracy over the question bank.
    Accuracy {
        #[command(flatten)]
        snapshots: SnapshotArgs,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(long)]
        bank: PathBuf,
        /// Iterations per question.
        #[arg(long, default_value_t = 5)]
        iterations: usize,
        /// Run every bank question instead of the default subset.
        #[arg(long)]
        all: bool,
    },
    /// Emit openCypher CREATE statements reproducing both graphs.
    ExportCypher {
        #[command(flatten)]
        snapshots: SnapshotArgs,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap handles --help/--version as non-errors
            if err.use_stderr() {
                eprint!("{err}");
                return ExitCode::from(64);
            }
            print!("{err}");
            return ExitCode::SUCCESS;
        }
    };

    let file_config = match &cli.config {
        Some(path) => match load_config(path) {
            Ok(c) => c,
            Err(err) => return fail(&cli, err),
        },
        None => FileConfig::default(),
    };
    let format = match cli
        .format
        .as_deref()
        .or(file_config.output_format.as_deref())
    {
        Some("json") => OutputFormat::Json,
        _ => OutputFormat::Text,
    };

    match run(&cli.command, &file_config, &format) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if format == OutputFormat::Json {
                let body = serde_json::json!({
                    "error": {"kind": err.kind(), "message": err.message()}
                });
                println!("{}", serde_json::to_string_pretty(&body).unwrap());
            } else {
                eprintln!("error: {}", err.message());
            }
            ExitCode::from(err.exit_code())
        }
    }
}

fn fail(cli: &Cli, err: CliError) -> ExitCode {
    if cli.format.as_deref() == Some("json") {
        let body = serde_json::json!({
            "error": {"kind": err.kind(), "message": err.message()}
        });
        println!("{}", serde_json::to_string_pretty(&body).unwrap());
    } else {
        eprintln!("error: {}", err.message());
    }
    ExitCode::from(err.exit_code())
}

fn run(command: &Command, file: &FileConfig, format: &OutputFormat) -> Result<(), CliError> {
    match command {
        Command::Build { data, out } => cmd_build(data.as_deref(), out.as_deref(), file, format),
        Command::Stats { snapshots } => {
            let output = load_snapshots(snapshot_dir(snapshots, file)?)?;
            print_stats(&output, format);
            Ok(())
        }
        Command::Query {
            query,
            snapshots,
            graph,
        } => cmd_query(query, snapshot_dir(snapshots, file)?, graph, format),
        Command::Ask {
            question,
            snapshots,
            backend,
        } => cmd_ask(question, snapshot_dir(snapshots, file)?, backend, file, format),
        Command::Repl { snapshots, backend } => {
            cmd_repl(snapshot_dir(snapshots, file)?, backend, file)
        }
        Command::Bench {
            snapshots,
            backend,
            bank,
            reps,
            baseline,
            all,
        } => cmd_bench(
            snapshot_dir(snapshots, file)?,
            backend,
            file,
            bank,
            *reps,
            baseline.as_deref(),
            *all,
            format,
        ),
        Command::Accuracy {
            snapshots,
            backend,
            bank,
            iterations,
            all,
        } => cmd_accuracy(
            snapshot_dir(snapshots, file)?,
            backend,
            file,
            bank,
            *iterations,
            *all,
            format,
        ),
        Command::ExportCypher { snapshots, out } => {
            let output = load_snapshots(snapshot_dir(snapshots, file)?)?;
            let script = export_cypher(&output);
            match out {
                Some(path) => std::fs::write(path, script)
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
                None => print!("{script}"),
            }
            Ok(())
        }
    }
}

fn snapshot_dir<'a>(args: &'a SnapshotArgs, file: &'a FileConfig) -> Result<&'a Path, CliError> {
    args.snapshots
        .as_deref()
        .or(file.snapshot_dir.as_deref())
        .ok_or_else(|| {
            CliError::Validation("no snapshot directory (use --snapshots or snapshot_dir)".into())
        })
}

fn ask_config(args: &BackendArgs, file: &FileConfig) -> Result<AskConfig, CliError> {
    let backend = match args.backend.as_deref().or(file.backend.as_deref()) {
        None | Some("rule") => Backend::Rule,
        Some("llm") => Backend::Llm,
        Some(other) => return Err(CliError::Validation(format!("unknown backend {other:?}"))),
    };
    let force_graph = match args.graph.as_deref() {
        None => None,
        Some("labels") => Some(GraphSel::Labels),
        Some("captions") => Some(GraphSel::Captions),
        Some(other) => return Err(CliError::Validation(format!("unknown graph {other:?}"))),
    };
    Ok(AskConfig {
        backend,
        llm: Some(file.llm.clone()),
        force_graph,
        trace: args.trace,
    })
}

const LABELS_SNAPSHOT: &str = "labels.kgf";
const CAPTIONS_SNAPSHOT: &str = "captions.kgf";
const ENTITIES_FILE: &str = "entities.json";
const STATS_FILE: &str = "stats.json";

fn cmd_build(
    data: Option<&Path>,
    out: Option<&Path>,
    file: &FileConfig,
    format: &OutputFormat,
) -> Result<(), CliError> {
    let data = data
        .or(file.data_dir.as_deref())
        .ok_or_else(|| CliError::Validation("no data directory (use --data or data_dir)".into()))?;
    let out_dir = out.unwrap_or(data).to_path_buf();

    let dataset = load_dataset(data).map_err(|e| CliError::Validation(format!("ingest: {e}")))?;
    if dataset.games.is_empty() {
        return Err(CliError::Validation(format!(
            "no games found under {}",
            data.display()
        )));
    }
    let report = validate_dataset(&dataset.games, &dataset.events, &dataset.players);
    if !report.is_ok() {
        return Err(CliError::Validation(format!("dataset rejected\n{report}")));
    }
    let output = build_all(&dataset).map_err(|e| CliError::Validation(format!("build: {e}")))?;

    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    let write = |name: &str, bytes: &[u8]| -> Result<(), CliError> {
        let path = out_dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    };
    let mut labels_buf = Vec::new();
    snapshot_save(&output.labels_kg, &mut labels_buf).map_err(|e| CliError::Io(e.to_string()))?;
    write(LABELS_SNAPSHOT, &labels_buf)?;
    let mut captions_buf = Vec::new();
    snapshot_save(&output.captions_kg, &mut captions_buf)
        .map_err(|e| CliError::Io(e.to_string()))?;
    write(CAPTIONS_SNAPSHOT, &captions_buf)?;
    let entities = serde_json::to_string_pretty(&output.entity_dict.to_json()).unwrap();
    write(ENTITIES_FILE, format!("{entities}\n").as_bytes())?;
    let stats = serde_json::to_string_pretty(&output.build_stats).unwrap();
    write(STATS_FILE, format!("{stats}\n").as_bytes())?;

    print_stats(&output, format);
    Ok(())
}

fn load_snapshots(dir: &Path) -> Result<BuildOutput, CliError> {
    let read = |name: &str| -> Result<Vec<u8>, CliError> {
        let path = dir.join(name);
        std::fs::read(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    };
    let labels_kg = snapshot_load(&mut read(LABELS_SNAPSHOT)?.as_slice())
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let captions_kg = snapshot_load(&mut read(CAPTIONS_SNAPSHOT)?.as_slice())
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let entities: serde_json::Value = serde_json::from_slice(&read(ENTITIES_FILE)?)
        .map_err(|e| CliError::Validation(format!("{ENTITIES_FILE}: {e}")))?;
    let entity_dict = EntityDictionary::from_json(&entities)
        .map_err(|e| CliError::Validation(format!("{ENTITIES_FILE}: {e}")))?;
    let build_stats = BuildStats {
        labels: GraphStats::of(&labels_kg),
        captions: GraphStats::of(&captions_kg),
    };
    Ok(BuildOutput {
        labels_kg,
        captions_kg,
        entity_dict,
        build_stats,
    })
}

fn print_stats(output: &BuildOutput, format: &OutputFormat) {
    match format {
        OutputFormat::Json => {
            let body = serde_json::json!({
                "stats": output.build_stats,
                "density": report_density(output),
            });
            println!("{}", serde_json::to_string_pretty(&body).unwrap());
        }
        OutputFormat::Text => {
            for (name, stats) in [
                ("labels_kg", &output.build_stats.labels),
                ("captions_kg", &output.build_stats.captions),
            ] {
                println!("{name}: {} nodes, {} edges", stats.nodes, stats.edges);
                for (label, count) in &stats.node_labels {
                    println!("  node {label:<12} {count}");
                }
                for (etype, count) in &stats.edge_types {
                    println!("  edge {etype:<18} {count}");
                }
            }
            print!("{}", render_density_text(&report_density(output)));
        }
    }
}

fn cmd_query(
    query: &str,
    snapshots: &Path,
    graph: &str,
    format: &OutputFormat,
) -> Result<(), CliError> {
    let output = load_snapshots(snapshots)?;
    let text = if query == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .lock()
            .read_to_string(&mut buf)
            .map_err(|e| CliError::Io(e.to_string()))?;
        buf
    } else {
        query.to_string()
    };
    let g = match graph {
        "labels" => &output.labels_kg,
        _ => &output.captions_kg,
    };
    let table = run_query(g, text.trim()).map_err(|e| CliError::Validation(e.to_string()))?;
    match format {
        OutputFormat::Json => println!("{}", serde_json::to_string_pretty(&table).unwrap()),
        OutputFormat::Text => print!("{table}"),
    }
    Ok(())
}

fn cmd_ask(
    question: &str,
    snapshots: &Path,
    backend: &BackendArgs,
    file: &FileConfig,
    format: &OutputFormat,
) -> Result<(), CliError> {
    let output = load_snapshots(snapshots)?;
    let config = ask_config(backend, file)?;
    let outcome = ask(question, &output, &config);
    match format {
        OutputFormat::Json => println!("{}", serde_json::to_string_pretty(&outcome).unwrap()),
        OutputFormat::Text => print!("{}", render_outcome(&outcome)),
    }
    if let Some(err) = &outcome.error {
        return Err(CliError::Backend(err.clone()));
    }
    Ok(())
}

fn cmd_repl(snapshots: &Path, backend: &BackendArgs, file: &FileConfig) -> Result<(), CliError> {
    let output = load_snapshots(snapshots)?;
    let engine = NlEngine::new(&output);
    let mut config = ask_config(backend, file)?;
    let transport = HttpTransport::new(file.llm.clone());

    let stdin = std::io::stdin();
    let mut stdout = std::io::stdout();
    print!("soccerkg> ");
    let _ = stdout.flush();
    for line in stdin.lock().lines() {
        let line = line.map_err(|e| CliError::Io(e.to_string()))?;
        let line = line.trim();
        if line.is_empty() {
            print!("soccerkg> ");
            let _ = stdout.flush();
            continue;
        }
        if let Some(meta) = line.strip_prefix(':') {
            let mut parts = meta.split_whitespace();
            match (parts.next(), parts.next()) {
                (Some("quit"), _) | (Some("q"), _) => return Ok(()),
                (Some("backend"), Some("rule")) => {
                    config.backend = Backend::Rule;
                    println!("backend: rule");
                }
                (Some("backend"), Some("llm")) => {
                    config.backend = Backend::Llm;
                    println!("backend: llm");
                }
                (Some("trace"), Some("on")) => {
                    config.trace = true;
                    println!("trace: on");
                }
                (Some("trace"), Some("off")) => {
                    config.trace = false;
                    println!("trace: off");
                }
                _ => println!("usage: :quit | :backend rule|llm | :trace on|off"),
            }
            print!("soccerkg> ");
            let _ = stdout.flush();
            continue;
        }
        let transport_ref: Option<&dyn soccerkg::nl::ChatTransport> = match config.backend {
            Backend::Rule => None,
            Backend::Llm => Some(&transport),
        };
        let outcome = engine.ask(line, &config, transport_ref);
        print!("{}", render_outcome(&outcome));
        print!("soccerkg> ");
        let _ = stdout.flush();
    }
    Ok(())
}

fn load_bank_file(path: &Path, all: bool) -> Result<Vec<QuestionBankEntry>, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let bank = load_bank(std::io::BufReader::new(file))
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let has_subset = bank.iter().any(|e| e.default_subset);
    Ok(if all || !has_subset {
        bank
    } else {
        bank.into_iter().filter(|e| e.default_subset).collect()
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    snapshots: &Path,
    backend: &BackendArgs,
    file: &FileConfig,
    bank_path: &Path,
    reps: usize,
    baseline: Option<&Path>,
    all: bool,
    format: &OutputFormat,
) -> Result<(), CliError> {
    if reps < 3 {
        return Err(CliError::Validation("--reps must be at least 3".into()));
    }
    let output = load_snapshots(snapshots)?;
    let config = ask_config(backend, file)?;
    let bank = load_bank_file(bank_path, all)?;
    let baseline = match baseline {
        Some(path) => {
            let bytes = std::fs::read(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            Some(BaselineFile::parse(&bytes).map_err(|e| CliError::Validation(e.to_string()))?)
        }
        None => None,
    };
    let transport = HttpTransport::new(file.llm.clone());
    let transport_ref: Option<&dyn soccerkg::nl::ChatTransport> = match config.backend {
        Backend::Rule => None,
        Backend::Llm => Some(&transport),
    };
    let report = run_timing(&bank, reps, baseline.as_ref(), &output, &config, transport_ref)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    match format {
        OutputFormat::Json => println!("{}", serde_json::to_string_pretty(&report).unwrap()),
        OutputFormat::Text => print!("{}", render_bench_text(&report)),
    }
    Ok(())
}

fn cmd_accuracy(
    snapshots: &Path,
    backend: &BackendArgs,
    file: &FileConfig,
    bank_path: &Path,
    iterations: usize,
    all: bool,
    format: &OutputFormat,
) -> Result<(), CliError> {
    if iterations < 1 {
        return Err(CliError::Validation("--iterations must be at least 1".into()));
    }
    let output = load_snapshots(snapshots)?;
    let config = ask_config(backend, file)?;
    let bank = load_bank_file(bank_path, all)?;
    let transport = HttpTransport::new(file.llm.clone());
    let transport_ref: Option<&dyn soccerkg::nl::ChatTransport> = match config.backend {
        Backend::Rule => None,
        Backend::Llm => Some(&transport),
    };
    let report = run_accuracy(&bank, iterations, &output, &config, transport_ref);
    match format {
        OutputFormat::Json => println!("{}", serde_json::to_string_pretty(&report).unwrap()),
        OutputFormat::Text => print!("{}", render_accuracy_text(&report)),
    }
    Ok(())
}
