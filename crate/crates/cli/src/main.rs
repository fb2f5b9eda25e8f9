use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use branchbook_core::session::{parse_event_lines, Event, SessionDocument};
use branchbook_core::{Config, Engine, QuestionKind, RootSelector, Session};
use branchbook_server::AppState;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "branchbook", version, about = "Mine insights from a CSV and explore them as a branching notebook")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine the insight space of a CSV and write it as JSON.
    Mine {
        csv: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the question panel for one insight.
    Recommend {
        csv: PathBuf,
        /// Insight id, or a query such as `extremum:Year,Horsepower:lowest`.
        #[arg(long)]
        insight: String,
        /// Panel size; defaults to the config's value.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Numbered plain text instead of JSON.
        #[arg(long)]
        text: bool,
    },
    /// Replay an event script (an exported session, `{"eventLog": [...]}`,
    /// or one event record per line) and write the resulting session.
    Replay {
        script: PathBuf,
        /// The CSV the script was recorded against.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Session export file; standard output when neither output is given.
        #[arg(long)]
        export: Option<PathBuf>,
        /// Analysis tree in DOT format.
        #[arg(long)]
        tree_dot: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Persist datasets and session logs here and replay them on start.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Serve the UI bundle from this directory.
        #[arg(long)]
        static_dir: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// CSV files to load before accepting requests.
        #[arg(long = "load")]
        load: Vec<PathBuf>,
    },
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => Config::from_file(p).with_context(|| format!("reading config {}", p.display())),
        None => Ok(Config::default()),
    }
}

fn table_name(csv: &Path) -> String {
    csv.file_stem().map_or_else(|| "data".to_string(), |s| s.to_string_lossy().into_owned())
}

fn load_engine(csv: &Path, config: Option<&Path>) -> Result<Engine> {
    let config = load_config(config)?;
    let bytes = fs::read(csv).with_context(|| format!("reading {}", csv.display()))?;
    let engine = Engine::from_csv(&bytes, &table_name(csv), config).with_context(|| format!("loading {}", csv.display()))?;
    Ok(engine)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn mine(csv: &Path, config: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let engine = load_engine(csv, config)?;
    eprintln!("{} insights from {} rows", engine.space().len(), engine.table().row_count);
    write_output(out, &engine.space().to_canonical_json())
}

fn recommend(csv: &Path, insight: &str, k: Option<usize>, config: Option<&Path>, text: bool) -> Result<()> {
    let engine = load_engine(csv, config)?;
    let selector = RootSelector::parse(insight).with_context(|| format!("cannot read insight selector '{insight}'"))?;
    let source = RootSelector::resolve(Some(&selector), engine.space())?;
    let panel = engine.recommend(source, k.unwrap_or(engine.config().recommender.k));
    if !text {
        return write_output(None, &(serde_json::to_string_pretty(&panel)? + "\n"));
    }
    let mut out = format!("{}\n", source.text);
    for (i, q) in panel.iter().enumerate() {
        let kind = match q.kind {
            QuestionKind::LogicallyRelated => "logical",
            QuestionKind::AttributeRelated => "attribute",
        };
        out.push_str(&format!("{}. [{kind}] {}\n", i + 1, q.text));
        for a in &q.answers {
            out.push_str(&format!("   - {}\n", a.action_text));
        }
    }
    write_output(None, &out)
}

#[derive(serde::Deserialize)]
#[serde(rename_all = "camelCase")]
struct BareLog {
    event_log: Vec<Event>,
}

fn read_script(engine: &Engine, text: &str) -> Result<Session> {
    let value: Option<serde_json::Value> = serde_json::from_str(text).ok();
    let session = match value {
        Some(v) if v.get("meta").is_some() => {
            let doc: SessionDocument = serde_json::from_value(v).context("reading session document")?;
            Session::import(engine, &doc)?
        }
        Some(v) if v.get("eventLog").is_some() => {
            let log: BareLog = serde_json::from_value(v).context("reading event log")?;
            Session::replay(engine, &log.event_log)?
        }
        Some(_) => bail!("script has neither `meta` nor `eventLog`"),
        None => Session::replay(engine, &parse_event_lines(text)?)?,
    };
    Ok(session)
}

fn replay(script: &Path, data: &Path, config: Option<&Path>, export: Option<&Path>, tree_dot: Option<&Path>) -> Result<()> {
    let engine = load_engine(data, config)?;
    let text = fs::read_to_string(script).with_context(|| format!("reading {}", script.display()))?;
    let session = read_script(&engine, &text)?;
    eprintln!("{} events, {} cells", session.events().len(), session.cells().len());
    if let Some(p) = tree_dot {
        write_output(Some(p), &session.tree().to_dot())?;
    }
    if export.is_some() || tree_dot.is_none() {
        write_output(export, &session.export_json())?;
    }
    Ok(())
}

fn serve(
    addr: SocketAddr,
    data_dir: Option<PathBuf>,
    static_dir: Option<PathBuf>,
    config: Option<&Path>,
    load: &[PathBuf],
) -> Result<()> {
    let config = load_config(config)?;
    let state = match &data_dir {
        Some(dir) => AppState::open(config, dir).with_context(|| format!("opening {}", dir.display()))?,
        None => AppState::new(config),
    };
    for csv in load {
        let bytes = fs::read(csv).with_context(|| format!("reading {}", csv.display()))?;
        let (id, _) = state
            .add_dataset(&table_name(csv), &bytes)
            .map_err(|e| anyhow::anyhow!("{}: {}", csv.display(), e.message))?;
        eprintln!("loaded {} as {id}", csv.display());
    }
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(branchbook_server::serve(state, static_dir, addr))?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Mine { csv, config, out } => mine(&csv, config.as_deref(), out.as_deref()),
        Command::Recommend { csv, insight, k, config, text } => recommend(&csv, &insight, k, config.as_deref(), text),
        Command::Replay { script, data, config, export, tree_dot } => {
            replay(&script, &data, config.as_deref(), export.as_deref(), tree_dot.as_deref())
        }
        Command::Serve { port, host, data_dir, static_dir, config, load } => {
            serve(SocketAddr::new(host, port), data_dir, static_dir, config.as_deref(), &load)
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_ansi(std::io::IsTerminal::is_terminal(&std::io::stderr()))
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
