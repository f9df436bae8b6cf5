mod backend;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use backend::Backend;
use clap::{Parser, Subcommand, ValueEnum};
use deid_api::{AssessRequest, PipelineRequest, Table, TransformRequest};
use deid_client::Client;
use deid_core::pipeline::{render_report, PipelineSpec, ReportFormat, TransformSpec};
use deid_core::synth::SyntheticConfig;
use deid_core::table::Schema;
use deid_service::AppState;

#[derive(Parser)]
#[command(name = "deid", version, about = "Re-identification risk assessment and de-identification of tabular data")]
struct Cli {
    /// Run operations on this deid service instead of locally.
    #[arg(long, global = true, value_name = "URL")]
    server: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Markdown,
}

#[derive(Subcommand)]
enum Command {
    /// Singling-out risk of a set of quasi-identifiers.
    Assess {
        #[arg(long)]
        data: PathBuf,
        /// JSON schema; kinds are inferred when absent.
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Comma-separated attribute names.
        #[arg(long, value_delimiter = ',', required = true)]
        qis: Vec<String>,
        /// Restrict to rows matching `col:op:value,...`.
        #[arg(long)]
        subset: Option<String>,
    },
    /// Apply the steps of a spec and write the result.
    Transform {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the applied steps as JSON.
        #[arg(long)]
        provenance: Option<PathBuf>,
    },
    /// Run a pipeline spec and write its report. Exits 2 when the final
    /// assessment fails the thresholds.
    Pipeline {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Defaults to markdown for `.md` report paths, JSON otherwise.
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Also write the protected data.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic hospital dataset.
    Synth {
        /// JSON generator configuration; defaults apply to missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        /// Mirror datasets and sessions here and restore them on start.
        #[arg(long)]
        state_dir: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn table(data: &Path, schema: Option<&Path>) -> Result<Table> {
    let schema = match schema {
        Some(p) => Some(Schema::from_json_reader(read(p)?.as_bytes()).with_context(|| format!("schema {}", p.display()))?),
        None => None,
    };
    Ok(Table::new(read(data)?).with_schema(schema))
}

fn report_format(format: Option<Format>, path: &Path) -> ReportFormat {
    match format {
        Some(Format::Json) => ReportFormat::Json,
        Some(Format::Markdown) => ReportFormat::Markdown,
        None if path.extension().is_some_and(|e| e == "md") => ReportFormat::Markdown,
        None => ReportFormat::Json,
    }
}

/// Process outcome besides errors: whether thresholds were met.
enum Outcome {
    Pass,
    Fail,
}

async fn serve(addr: &str, state_dir: Option<PathBuf>) -> Result<Outcome> {
    let state = match state_dir {
        Some(dir) => AppState::with_store(&dir).with_context(|| format!("restoring state from {}", dir.display()))?,
        None => AppState::new(),
    };
    let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
    println!("listening on http://{}", listener.local_addr()?);
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    deid_service::serve(listener, state, shutdown).await?;
    Ok(Outcome::Pass)
}

async fn execute(cli: Cli) -> Result<Outcome> {
    let backend = match &cli.server {
        Some(url) => Backend::Remote(Client::new(url)?),
        None => Backend::Local,
    };
    match cli.command {
        Command::Assess { data, schema, qis, subset } => {
            let req = AssessRequest { data: table(&data, schema.as_deref())?, qis, subset };
            let risk = backend.assess(req).await?;
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{}", serde_json::to_string_pretty(&risk)?) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                _ => {}
            }
        }
        Command::Transform { data, schema, spec, out, provenance } => {
            let spec: TransformSpec = serde_json::from_str(&read(&spec)?).with_context(|| format!("spec {}", spec.display()))?;
            let resp = backend.transform(TransformRequest { data: table(&data, schema.as_deref())?, spec }).await?;
            write(&out, &resp.csv)?;
            if let Some(p) = provenance {
                write(&p, &serde_json::to_string_pretty(&resp.provenance)?)?;
            }
            eprintln!("applied {} steps, wrote {}", resp.provenance.entries.len(), out.display());
        }
        Command::Pipeline { data, schema, spec, report, format, out } => {
            let spec = PipelineSpec::from_json(&read(&spec)?).with_context(|| format!("spec {}", spec.display()))?;
            let resp = backend.pipeline(PipelineRequest { data: table(&data, schema.as_deref())?, spec }).await?;
            write(&report, &render_report(&resp.report, report_format(format, &report)))?;
            if let Some(abort) = &resp.report.aborted {
                bail!("step {} ({}) failed: {}; partial report in {}", abort.index, abort.step, abort.error, report.display());
            }
            if let (Some(p), Some(csv)) = (out, &resp.csv) {
                write(&p, csv)?;
            }
            let verdict = resp.report.verdict.as_ref().context("report has no final assessment")?;
            eprintln!(
                "{}: max risk {:.2}%, min k {}, decision {:?}",
                if verdict.passed { "pass" } else { "fail" },
                verdict.max_risk_percent,
                verdict.min_k.map_or("-".to_string(), |k| k.to_string()),
                verdict.decision,
            );
            return Ok(if verdict.passed { Outcome::Pass } else { Outcome::Fail });
        }
        Command::Synth { config, seed, out } => {
            let mut config: SyntheticConfig = match config {
                Some(p) => serde_json::from_str(&read(&p)?).with_context(|| format!("config {}", p.display()))?,
                None => SyntheticConfig::default(),
            };
            if let Some(seed) = seed {
                config.seed = seed;
            }
            write(&out, &backend.synth(config).await?)?;
        }
        Command::Serve { addr, state_dir } => {
            if cli.server.is_some() {
                bail!("--server does not apply to serve");
            }
            return serve(&addr, state_dir).await;
        }
    }
    Ok(Outcome::Pass)
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match execute(cli).await {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
