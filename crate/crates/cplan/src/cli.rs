use std::fs;
use std::io::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cplan_core::mcdm::{fit_capacity, rank_alternatives, Capacity, EvaluationTable};
use cplan_core::store::{load_dir, SystemConfig};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{ApiError, ErrorCode};
use crate::http::{router, AppState};
use crate::replay::{self, cases_from_json};
use crate::service::{lookup, parse_situation, Indicators, Lookup, Service};

pub const DEFAULT_DATA_DIR: &str = "cplan-data";
pub const DEFAULT_LISTEN: &str = "127.0.0.1:8642";

#[derive(Debug, Parser)]
#[command(name = "cplan", version, about = "Control-plan decision support")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct DataDir {
    /// Directory holding cases, catalog, config and sessions.
    #[arg(long, global = true, env = "CPLAN_DATA_DIR", default_value = DEFAULT_DATA_DIR)]
    pub data_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP API.
    Serve {
        #[command(flatten)]
        data: DataDir,
        #[arg(long, env = "CPLAN_LISTEN", default_value = DEFAULT_LISTEN)]
        listen: SocketAddr,
        /// Require `Authorization: Bearer <token>` on every route but /api/health.
        #[arg(long, env = "CPLAN_TOKEN", hide_env_values = true)]
        token: Option<String>,
    },
    /// Look up the closest satisfactory case for a situation.
    Recommend {
        #[command(flatten)]
        data: DataDir,
        #[arg(long, allow_hyphen_values = true)]
        cp: f64,
        #[arg(long, allow_hyphen_values = true)]
        cpk: f64,
        #[arg(long, allow_hyphen_values = true)]
        ncr: f64,
        #[arg(long, allow_hyphen_values = true)]
        encr: f64,
        /// Override the configured threshold for this lookup.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Score and rank an evaluation table with a capacity.
    Evaluate {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        capacity: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Fit a capacity that reproduces target scores for a table.
    Fit {
        #[arg(long)]
        table: PathBuf,
        /// One target score per table row, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        targets: Vec<f64>,
        /// Write the capacity here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inspect or extend the case base.
    Case {
        #[command(flatten)]
        data: DataDir,
        #[command(subcommand)]
        action: CaseAction,
    },
    /// Read or change retrieval and consistency settings.
    Config {
        #[command(flatten)]
        data: DataDir,
        #[command(subcommand)]
        action: ConfigAction,
    },
    /// Run a scripted sequence of session operations.
    Replay {
        script: PathBuf,
        /// Run against this directory instead of a fresh temporary one.
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum CaseAction {
    List,
    /// Add cases from a JSON file (an array, or an exported `cases.json`).
    Import {
        file: PathBuf,
    },
    /// Print all cases as a JSON array.
    Export {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ConfigAction {
    /// Print the whole config, or one key.
    Get { key: Option<String> },
    /// Set one key, e.g. `threshold 8` or `attribute_weights 1,1,0.5,0.5`.
    Set { key: String, value: String },
}

pub fn main(cli: Cli) -> ExitCode {
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::to_string(&e).unwrap_or_else(|_| e.to_string())
            );
            ExitCode::FAILURE
        }
    }
}

pub fn run(cli: Cli) -> Result<ExitCode, ApiError> {
    match cli.command {
        Command::Serve {
            data,
            listen,
            token,
        } => serve(data.data_dir, listen, token),
        Command::Recommend {
            data,
            cp,
            cpk,
            ncr,
            encr,
            threshold,
            json,
        } => {
            let situation = parse_situation(Indicators { cp, cpk, ncr, encr })?;
            let state = load_dir(&data.data_dir)?.state;
            let found = lookup(&state, &situation, threshold)?;
            if json {
                print_json(&found)?;
            } else {
                println!("{}", describe_lookup(&found));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate {
            table,
            capacity,
            json,
        } => {
            let table: EvaluationTable = read_json(&table)?;
            let capacity: Capacity = read_json(&capacity)?;
            let ranked = rank_alternatives(&table, &capacity)?;
            if json {
                print_json(&ranked)?;
            } else {
                let criteria = table.criteria().ids();
                let mut header = format!("{:<5} {:<12} {:>8}", "rank", "alternative", "score");
                for c in criteria {
                    header.push_str(&format!(" {c:>8}"));
                }
                println!("{header}");
                // Table order, so the rank column reads against the input rows.
                for (alt, row) in table.alternatives().iter().zip(table.rows()) {
                    let Some(r) = ranked.iter().find(|r| &r.alternative == alt) else {
                        continue;
                    };
                    let mut line = format!("{:<5} {:<12} {:>8.4}", r.rank, r.alternative, r.score);
                    for v in row {
                        line.push_str(&format!(" {v:>8.3}"));
                    }
                    println!("{line}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Fit {
            table,
            targets,
            out,
        } => {
            let table: EvaluationTable = read_json(&table)?;
            let fit = fit_capacity(&table, &targets)?;
            let text = serde_json::to_string_pretty(&fit.capacity)?;
            match out {
                Some(path) => write_file(&path, &text)?,
                None => println!("{text}"),
            }
            eprintln!("max deviation {:.6}", fit.max_deviation);
            for ((alt, score), target) in table.alternatives().iter().zip(&fit.scores).zip(&targets)
            {
                eprintln!("{alt:<12} {score:.4} (target {target})");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Case { data, action } => match action {
            CaseAction::List => {
                let state = load_dir(&data.data_dir)?.state;
                println!(
                    "{:<5} {:<5} {:<11} {:<10} {:>6} {:>6} {:>8} {:>8}",
                    "id", "scen", "status", "origin", "cp", "cpk", "ncr", "encr"
                );
                for c in state.cases.cases() {
                    let s = &c.situation;
                    println!(
                        "{:<5} {:<5} {:<11} {:<10} {:>6} {:>6} {:>8} {:>8}",
                        c.id.to_string(),
                        c.scenario_id.as_str(),
                        format!("{:?}", c.status),
                        format!("{:?}", c.origin),
                        s.cp,
                        s.cpk,
                        s.ncr,
                        s.encr
                    );
                }
                Ok(ExitCode::SUCCESS)
            }
            CaseAction::Import { file } => {
                let cases = cases_from_json(read_json(&file)?)?;
                let (mut service, _) = open_service(&data.data_dir)?;
                let ids = service.import_cases(cases)?;
                print_json(&serde_json::json!({ "case_ids": ids }))?;
                Ok(ExitCode::SUCCESS)
            }
            CaseAction::Export { out } => {
                let state = load_dir(&data.data_dir)?.state;
                let text = serde_json::to_string_pretty(state.cases.cases())?;
                match out {
                    Some(path) => write_file(&path, &text)?,
                    None => println!("{text}"),
                }
                Ok(ExitCode::SUCCESS)
            }
        },
        Command::Config { data, action } => match action {
            ConfigAction::Get { key } => {
                let config = serde_json::to_value(load_dir(&data.data_dir)?.state.config)?;
                match key {
                    None => print_json(&config)?,
                    Some(key) => {
                        let path = config_path(&key);
                        let v = config.pointer(&path).ok_or_else(|| unknown_key(&key))?;
                        print_json(v)?;
                    }
                }
                Ok(ExitCode::SUCCESS)
            }
            ConfigAction::Set { key, value } => {
                let (mut service, _) = open_service(&data.data_dir)?;
                let mut config = serde_json::to_value(service.config())?;
                let slot = config
                    .pointer_mut(&config_path(&key))
                    .ok_or_else(|| unknown_key(&key))?;
                *slot = parse_value(&value);
                let config: SystemConfig = serde_json::from_value(config)?;
                print_json(&service.set_config(config)?)?;
                Ok(ExitCode::SUCCESS)
            }
        },
        Command::Replay { script, data_dir } => {
            let scratch;
            let dir = match data_dir {
                Some(d) => d,
                None => {
                    scratch = tempfile::tempdir()
                        .map_err(|e| internal(format!("temporary directory: {e}")))?;
                    scratch.path().to_path_buf()
                }
            };
            let (mut service, _) = Service::open(dir)?;
            let report = replay::run_file(&mut service, &script)?;
            let mut stdout = std::io::stdout().lock();
            for step in &report.steps {
                let _ = writeln!(stdout, "{}", step.render());
            }
            let _ = writeln!(
                stdout,
                "{} steps, {} failed",
                report.steps.len(),
                report.failures()
            );
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn serve(dir: PathBuf, listen: SocketAddr, token: Option<String>) -> Result<ExitCode, ApiError> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    let (service, _) = open_service(&dir)?;
    let app = router(AppState::new(service, token));
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| internal(e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(listen)
            .await
            .map_err(|e| internal(format!("cannot listen on {listen}: {e}")))?;
        tracing::info!(%listen, dir = %dir.display(), "serving");
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
                tracing::info!("shutting down");
            })
            .await
            .map_err(|e| internal(e.to_string()))
    })?;
    Ok(ExitCode::SUCCESS)
}

fn open_service(dir: &Path) -> Result<(Service, Vec<PathBuf>), ApiError> {
    let (service, leftovers) = Service::open(dir)?;
    for path in &leftovers {
        tracing::warn!(path = %path.display(), "ignoring leftover temporary file");
        eprintln!(
            "warning: ignoring leftover temporary file {}",
            path.display()
        );
    }
    Ok((service, leftovers))
}

fn describe_lookup(found: &Lookup) -> String {
    match (&found.recommendation, found.nearest) {
        (Some(r), _) => format!(
            "recommended {} (source case {}, distance {}, threshold {})",
            r.scenario_id, r.source_case, r.distance, found.threshold
        ),
        (None, Some((case, d))) => format!(
            "no similar case (nearest is case {case} at distance {d}, threshold {})",
            found.threshold
        ),
        (None, None) => format!(
            "no similar case (no satisfactory cases, threshold {})",
            found.threshold
        ),
    }
}

/// Dotted key to a JSON pointer; bare retrieval keys need no prefix.
fn config_path(key: &str) -> String {
    let key = match key {
        "threshold" | "order_p" | "attribute_weights" | "repair_margin" => {
            format!("retrieval.{key}")
        }
        other => other.to_string(),
    };
    format!("/{}", key.replace('.', "/"))
}

fn unknown_key(key: &str) -> ApiError {
    ApiError::field(key, "unknown config key")
}

/// JSON if it parses, a number list if comma separated, otherwise a string.
fn parse_value(raw: &str) -> Value {
    if let Ok(v) = serde_json::from_str(raw) {
        return v;
    }
    if raw.contains(',') {
        let parts: Option<Vec<Value>> = raw
            .split(',')
            .map(|p| serde_json::from_str(p.trim()).ok())
            .collect();
        if let Some(parts) = parts {
            return Value::Array(parts);
        }
    }
    Value::String(raw.to_string())
}

fn internal(message: String) -> ApiError {
    ApiError::new(ErrorCode::Internal, message)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, ApiError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ApiError::validation(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| ApiError::validation(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), ApiError> {
    fs::write(path, format!("{text}\n")).map_err(|e| internal(format!("{}: {e}", path.display())))
}

fn print_json<T: Serialize + ?Sized>(v: &T) -> Result<(), ApiError> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}
