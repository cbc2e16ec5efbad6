mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use commands::{Failure, Outcome};
use config::{Command, RunConfig, COMMANDS};

/// Runs one toruslab computation from a JSON config and writes `<command>.json` and
/// `<command>.csv` into the output directory.
#[derive(Parser, Debug)]
#[command(name = "toruslab", version)]
struct Cli {
    /// Command to run; overrides `command` in the config.
    command: Option<String>,
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, env = "TORUSLAB_THREADS")]
    threads: Option<usize>,
    #[arg(long)]
    verbose: bool,
}

const EXIT_FAIL: u8 = 1;
const EXIT_INVALID: u8 = 2;

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    eprintln!("usage: toruslab [COMMAND] --config PATH [--out DIR] [--threads N] [--verbose]");
    eprintln!("commands: {}", COMMANDS.join(", "));
    ExitCode::from(EXIT_INVALID)
}

fn config_hash(raw: &Value) -> String {
    // serde_json maps are ordered, so this is the sorted-key form
    let canonical = serde_json::to_string(raw).expect("value serializes");
    Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_csv(path: &Path, outcome: &Outcome) -> Result<(), String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    w.write_record(&outcome.header).map_err(|e| e.to_string())?;
    for row in &outcome.rows {
        w.write_record(row).map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.kind() == clap::error::ErrorKind::DisplayHelp || e.kind() == clap::error::ErrorKind::DisplayVersion => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Debug } else { log::LevelFilter::Warn })
        .init();
    if let Some(n) = cli.threads {
        if n == 0 {
            return usage_error("--threads must be positive");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialised: {e}");
        }
    }

    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => return usage_error(&format!("{}: {e}", cli.config.display())),
    };
    let raw: Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => return usage_error(&format!("config is not JSON: {e}")),
    };
    let config: RunConfig = match serde_json::from_value(raw.clone()) {
        Ok(c) => c,
        Err(e) => return usage_error(&format!("invalid config: {e}")),
    };
    let command = match (&cli.command, config.command) {
        (Some(s), _) => match Command::parse(s) {
            Some(c) => c,
            None => return usage_error(&format!("unknown command `{s}`")),
        },
        (None, Some(c)) => c,
        (None, None) => return usage_error("no command given"),
    };
    let name = serde_json::to_value(command).expect("command serializes").as_str().unwrap_or_default().to_string();
    log::info!("running {name} with config {}", cli.config.display());

    let outcome = match commands::run(command, &config) {
        Ok(o) => o,
        Err(Failure::Config(msg)) => return usage_error(&msg),
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_FAIL);
        }
    };

    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let report = json!({
        "command": name,
        "config": raw,
        "config_sha256": config_hash(&raw),
        "seeds": config.seeds(),
        "passed": outcome.passed,
        "summary": outcome.summary,
        "metadata": { "timestamp_unix": timestamp, "version": env!("CARGO_PKG_VERSION") },
    });
    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("error: {}: {e}", cli.out.display());
        return ExitCode::from(EXIT_FAIL);
    }
    let json_path = cli.out.join(format!("{name}.json"));
    let body = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    if let Err(e) = std::fs::write(&json_path, body) {
        eprintln!("error: {}: {e}", json_path.display());
        return ExitCode::from(EXIT_FAIL);
    }
    if let Err(e) = write_csv(&cli.out.join(format!("{name}.csv")), &outcome) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_FAIL);
    }
    println!("{name}: {}", if outcome.passed { "pass" } else { "FAIL" });
    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}
