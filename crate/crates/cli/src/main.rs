use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use periflux::io::load_config;
use periflux::pipeline::{self, Summary};
use periflux::PerifluxError;

#[derive(Parser)]
#[command(name = "periflux", version, about = "Time-periodic pipe flow with prescribed flux")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured tasks and write the summary and field files.
    Run {
        #[command(flatten)]
        common: Common,
        /// Output directory; overrides the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the configured tasks and report their checks without writing files.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    config: PathBuf,
    /// Worker threads; falls back to PERIFLUX_THREADS, then all cores.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, short)]
    verbose: bool,
}

const EXIT_ASSERTION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

fn exit_code(e: &PerifluxError) -> u8 {
    match e {
        PerifluxError::Config { .. } | PerifluxError::Parse { .. } => EXIT_CONFIG,
        _ => EXIT_SOLVER,
    }
}

fn error_json(e: &PerifluxError) -> serde_json::Value {
    let mut v = serde_json::json!({
        "error": e.kind(),
        "message": e.to_string(),
        "exit_code": exit_code(e),
    });
    if let PerifluxError::Config { key, .. } = e {
        v["key"] = key.clone().into();
    }
    v
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, PerifluxError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("PERIFLUX_THREADS") {
        Ok(s) if !s.trim().is_empty() => s.trim().parse().map(Some).map_err(|_| PerifluxError::Config {
            key: "PERIFLUX_THREADS".into(),
            reason: format!("`{s}` is not a thread count"),
        }),
        _ => Ok(None),
    }
}

fn execute(common: &Common, out: Option<Option<PathBuf>>) -> Result<Summary, PerifluxError> {
    if let Some(n) = threads(common.threads)? {
        if n == 0 {
            return Err(PerifluxError::Config {
                key: "threads".into(),
                reason: "must be at least 1".into(),
            });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| PerifluxError::Io(e.to_string()))?;
    }
    let cfg = load_config(&common.config)?;
    let base = common.config.parent().unwrap_or(Path::new("")).to_path_buf();
    let out_dir = out.map(|o| o.unwrap_or_else(|| base.join(&cfg.output)));
    log::info!("config {} loaded, tasks {:?}", common.config.display(), cfg.ordered_tasks());
    pipeline::run(&cfg, &base, out_dir.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, out) = match cli.command {
        Command::Run { common, out } => (common, Some(out)),
        Command::Validate { common } => (common, None),
    };
    let level = if common.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let writes = out.is_some();
    match execute(&common, out) {
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(exit_code(&e))
        }
        Ok(summary) => {
            let report = serde_json::json!({
                "passed": summary.passed,
                "tasks": summary.tasks,
                "checks": summary.checks,
            });
            if writes {
                println!("{}", serde_json::json!({"passed": summary.passed, "artifacts": summary.artifacts.len()}));
            } else {
                println!("{}", serde_json::to_string_pretty(&report).unwrap_or_default());
            }
            if summary.passed {
                ExitCode::SUCCESS
            } else {
                let failed: Vec<_> = summary.failed_checks().into_iter().cloned().collect();
                eprintln!(
                    "{}",
                    serde_json::json!({
                        "error": "assertion-failure",
                        "message": format!("{} check(s) failed", failed.len()),
                        "exit_code": EXIT_ASSERTION,
                        "failed": failed,
                    })
                );
                ExitCode::from(EXIT_ASSERTION)
            }
        }
    }
}
