use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use expcli::analytics::{law_report, parse_prob};
use expcli::manifest::default_out_dir;
use expcli::{figure, rerun, run_experiment, selftest, worker_count, CliError, ExperimentConfig, RunManifest, RunStatus};
use expcli::{EXIT_FAILURE, EXIT_OK, EXIT_PARTIAL};

#[derive(Parser)]
#[command(name = "expcli", version, about = "Seeded random-walk experiments with reproducible outputs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a JSON experiment config.
    Run {
        config: PathBuf,
        /// Output directory; overrides the config's `output`.
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Worker threads (default: $RWRELAB_WORKERS, else all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Re-run a manifest and check that every output file is byte-identical.
    Rerun {
        manifest: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Write plot-ready figure.csv for a finished run directory.
    Figure { run_dir: PathBuf },
    /// Closed-form quantities of an offspring law given as p0 p1 p2 ...
    Analytics {
        #[arg(required = true)]
        pmf: Vec<String>,
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Quick closed-form and determinism checks.
    Selftest,
}

fn status_code(status: RunStatus) -> i32 {
    match status {
        RunStatus::Complete => EXIT_OK,
        RunStatus::Partial => EXIT_PARTIAL,
    }
}

fn dispatch(cmd: Command) -> Result<i32, CliError> {
    match cmd {
        Command::Run { config, output, workers } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = output.unwrap_or_else(|| default_out_dir(&cfg));
            let m = run_experiment(&cfg, &out, worker_count(workers.or(cfg.budget.workers)))?;
            println!("{}: {:?} in {:.1}s", out.display(), m.status, m.wall_clock_secs);
            Ok(status_code(m.status))
        }
        Command::Rerun { manifest, output, workers } => {
            let old = RunManifest::load(&manifest)?;
            let m = rerun(&old, &output, worker_count(workers))?;
            println!("{}: {} files identical", output.display(), m.files.len());
            Ok(status_code(m.status))
        }
        Command::Figure { run_dir } => {
            let path = figure::figure(&run_dir)?;
            println!("{}", path.display());
            Ok(EXIT_OK)
        }
        Command::Analytics { pmf, beta } => {
            let probs = pmf.iter().map(|s| parse_prob(s)).collect::<Result<Vec<_>, _>>()?;
            let report = law_report(&probs, beta)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            Ok(EXIT_OK)
        }
        Command::Selftest => {
            let checks = selftest::run_selftest();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(if checks.iter().all(|c| c.passed) { EXIT_OK } else { EXIT_FAILURE })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
