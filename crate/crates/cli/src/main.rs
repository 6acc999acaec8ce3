use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hilbundle::geometry::{CurvatureField, ParameterPoint, DEFAULT_FD_STEP};
use hilbundle::scenario::{self, matrix_spec, parse_config, RunOptions, ScenarioConfig};
use hilbundle::Error;
use serde_json::json;

/// Exit status when at least one check fails.
const EXIT_CHECK_FAILED: u8 = 1;
/// Exit status for usage, parse and validation errors.
const EXIT_USAGE: u8 = 2;
/// Exit status for numerical or I/O failures during a run.
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "hilbundle", version, about = "Scenario runner for covariant quantum evolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// Output directory (overrides the config and HB_OUT_DIR).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Multiplies every check threshold.
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
    /// Overrides the number of grid steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Record wall time in the report (makes reports non-reproducible).
    #[arg(long)]
    timing: bool,
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions {
            out_dir: self.out.clone(),
            tol_scale: self.tol_scale,
            steps: self.steps,
            timing: self.timing,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evolve a scenario, write trajectory CSV and report JSON.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run an invariant suite: geometry, transport, metric, equivalence or all.
    Check {
        config: PathBuf,
        #[arg(long)]
        suite: String,
        #[command(flatten)]
        common: Common,
    },
    /// Print the curvature components F_ab (a < b, 0-based) at a parameter point.
    Curvature {
        config: PathBuf,
        /// Comma-separated coordinates, e.g. `--at 0.3,1.2`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        at: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_FD_STEP)]
        fd_step: f64,
    },
    /// Print version and config schema version.
    Version,
}

fn load(path: &Path) -> Result<ScenarioConfig, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Parse { .. } | Error::Validation { .. } | Error::Usage(_) => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

fn error_json(err: &Error) -> serde_json::Value {
    let mut v = json!({"error": err.kind(), "message": err.to_string()});
    match err {
        Error::Parse { line, column, .. } => {
            v["line"] = json!(line);
            v["column"] = json!(column);
        }
        Error::Validation { field, .. } => v["field"] = json!(field),
        _ => {}
    }
    v
}

fn report_status(report: &scenario::RunReport) -> u8 {
    if report.passed() {
        0
    } else {
        EXIT_CHECK_FAILED
    }
}

/// Writes a line to stdout; a closed pipe (`| head`) is not an error.
fn emit(text: &str) -> Result<(), Error> {
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::Io(e.to_string())),
        _ => Ok(()),
    }
}

fn execute(command: Command) -> Result<u8, Error> {
    match command {
        Command::Run { config, common } => {
            let config = load(&config)?;
            let output = scenario::run(&config, &common.options())?;
            emit(&output.report.to_json())?;
            Ok(report_status(&output.report))
        }
        Command::Check { config, suite, common } => {
            let config = load(&config)?;
            let report = scenario::check(&config, &suite, &common.options())?;
            emit(&report.to_json())?;
            Ok(report_status(&report))
        }
        Command::Curvature { config, at, fd_step } => {
            let config = load(&config)?;
            if !(fd_step.is_finite() && fd_step > 0.0) {
                return Err(Error::Usage(format!("--fd-step must be positive, got {fd_step}")));
            }
            let field = scenario::gauge_field(&config)?;
            if at.len() != field.param_dim() {
                return Err(Error::Usage(format!(
                    "--at needs {} coordinates, got {}",
                    field.param_dim(),
                    at.len()
                )));
            }
            let point = ParameterPoint::new(at.clone())?;
            let components = CurvatureField::new(field, fd_step)
                .upper_components(&point)?
                .into_iter()
                .map(|((a, b), f)| json!({"a": a, "b": b, "matrix": matrix_spec(&f)}))
                .collect::<Vec<_>>();
            let out = json!({"scenario": config.name, "point": at, "fd_step": fd_step, "components": components});
            emit(&serde_json::to_string_pretty(&out).expect("json"))?;
            Ok(0)
        }
        Command::Version => {
            emit(&format!(
                "hilbundle {} (config schema {})",
                env!("CARGO_PKG_VERSION"),
                scenario::SCHEMA_VERSION
            ))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = Error::Usage(e.render().to_string().trim().to_string());
            eprintln!("{}", error_json(&err));
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("{}", error_json(&err));
            ExitCode::from(exit_code(&err))
        }
    }
}
