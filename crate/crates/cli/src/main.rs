use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fdgm::scenario::{self, ScenarioConfig, PRESETS};
use fdgm::Error;

#[derive(Parser)]
#[command(name = "fdgm", version, about = "Distributed Fenchel dual gradient simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write one CSV per algorithm.
    Run(RunArgs),
    /// Run a scenario with certification of the rate bounds.
    Verify(RunArgs),
    /// List the built-in presets.
    Scenarios,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    record_every: Option<usize>,
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_ORACLE: u8 = 3;
const EXIT_CERTIFICATION: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::OracleFailure { .. } => EXIT_ORACLE,
        Error::CertificationUnavailable(_) => EXIT_CERTIFICATION,
        _ => EXIT_VALIDATION,
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit_code(e))
}

fn load(args: &RunArgs) -> Result<(ScenarioConfig, PathBuf), Error> {
    let (mut cfg, base) = match (&args.preset, &args.config) {
        (Some(name), _) => {
            let cfg = scenario::preset(name).ok_or_else(|| {
                let names: Vec<_> = PRESETS.iter().map(|p| p.0).collect();
                Error::InvalidConfig(format!("preset: unknown preset {name:?} (known: {})", names.join(", ")))
            })?;
            (cfg, PathBuf::from("."))
        }
        (None, Some(path)) => {
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (ScenarioConfig::load(path)?, base)
        }
        (None, None) => return Err(Error::InvalidConfig("one of --preset or --config is required".into())),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(h) = args.horizon {
        cfg.horizon = h;
    }
    if let Some(r) = args.record_every {
        cfg.record_every = r;
    }
    Ok((cfg, base))
}

fn run(args: &RunArgs, verify: bool) -> ExitCode {
    let (cfg, base) = match load(args) {
        Ok(v) => v,
        Err(e) => return fail(&e),
    };
    let certify = verify || cfg.certify;
    let prepared = match scenario::prepare(&cfg, &base) {
        Ok(p) => p,
        Err(e) => return fail(&e),
    };
    let outcome = match scenario::execute(&prepared, certify) {
        Ok(o) => o,
        Err(e) => return fail(&e),
    };
    let written = scenario::write_outputs(&prepared, &outcome, &args.out);
    match &written {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => return fail(e),
    }
    if let Some(e) = outcome.first_error() {
        return fail(e);
    }
    let report = outcome.report_text();
    if !report.is_empty() {
        print!("{report}");
    }
    if certify && !outcome.certification_passed() {
        eprintln!("error: certification failed");
        return ExitCode::from(EXIT_CERTIFICATION);
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(args) => run(args, false),
        Command::Verify(args) => run(args, true),
        Command::Scenarios => {
            for (name, about) in PRESETS {
                println!("{name:<26} {about}");
            }
            ExitCode::SUCCESS
        }
    }
}
