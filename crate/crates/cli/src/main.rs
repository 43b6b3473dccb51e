use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use coniso::commands::{self, Outcome};
use coniso::config::ExperimentConfig;
use coniso::repro;
use coniso::report::{render, write};
use serde_json::Value;

/// Weighted isoperimetric experiments in convex cones.
///
/// Exit status: 0 when every check passes, 2 when an inequality or
/// certificate violation was found, 1 on usage or configuration errors.
#[derive(Parser, Debug)]
#[command(name = "coniso", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Concavity gate for w^(1/alpha), with a witness pair on failure.
    CheckWeight {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Weighted perimeter, volume and quotient of the configured domain.
    Measure {
        #[arg(long)]
        config: PathBuf,
        /// Appends `N,P,m,Q,deficit`.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multi-start minimization of the quotient over cosine profiles.
    Optimize {
        #[arg(long)]
        config: PathBuf,
        /// Writes the best profile, one radius per line.
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Appends the `iteration,Q` history of the best start.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classifies sector angles for the weight |x|^alpha.
    ScanAngle {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta_min: f64,
        #[arg(long)]
        beta_max: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        starts: usize,
        /// Cap quadrature resolution.
        #[arg(long = "grid", default_value_t = 256)]
        grid: usize,
        /// Appends `beta,deficit_opt,c2_min,class`.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Directory for competitor profiles of ball-beaten angles.
        #[arg(long)]
        profiles: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solves the weighted Neumann problem and checks the ABP chain.
    VerifyAbp {
        #[arg(long)]
        config: PathBuf,
        /// Writes nodal `x,y,u,ux,uy`.
        #[arg(long)]
        dump_field: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs every acceptance criterion and aggregates pass/fail.
    ReproAll {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(report: &Value, out: Option<PathBuf>, cfg: Option<&ExperimentConfig>) -> Result<()> {
    let text = render(report);
    print!("{text}");
    if let Some(path) = out.or_else(|| cfg.and_then(|c| c.output.json.clone())) {
        write(&path, &text)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32> {
    coniso::init_threads()?;
    let (outcome, out, cfg): (Outcome, _, Option<ExperimentConfig>) = match cli.command {
        Command::CheckWeight { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            (commands::check_weight(&cfg)?, out, Some(cfg))
        }
        Command::Measure { config, csv, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            (commands::measure(&cfg, csv.as_deref())?, out, Some(cfg))
        }
        Command::Optimize { config, profile, csv, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            (commands::optimize(&cfg, profile.as_deref(), csv.as_deref())?, out, Some(cfg))
        }
        Command::ScanAngle { alpha, beta_min, beta_max, steps, seed, starts, grid, csv, profiles, out } => {
            let betas = commands::beta_grid(beta_min, beta_max, steps)?;
            let mut opts = coniso_core::optimize::ScanOptions::<f64>::default();
            opts.optim.seed = seed;
            opts.optim.starts = starts;
            opts.resolution = grid;
            let outcome = commands::scan_angle(alpha, &betas, &opts, csv.as_deref(), profiles.as_deref())?;
            (outcome, out, None)
        }
        Command::VerifyAbp { config, dump_field, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            (commands::verify_abp(&cfg, dump_field.as_deref())?, out, Some(cfg))
        }
        Command::ReproAll { seed, out } => {
            let report = repro::run_all(seed)?;
            let outcome = Outcome {
                report: report.to_json(),
                violation: !report.pass(),
            };
            (outcome, out, None)
        }
    };
    emit(&outcome.report, out, cfg.as_ref())?;
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Help and version requests are not errors.
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
