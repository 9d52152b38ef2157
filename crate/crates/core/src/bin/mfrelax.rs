use clap::{Args, Parser, Subcommand};
use mfrelax::cli::{cmd_poincare, cmd_run, cmd_trace, cmd_verify, CliError, RunConfig, RunOptions, PRESETS};
use mfrelax::diagio::format_float;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mfrelax", version, about = "Helicity-preserving magneto-frictional relaxation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check exactness and harmonic dimension of the discrete complex.
    Verify(Common),
    /// Relax the initial field and write diagnostics, snapshots and checkpoints.
    Run(Common),
    /// Trace field lines of a checkpointed (or initial) field.
    Trace(Common),
    /// Estimate the discrete Arnold constant.
    Poincare(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Embedded preset name.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of steps, overriding t_final.
    #[arg(long)]
    steps: Option<u64>,
    /// Seed points for tracing, one "x y z" per line.
    #[arg(long)]
    seed_file: Option<PathBuf>,
    /// Checkpoint to resume from (run) or to trace (trace).
    #[arg(long)]
    resume: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<RunConfig, CliError> {
        match (&self.config, &self.preset) {
            (Some(p), _) => RunConfig::from_file(p),
            (None, Some(n)) => RunConfig::preset(n),
            (None, None) => Err(CliError::Invalid {
                field: "config",
                msg: format!("pass --config PATH or --preset NAME ({})", PRESETS.map(|(n, _)| n).join(", ")),
            }),
        }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Verify(c) => {
            let report = cmd_verify(&c.config()?)?;
            println!("{report}");
            Ok(report.passed())
        }
        Command::Run(c) => {
            let cfg = c.config()?;
            let opts = RunOptions { out: c.out.clone(), steps: c.steps, resume: c.resume.clone() };
            let every = (opts.steps.unwrap_or_else(|| cfg.steps()) / 20).max(1);
            let r = cmd_run(&cfg, &opts, &mut |ev| {
                if ev.state.step % every == 0 {
                    eprintln!(
                        "step {} t={} E={} H={} newton={} res={:.2e}",
                        ev.state.step,
                        format_float(ev.row.t),
                        format_float(ev.row.energy),
                        format_float(ev.row.helicity),
                        ev.row.newton_iters,
                        ev.row.residual
                    );
                }
            })?;
            if let Some(last) = r.rows.last() {
                println!(
                    "scheme {} steps {} t {} energy {} helicity {} gen_helicity {} div_norm {}",
                    cfg.scheme.name(),
                    r.state.step,
                    format_float(r.state.t),
                    format_float(last.energy),
                    format_float(last.helicity),
                    format_float(last.gen_helicity),
                    if last.div_norm.is_nan() { "n/a".to_string() } else { format_float(last.div_norm) }
                );
            }
            if let Some(p) = &r.csv {
                println!("diagnostics {}", p.display());
            }
            if let Some(p) = &r.checkpoint {
                println!("checkpoint {}", p.display());
            }
            Ok(true)
        }
        Command::Trace(c) => {
            let cfg = c.config()?;
            let (traces, path) = cmd_trace(&cfg, c.resume.as_deref(), c.seed_file.as_deref(), c.out.as_deref())?;
            for s in &traces.skipped {
                eprintln!("seed {s} lies outside the domain, skipped");
            }
            for l in &traces.lines {
                println!("seed {} points {} termination {}", l.seed, l.points.len(), l.termination.name());
            }
            if let Some(p) = path {
                println!("fieldlines {}", p.display());
            }
            Ok(true)
        }
        Command::Poincare(c) => {
            let est = cmd_poincare(&c.config()?)?;
            println!("lambda_min {}", format_float(est.lambda_min));
            println!("C {}", format_float(est.c));
            println!("residual {:.3e}", est.residual);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
