use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use delay_etc::harness::{reproduce_tables, run_experiment, ExperimentConfig, RunOptions};
use delay_etc::tuner::{evaluate, tune};
use delay_etc::{CertificateData, Error, LipschitzConstants, Result, TunerResult};

#[derive(Parser)]
#[command(name = "delay-etc", version, about = "Event-triggered control of discrete-time delay systems")]
struct Cli {
    /// Directory for all relative output paths.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Count the update at k = 0 as an event.
    #[arg(long, global = true)]
    include_initial_event: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (initial function, horizon) pair in the config.
    Simulate { config: PathBuf },
    /// Search for trigger parameters certifying gaps of at least two.
    Tune { config: PathBuf },
    /// Reproduce the event-count tables for the linear benchmark.
    Tables,
    /// Feasibility and certificate validation only.
    Check { config: PathBuf },
}

#[derive(Serialize)]
struct CheckReport {
    system: String,
    linear_feasibility: Option<(f64, f64)>,
    certificate: CertificateData,
    lipschitz: LipschitzConstants,
    trigger: Vec<TunerResult>,
}

enum Outcome {
    Ok,
    Violation,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = RunOptions {
        out_dir: cli.out_dir.clone(),
        include_initial_event: cli.include_initial_event,
    };
    match run(&cli.command, &opts) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Violation) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::CertificateInfeasible { .. }
                | Error::TuningInfeasible { .. }
                | Error::LinearInfeasible { .. }
                | Error::SearchFailed { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(command: &Command, opts: &RunOptions) -> Result<Outcome> {
    match command {
        Command::Simulate { config } => {
            let cfg = ExperimentConfig::load(config)?;
            let summary = run_experiment(&cfg, opts)?;
            print!("{}", summary.to_json()?);
            for r in summary.runs.iter().filter(|r| r.nontrivial_certified) {
                for v in &r.violations {
                    eprintln!("phi{} h{}: {v}", r.initial_index, r.horizon);
                }
            }
            Ok(if summary.certified_violation() { Outcome::Violation } else { Outcome::Ok })
        }
        Command::Tune { config } => {
            let cfg = ExperimentConfig::load(config)?;
            cfg.validate()?;
            let plant = cfg.plant()?;
            let cert = plant.certificate(cfg.certificate.as_ref())?;
            let consts = plant.lipschitz();
            let tau = plant.tau();
            let worst = (0..cfg.initial.len())
                .map(|i| cfg.initial_window(i, tau))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .max_by(|a, b| cert.m_tilde(a).total_cmp(&cert.m_tilde(b)))
                .ok_or_else(|| Error::InvalidInput("no initial function".into()))?;
            let tuned = tune(cert.mu, &consts, &worst, &cert, tau)?;
            let mut out = cfg.clone();
            out.trigger = tuned.trigger_params()?;
            let text = format!(
                "{}\n# tuned: c = {}, M~ = {}, M_bar = {}, M = {}, eta = {}\n",
                out.to_toml_string(),
                tuned.c,
                tuned.m_tilde,
                tuned.m_bar,
                tuned.m,
                tuned.eta
            );
            match &opts.out_dir {
                Some(dir) => write(&dir.join("tuned.toml"), &text)?,
                None => print!("{text}"),
            }
            Ok(Outcome::Ok)
        }
        Command::Tables => {
            let doc = reproduce_tables()?;
            let md = doc.render(opts.include_initial_event);
            print!("{md}");
            if let Some(dir) = &opts.out_dir {
                write(&dir.join("tables.md"), &md)?;
                write(&dir.join("tables.json"), &(serde_json::to_string_pretty(&doc)? + "\n"))?;
            }
            Ok(Outcome::Ok)
        }
        Command::Check { config } => {
            let cfg = ExperimentConfig::load(config)?;
            cfg.validate()?;
            let plant = cfg.plant()?;
            let feas = plant.linear_feasibility();
            if let Some((lhs, rhs)) = feas {
                if lhs < rhs && !cfg.allow_infeasible {
                    return Err(Error::LinearInfeasible { lhs, rhs });
                }
            }
            let cert = plant.certificate(cfg.certificate.as_ref())?;
            let consts = plant.lipschitz();
            let tau = plant.tau();
            let trigger = (0..cfg.initial.len())
                .map(|i| Ok(evaluate(&cfg.trigger, &consts, &cfg.initial_window(i, tau)?, &cert, tau)))
                .collect::<Result<Vec<_>>>()?;
            let report = CheckReport {
                system: plant.kind().to_string(),
                linear_feasibility: feas,
                certificate: cert.data(),
                lipschitz: consts,
                trigger,
            };
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(Outcome::Ok)
        }
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })?;
    }
    std::fs::write(path, text).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}
