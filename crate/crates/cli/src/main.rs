//! `mars` command-line runner.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mars::acceptance;
use mars::driver::{oracle_table, run, validate_config, DampingMode, ModelKind, RunConfig};
use mars::MarsError;

#[derive(Parser)]
#[command(name = "mars", version, about = "Adaptive per-mode damping for stiff PDEs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write snapshots plus a manifest.
    Run {
        #[arg(long)]
        model: ModelKind,
        /// Flat TOML config; model defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (overrides MARS_OUT and the config file).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        t_end: Option<f64>,
        /// Disable damping altogether (λ ≡ 0).
        #[arg(long, conflicts_with = "fixed_lambda")]
        explicit: bool,
        /// Keep the initial damping spectrum, no adaptation.
        #[arg(long)]
        fixed_lambda: bool,
    },
    /// Print e(k), λ_c(k) and k_e at the initial state as CSV.
    Oracle {
        #[arg(long)]
        model: ModelKind,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the built-in acceptance checks.
    Check {
        /// Only this criterion (1-10).
        #[arg(long)]
        criterion: Option<u8>,
    },
}

fn load(model: ModelKind, path: Option<&PathBuf>) -> Result<RunConfig, MarsError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| MarsError::Config(format!("cannot read {}: {e}", p.display())))?,
        None => String::new(),
    };
    validate_config(model, &text)
}

fn fail(e: &MarsError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Run { model, config, out, seed, t_end, explicit, fixed_lambda } => {
            let mut cfg = match load(model, config.as_ref()) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            if let Some(s) = seed {
                if cfg.params.seed().is_none() {
                    log::warn!("{model} has no random initial condition; --seed ignored");
                }
                cfg.params.set_seed(s);
            }
            if let Some(t) = t_end {
                cfg.t_end = t;
            }
            if explicit {
                cfg.damping = DampingMode::Explicit;
            } else if fixed_lambda {
                cfg.damping = DampingMode::Fixed;
            }
            cfg.resolve_out_dir(out, std::env::var_os("MARS_OUT"));
            if let Err(e) = cfg.validate() {
                return fail(&e);
            }
            match run(&cfg) {
                Ok(outcome) => {
                    let t = &outcome.termination;
                    println!(
                        "{}: {}; last accepted step {} (t = {:e}), {} snapshots in {}",
                        model,
                        t.message.as_deref().unwrap_or(&t.status),
                        t.step,
                        t.time,
                        outcome.snapshots.len(),
                        outcome.out_dir.display()
                    );
                    ExitCode::from(outcome.exit_code() as u8)
                }
                Err(e) => fail(&e),
            }
        }
        Command::Oracle { model, config } => {
            let table = load(model, config.as_ref()).and_then(|c| oracle_table(&c.params)?.to_csv());
            match table {
                Ok(csv) => {
                    print!("{csv}");
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Check { criterion } => {
            let results = match criterion {
                Some(id) => match acceptance::run_one(id) {
                    Some(r) => vec![r],
                    None => {
                        eprintln!("error: no criterion {id} (expected 1-10)");
                        return ExitCode::from(2);
                    }
                },
                None => acceptance::run_all(),
            };
            for r in &results {
                println!("{r}");
            }
            if results.iter().all(|r| r.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
