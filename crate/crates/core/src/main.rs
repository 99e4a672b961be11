use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};

use oran_energy::config::ScenarioConfig;
use oran_energy::harness::{self, HarnessError};
use oran_energy::netmodel::build_scenario;
use oran_energy::ric::run_to_fixed_point;
use oran_energy::ric::transport::{connect_xapp, RemotePolicy};
use oran_energy::xapps::{oracle_solve, OracleError, PolicyKind};

#[derive(Parser)]
#[command(
    name = "oran-energy",
    version,
    about = "Radio-card sleep-mode experiments on a simulated O-RAN grid"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one policy over seeded trials.
    Run {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, value_parser = parse_policy)]
        policy: PolicyKind,
        #[arg(long)]
        ues: usize,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run all policies over every UE count.
    Sweep {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "10,50,100")]
        ues: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write mean/stddev per (policy, UE count).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Exhaustive optimum for a small instance, compared with the heuristics.
    Oracle {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        ues: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 12)]
        max_rcs: usize,
    },
    /// Check a scenario file and print the effective configuration.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Host the RIC and drive a remote xApp that connects over TCP.
    Ric {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:36421")]
        listen: String,
        #[arg(long)]
        ues: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 5000)]
        timeout_ms: u64,
    },
    /// Run an xApp as a separate process against a listening RIC.
    Xapp {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, value_parser = parse_policy)]
        policy: PolicyKind,
        #[arg(long, default_value = "127.0.0.1:36421")]
        connect: String,
        #[arg(long, default_value_t = 5000)]
        timeout_ms: u64,
    },
}

fn parse_policy(s: &str) -> Result<PolicyKind, String> {
    PolicyKind::parse(s)
        .ok_or_else(|| format!("unknown policy `{s}` (expected all-on, xapp1 or xapp2)"))
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn config(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: 2,
            error: error.into(),
        }
    }

    fn runtime(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: 3,
            error: error.into(),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        if e.is_config() {
            Failure::config(e)
        } else {
            Failure::runtime(e)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ScenarioConfig, Failure> {
    let cfg = match path {
        Some(p) => ScenarioConfig::load(p).map_err(Failure::config)?,
        None => ScenarioConfig::default(),
    };
    cfg.validate().map_err(Failure::config)?;
    Ok(cfg)
}

fn print_summary(exp: &harness::Experiment) {
    println!(
        "{:<8} {:>5} {:>10} {:>10} {:>9} {:>8}",
        "policy", "ues", "power_w", "saving_%", "sleeping", "outages"
    );
    for a in &exp.aggregates {
        println!(
            "{:<8} {:>5} {:>10.2} {:>10.2} {:>9.2} {:>8.2}",
            a.policy.name(),
            a.n_ues,
            a.total_w.mean,
            a.saving_pct.mean,
            a.sleeping_rcs.mean,
            a.outages.mean
        );
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            scenario,
            policy,
            ues,
            trials,
            seed,
            out,
        } => {
            let cfg = load_config(scenario.as_deref())?;
            let exp = harness::run_experiment(&cfg, &[policy], &[ues], trials, seed)?;
            harness::write_csv(&exp.trials, &out)?;
            print_summary(&exp);
        }
        Command::Sweep {
            scenario,
            ues,
            trials,
            seed,
            out,
            summary,
        } => {
            let cfg = load_config(scenario.as_deref())?;
            let exp = harness::run_experiment(&cfg, &PolicyKind::ALL, &ues, trials, seed)?;
            harness::write_csv(&exp.trials, &out)?;
            if let Some(path) = summary {
                harness::write_summary_csv(&exp.aggregates, &path)?;
            }
            print_summary(&exp);
        }
        Command::Oracle {
            scenario,
            ues,
            seed,
            max_rcs,
        } => {
            let cfg = load_config(scenario.as_deref())?;
            let state = build_scenario(&cfg, ues, seed).map_err(Failure::config)?;
            let best = oracle_solve(&state, max_rcs).map_err(|e| match e {
                OracleError::TooLarge { .. } | OracleError::CapTooLarge(_) => Failure::config(e),
            })?;
            let json = serde_json::json!({
                "active_set": best.active_set,
                "power": best.power,
                "explored": best.explored,
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&json).map_err(Failure::runtime)?
            );
            for p in PolicyKind::ALL {
                let r = harness::run_trial(&cfg, p, ues, seed)?;
                println!(
                    "{:<8} total {:>9.3} W  gap {:>8.3} W  sleeping {}",
                    p.name(),
                    r.total_w,
                    r.total_w - best.power.total_w,
                    r.sleeping_rcs
                );
            }
        }
        Command::Validate { scenario } => {
            let cfg = load_config(Some(&scenario))?;
            let (rows, cols) = cfg.grid_shape().map_err(Failure::config)?;
            println!(
                "ok: {} O-RUs in a {rows}x{cols} grid, {} RCs",
                cfg.n_orus,
                2 * cfg.n_orus
            );
            print!("{}", cfg.to_toml_string());
        }
        Command::Ric {
            scenario,
            listen,
            ues,
            seed,
            timeout_ms,
        } => {
            let cfg = load_config(scenario.as_deref())?;
            let state = build_scenario(&cfg, ues, seed).map_err(Failure::config)?;
            let listener = TcpListener::bind(&listen)
                .with_context(|| format!("binding {listen}"))
                .map_err(Failure::runtime)?;
            eprintln!(
                "waiting for an xApp on {}",
                listener.local_addr().map_err(Failure::runtime)?
            );
            let (stream, peer) = listener.accept().map_err(Failure::runtime)?;
            let mut remote = RemotePolicy::tcp(
                peer.to_string(),
                stream,
                Some(Duration::from_millis(timeout_ms)),
            )
            .map_err(Failure::runtime)?;
            let trace =
                run_to_fixed_point(state, &mut remote, cfg.max_steps).map_err(Failure::runtime)?;
            let p = trace.final_power();
            println!(
                "steps {}  power {:.3} W -> {:.3} W  sleeping {}  outages {}",
                trace.steps.len(),
                trace.initial_power.total_w,
                p.total_w,
                trace.final_state.sleeping_count(),
                trace.final_assoc.outage_count()
            );
        }
        Command::Xapp {
            scenario,
            policy,
            connect,
            timeout_ms,
        } => {
            let cfg = load_config(scenario.as_deref())?;
            let mut p = policy.build(&cfg);
            let steps = connect_xapp(&mut p, &connect, Some(Duration::from_millis(timeout_ms)))
                .map_err(|e| {
                    Failure::runtime(anyhow!(e).context(format!("session with {connect}")))
                })?;
            eprintln!("{} completed {steps} steps", policy.name());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
