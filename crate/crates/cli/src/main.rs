//! `absf` — analyze, optimize, simulate, and validate almost-blank-subframe
//! coordination scenarios described by a JSON config file.
//!
//! Log verbosity is controlled exclusively by the `ABSF_LOG` environment
//! variable (`error`, `warn`, `info`, `debug`, `trace`).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use absf_core::harness::{self, Scenario};
use absf_core::sim::Policy;

#[derive(Parser)]
#[command(name = "absf", version, about, propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate per-state, per-group throughput on the initial snapshot.
    Analyze(Common),
    /// Solve for state probabilities and emit a blanking pattern.
    Optimize(Common),
    /// Run every configured (policy, seed) pair end to end.
    Simulate(Common),
    /// Compare analytic per-state throughput against the simulator.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario description (JSON).
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Directory the result files are written to.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Replace the config's seed list with this single seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Replace the config's policy list (repeat for several policies).
    #[arg(long = "policy", value_name = "NAME")]
    policies: Vec<String>,
}

impl Common {
    /// Load the scenario, apply the command-line overrides, and return it
    /// with the directory relative file references resolve against.
    fn scenario(&self) -> Result<(Scenario, PathBuf)> {
        let mut scenario = Scenario::load(&self.config)
            .with_context(|| format!("loading {}", self.config.display()))?;
        if let Some(seed) = self.seed {
            scenario.seeds = vec![seed];
        }
        if !self.policies.is_empty() {
            scenario.policies = self.policies.clone();
        }
        scenario.validate().context("invalid scenario")?;
        let base = self
            .config
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."))
            .to_path_buf();
        Ok((scenario, base))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ABSF_LOG", "warn")).init();
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Analyze(common) => {
            let (scenario, base) = common.scenario()?;
            let report = harness::analyze(&scenario, &base, &common.out)?;
            let best = report
                .totals
                .iter()
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("at least one state");
            println!(
                "analyzed {} states; best system throughput {:.3e} bit/s in state {}",
                report.totals.len(),
                best.1,
                best.0
            );
            println!("wrote {}", common.out.join("state_throughput.csv").display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Optimize(common) => {
            let (scenario, base) = common.scenario()?;
            let policy = planning_policy(&scenario)?;
            let report = harness::optimize_scenario(&scenario, &base, &common.out, &policy)?;
            match (report.objective, report.kkt_residual) {
                (Some(obj), Some(res)) => println!(
                    "{}: objective {obj:.6}, stationarity residual {res:.2e}",
                    policy.name()
                ),
                _ => println!("{}: best state selected", policy.name()),
            }
            if !report.excluded_groups.is_empty() {
                println!(
                    "warning: {} group(s) excluded as infeasible: {:?}",
                    report.excluded_groups.len(),
                    report.excluded_groups
                );
            }
            println!(
                "wrote {} and {}",
                common.out.join("probabilities.csv").display(),
                common.out.join("pattern.txt").display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate(common) => {
            let (scenario, base) = common.scenario()?;
            let report = harness::run_suite(&scenario, &base, &common.out)?;
            print!("{}", harness::summary_csv(&report.pooled));
            println!("wrote {}", common.out.join("summary.csv").display());
            if report.failures > 0 {
                eprintln!("{} run(s) failed; see manifest.json", report.failures);
                return Ok(ExitCode::FAILURE);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate(common) => {
            let (scenario, base) = common.scenario()?;
            let report = harness::validate_scenario(&scenario, &base, &common.out)?;
            print!("{}", report.system_csv());
            println!("wrote {}", common.out.join("validate_system.csv").display());
            if report.all_system_within() {
                println!("model inside the simulated 95% CI in all {} states", report.system.len());
                Ok(ExitCode::SUCCESS)
            } else {
                let misses = report.system.iter().filter(|r| !r.within()).count();
                eprintln!("model outside the simulated 95% CI in {misses} state(s)");
                Ok(ExitCode::FAILURE)
            }
        }
    }
}

/// The policy whose planning problem `optimize` solves: the first
/// optimizing policy in the list, proportional fairness when the list only
/// names non-optimizing policies.
fn planning_policy(scenario: &Scenario) -> Result<Policy> {
    for p in scenario.policy_list()? {
        if matches!(
            p,
            Policy::AsymptoticPf | Policy::DynamicPf | Policy::MaxThroughput
        ) {
            return Ok(p);
        }
    }
    Ok(Policy::AsymptoticPf)
}
