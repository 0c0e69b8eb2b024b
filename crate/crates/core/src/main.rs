use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use aomi_sim::accuracy::expected_accuracy_over_gains;
use aomi_sim::channel::sample_fading_power;
use aomi_sim::experiment::{emit_results, run_sweep, sample_population, validate_mode, Scenario};
use aomi_sim::scheme::total_delay;
use aomi_sim::shs::{closed_form_aaomi, ShsParameters};
use aomi_sim::sim::{simulate_with_trace, write_trace_csv};
use aomi_sim::Error;

#[derive(Parser)]
#[command(name = "aomi-sim", about = "Freshness (AoMI) evaluation for LEO satellite downlinks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the power sweep and write figure-ready CSV files.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// Output directory for accuracy.csv, aaomi.csv, compliance.csv, per_user.csv.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Cross-check the closed-form average AoMI against the event-driven simulator.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
        /// Simulation horizon in seconds (default: 1e6 / arrival rate).
        #[arg(long)]
        horizon: Option<f64>,
        /// Maximum allowed relative deviation.
        #[arg(long, default_value_t = 0.02)]
        tolerance: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Dump one simulated sample path as CSV (t,q,alpha0,alpha1,event).
    Trace {
        #[arg(long)]
        scenario: PathBuf,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
        /// Simulation horizon in seconds.
        #[arg(long, default_value_t = 100.0)]
        horizon: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load_scenario(path: &PathBuf, seed: Option<u64>) -> Result<Scenario, Error> {
    let mut scenario = Scenario::from_path(path)?;
    if let Some(seed) = seed {
        scenario.master_seed = seed;
    }
    Ok(scenario)
}

fn run() -> Result<u8, Error> {
    match Cli::parse().command {
        Command::Sweep { scenario, out, seed } => {
            let scenario = load_scenario(&scenario, seed)?;
            let result = run_sweep(&scenario)?;
            emit_results(&result, &out)?;
            println!("wrote {} sweep rows to {}", result.rows.len(), out.display());
            Ok(0)
        }
        Command::Validate { scenario, horizon, tolerance, seed } => {
            let scenario = load_scenario(&scenario, seed)?;
            let horizon = horizon.unwrap_or(1e6 / scenario.constants.arrival_rate_per_s);
            let report = validate_mode(&scenario, horizon, tolerance)?;
            for row in &report.rows {
                println!(
                    "altitude {:.0} km  scheme {:8}  user {}  power {:.3} W  closed {:.6} s  simulated {:.6} s  rel {:.3e}",
                    row.altitude_m / 1e3,
                    row.scheme,
                    row.user_id,
                    row.power_w,
                    row.closed_form_s,
                    row.simulated_s,
                    row.rel_deviation
                );
            }
            println!(
                "max relative deviation {:.3e} (tolerance {:.3e}): {}",
                report.max_rel_deviation,
                report.tolerance,
                if report.pass { "PASS" } else { "FAIL" }
            );
            Ok(if report.pass { 0 } else { 1 })
        }
        Command::Trace { scenario, out, horizon, seed } => {
            let scenario = load_scenario(&scenario, seed)?;
            let schemes = scenario.scheme_configs()?;
            let scheme = &schemes[0];
            let population = sample_population(&scenario, scenario.altitudes_m[0])?;
            let user = &population[0];
            let mut user = *user;
            user.budget.transmit_power_w = scenario.power_grid_w[scenario.power_grid_w.len() / 2];
            let gains = sample_fading_power(&user.fading, scenario.mc_samples);
            let ua = expected_accuracy_over_gains(&scheme.accuracy_profile, &user, &scheme.name, &gains)?;
            let params = ShsParameters::new(
                scenario.constants.arrival_rate_per_s,
                ua.rho.max(f64::MIN_POSITIVE),
                total_delay(scheme),
            )?;
            let (result, rows) = simulate_with_trace(&params, horizon, scenario.master_seed)?;
            let file = std::fs::File::create(&out)?;
            write_trace_csv(std::io::BufWriter::new(file), &rows)?;
            println!(
                "traced {} events over {horizon} s (scheme {}, user 0, rho {:.4}); time-avg AoMI {:.4} s, closed form {:.4} s",
                rows.len(),
                scheme.name,
                ua.rho,
                result.time_avg_aomi,
                closed_form_aaomi(&params)
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
