use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use hurrisim_core::config::ScenarioFile;
use hurrisim_core::montecarlo::{run_monte_carlo, MonteCarloConfig};
use hurrisim_core::network::load_networks;
use hurrisim_core::output::{emit_outputs, plot_data, RunInfo, StrategyRun};
use hurrisim_core::testbed::{generate_testbed, TestbedParams};
use hurrisim_core::{Simulation, Strategy};

#[derive(Debug, Parser)]
#[command(name = "hurrisim", version, about = "Hurricane power and road restoration simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run replications for one or more strategies and write outputs.
    Run(RunArgs),
    /// Write a synthetic testbed (three network files and a scenario).
    Generate(GenerateArgs),
    /// Reshape timeseries.csv files into per-strategy mean curves.
    PlotData {
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, value_name = "FILE")]
    power: PathBuf,
    #[arg(long, value_name = "FILE")]
    roads: PathBuf,
    #[arg(long, value_name = "FILE")]
    couplings: PathBuf,
    #[arg(long, value_name = "FILE")]
    scenario: PathBuf,
    /// component, distance or traffic-light; repeat or comma-separate for several.
    #[arg(long, value_delimiter = ',', value_parser = parse_strategy,
          default_value = "component,distance,traffic-light")]
    strategy: Vec<Strategy>,
    /// Restoration teams in the crew pool.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    teams: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    min_reps: usize,
    #[arg(long, default_value_t = 1000)]
    max_reps: usize,
    #[arg(long, default_value_t = 0.90, value_parser = parse_confidence)]
    confidence: f64,
    #[arg(long, default_value_t = 0.10, value_parser = parse_positive)]
    rel_halfwidth: f64,
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    no_crew_access_dependence: bool,
    #[arg(long)]
    no_fuel_dependence: bool,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[arg(long, default_value_t = 47)]
    grid_size: usize,
    #[arg(long, default_value_t = 7657)]
    households: usize,
    #[arg(long, default_value_t = 6)]
    substations: usize,
    #[arg(long, default_value_t = 0.045)]
    lights_fraction: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 65.0)]
    wind_mph: f64,
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: hurrisim_core::SimError| e.to_string())
}

fn parse_confidence(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("confidence must lie strictly between 0 and 1, got {v}"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("value must be positive, got {v}"))
    }
}

fn run(args: RunArgs) -> Result<()> {
    let networks = load_networks(&args.power, &args.roads, &args.couplings)?;
    let file = ScenarioFile::load(&args.scenario)?;
    let mut scenario = file.scenario(&networks.roads)?;
    scenario.crew_access_dependence &= !args.no_crew_access_dependence;
    scenario.fuel_dependence &= !args.no_fuel_dependence;
    let sim = Simulation::new(networks, scenario, file.fragility()?, file.repair()?)?;

    let mc = MonteCarloConfig {
        confidence: args.confidence,
        relative_half_width: args.rel_halfwidth,
        min_replications: args.min_reps,
        max_replications: args.max_reps,
        base_seed: args.seed,
    };
    mc.validate()?;

    let mut runs: Vec<StrategyRun> = Vec::new();
    for &strategy in &args.strategy {
        if runs.iter().any(|r| r.strategy == strategy) {
            continue;
        }
        let outcome = run_monte_carlo(&sim, strategy, args.teams, &mc)
            .with_context(|| format!("strategy {strategy}"))?;
        if !outcome.converged {
            eprintln!(
                "warning: {strategy}: interval did not reach the target after {} replications",
                outcome.records.len()
            );
        }
        runs.push(StrategyRun { strategy, outcome });
    }

    let info = RunInfo {
        base_seed: args.seed,
        teams: args.teams,
        confidence: args.confidence,
        relative_half_width: args.rel_halfwidth,
        min_replications: args.min_reps,
        max_replications: args.max_reps,
        crew_access_dependence: sim.scenario.crew_access_dependence,
        fuel_dependence: sim.scenario.fuel_dependence,
    };
    let summary = emit_outputs(&runs, info, &args.out)?;
    for s in &summary.strategies {
        let improvement = s.households.improvement_pct.map_or("-".to_string(), |v| format!("{v:.1}%"));
        println!(
            "{:<14} reps {:>4}  TRL {:>9.2}  improvement {:>7}  lights 100% at {:>7.1} h",
            s.strategy.name(),
            s.replications,
            s.households.mean_trl,
            improvement,
            s.traffic_lights.mean_hours_to_100
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn generate(args: GenerateArgs) -> Result<()> {
    let params = TestbedParams {
        grid_size: args.grid_size,
        households: args.households,
        substations: args.substations,
        lights_fraction: args.lights_fraction,
        seed: args.seed,
        wind_mph: args.wind_mph,
    };
    generate_testbed(&params)?.write_to(&args.out)?;
    println!("wrote testbed to {}", args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Generate(args) => generate(args),
        Command::PlotData { out } => plot_data(&out).map(|written| {
            for p in written {
                println!("wrote {}", p.display());
            }
        }).map_err(Into::into),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(extra: &[&str]) -> Result<Cli, clap::Error> {
        let mut argv = vec![
            "hurrisim", "run", "--power", "p", "--roads", "r", "--couplings", "c", "--scenario", "s",
        ];
        argv.extend_from_slice(extra);
        Cli::try_parse_from(argv)
    }

    fn run_args(cli: Cli) -> RunArgs {
        match cli.command {
            Command::Run(a) => a,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn distance_with_twelve_teams() {
        let a = run_args(parse(&["--strategy", "distance", "--teams", "12", "--seed", "7"]).unwrap());
        assert_eq!(a.strategy, vec![Strategy::DistanceBased]);
        assert_eq!(a.teams, 12);
        assert_eq!(a.seed, 7);
        assert_eq!(a.confidence, 0.90);
        assert_eq!(a.rel_halfwidth, 0.10);
        assert!(!a.no_fuel_dependence);
    }

    #[test]
    fn default_runs_all_strategies() {
        let a = run_args(parse(&["--teams", "3"]).unwrap());
        assert_eq!(a.strategy, Strategy::ALL.to_vec());
    }

    #[test]
    fn unknown_strategy_lists_choices() {
        let err = parse(&["--strategy", "sorted", "--teams", "3"]).unwrap_err().to_string();
        assert!(err.contains("sorted") && err.contains("traffic-light"), "{err}");
    }

    #[test]
    fn confidence_must_be_inside_unit_interval() {
        let err = parse(&["--confidence", "1.5", "--teams", "3"]).unwrap_err().to_string();
        assert!(err.contains("between 0 and 1"), "{err}");
    }

    #[test]
    fn unknown_flags_and_zero_teams_rejected() {
        assert!(parse(&["--teams", "3", "--frobnicate"]).is_err());
        assert!(parse(&["--teams", "0"]).is_err());
        assert!(parse(&[]).is_err());
    }
}
