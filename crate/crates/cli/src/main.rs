use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mel_core::allocator::{check_feasible, solve, solve_relaxed, Scheme, Violation};
use mel_core::harness::{run_sweep_to_dir, SweepSpec};
use mel_core::model::Mode;
use mel_core::scenarios::{Scenario, ScenarioTemplate};

const EXIT_INFEASIBLE: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "mel",
    version,
    about = "Batch allocation for learning on wireless edge nodes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and report the allocation.
    Solve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = SchemeArg::Analytical)]
        scheme: SchemeArg,
        /// Override the scenario's data placement mode.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Print a JSON report instead of the table.
        #[arg(long)]
        json: bool,
    },
    /// Run a parameter sweep and write CSV results.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a scenario file from a config.
    Gen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Analytical,
    Eta,
    Oracle,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Analytical => Scheme::Analytical,
            SchemeArg::Eta => Scheme::Eta,
            SchemeArg::Oracle => Scheme::Oracle,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Parallel,
    Distributed,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Parallel => Mode::TaskParallelization,
            ModeArg::Distributed => Mode::DistributedDatasets,
        }
    }
}

#[derive(Serialize)]
struct NodeReport<'a> {
    id: &'a str,
    batch: u64,
    time_s: f64,
    slack_s: f64,
}

#[derive(Serialize)]
struct SolveReport<'a> {
    scheme: Scheme,
    mode: Mode,
    clock_s: f64,
    total_samples: u64,
    tau: u64,
    feasible: bool,
    relaxed_tau: Option<f64>,
    nodes: Vec<NodeReport<'a>>,
    violations: Vec<Violation>,
}

fn run_solve(
    scenario: &PathBuf,
    scheme: Scheme,
    mode: Option<Mode>,
    json: bool,
) -> anyhow::Result<bool> {
    let text =
        fs::read_to_string(scenario).with_context(|| format!("reading {}", scenario.display()))?;
    let scenario = Scenario::from_json(&text)?;
    let mode = mode.unwrap_or(scenario.cycle.mode);
    let problem = scenario.problem_with(mode, scenario.cycle.clock_s)?;
    let alloc = solve(&problem, scheme);
    let report = check_feasible(&problem, &alloc)?;

    let out = SolveReport {
        scheme,
        mode,
        clock_s: problem.clock_s(),
        total_samples: problem.total_samples(),
        tau: alloc.tau,
        feasible: alloc.feasible,
        relaxed_tau: solve_relaxed(&problem).ok().map(|r| r.tau_real),
        nodes: scenario
            .nodes
            .iter()
            .zip(&alloc.d_int)
            .zip(&alloc.per_node_time)
            .map(|((n, &batch), &time_s)| NodeReport {
                id: &n.id,
                batch,
                time_s,
                slack_s: problem.clock_s() - time_s,
            })
            .collect(),
        violations: if alloc.feasible {
            report.violations
        } else {
            Vec::new()
        },
    };

    if json {
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        println!("scheme        {}", out.scheme);
        println!("clock         {} s", out.clock_s);
        println!("samples       {}", out.total_samples);
        match out.relaxed_tau {
            Some(t) => println!("relaxed tau   {t}"),
            None => println!("relaxed tau   infeasible"),
        }
        println!("tau           {}", out.tau);
        println!("feasible      {}", out.feasible);
        println!();
        println!(
            "{:<12} {:>10} {:>14} {:>14}",
            "node", "batch", "time_s", "slack_s"
        );
        for n in &out.nodes {
            println!(
                "{:<12} {:>10} {:>14.6} {:>14.6}",
                n.id, n.batch, n.time_s, n.slack_s
            );
        }
    }
    Ok(alloc.feasible)
}

fn run() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve {
            scenario,
            scheme,
            mode,
            json,
        } => {
            let feasible = run_solve(&scenario, scheme.into(), mode.map(Into::into), json)?;
            Ok(if feasible {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_INFEASIBLE)
            })
        }
        Command::Sweep { spec, out } => {
            let text =
                fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let spec = SweepSpec::from_json(&text)?;
            let rows = run_sweep_to_dir(&spec, &out)?;
            eprintln!("wrote {} summary rows to {}", rows.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Gen { config, seed, out } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let template: ScenarioTemplate = serde_json::from_str(&text)?;
            let scenario = template.generate(seed)?;
            fs::write(&out, scenario.to_json()? + "\n")
                .with_context(|| format!("writing {}", out.display()))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
