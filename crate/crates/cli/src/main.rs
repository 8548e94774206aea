use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use planarizer::scenario::{write_csv, RunError, RunOutput, ScenarioError, Telemetry};
use planarizer::suite;
use planarizer::{load_scenario, run, Scenario};

const EXIT_THRESHOLDS: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Simulate the planarizer support system and its controllers.
///
/// Exit codes: 0 ok, 1 suite thresholds not met, 2 input error, 3 numerical
/// failure (non-finite state).
#[derive(Parser, Debug)]
#[command(name = "planarizer", version)]
struct Cli {
    /// Print progress to stderr.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario and write telemetry.csv, metrics.txt and metrics.json.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, env = "PLANARIZER_OUT")]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the bundled reproduction scenarios and grade them.
    Suite {
        #[arg(long, env = "PLANARIZER_OUT")]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Parse and validate a scenario without running it.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

#[derive(Args, Debug, Clone, Copy)]
struct Overrides {
    /// Replace the scenario's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Replace the control period (s).
    #[arg(long)]
    dt_control: Option<f64>,
    /// Replace the physics step (s).
    #[arg(long)]
    dt_physics: Option<f64>,
}

impl Overrides {
    fn apply(&self, sc: &mut Scenario) {
        if let Some(seed) = self.seed {
            sc.rng_seed = seed;
        }
        if let Some(dt) = self.dt_control {
            sc.dt_control = dt;
        }
        if let Some(dt) = self.dt_physics {
            sc.dt_physics = dt;
        }
    }
}

enum Failure {
    Input(String),
    Numerical(String),
    Thresholds,
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    load_scenario(&text).map_err(|e| scenario_error(path, e))
}

fn scenario_error(path: &Path, e: ScenarioError) -> Failure {
    Failure::Input(format!("{}: {e}", path.display()))
}

fn write_metrics(dir: &Path, out: &RunOutput) -> io::Result<()> {
    fs::write(dir.join("metrics.txt"), out.metrics.to_kv_string())?;
    let json = serde_json::to_string_pretty(&out.metrics).map_err(io::Error::other)?;
    fs::write(dir.join("metrics.json"), json + "\n")
}

/// Writes the telemetry of a run; on a numerical failure the partial
/// telemetry is written before the error is returned.
fn write_run(dir: &Path, result: &Result<RunOutput, RunError>) -> Result<(), Failure> {
    fs::create_dir_all(dir)?;
    match result {
        Ok(out) => {
            write_csv(&out.telemetry, dir.join("telemetry.csv"))?;
            write_metrics(dir, out)?;
            Ok(())
        }
        Err(RunError::NonFiniteState { telemetry, .. }) => {
            write_csv(telemetry.as_ref() as &Telemetry, dir.join("telemetry.csv"))?;
            Err(Failure::Numerical(result.as_ref().unwrap_err().to_string()))
        }
        Err(e) => Err(Failure::Input(e.to_string())),
    }
}

fn cmd_run(scenario: &Path, out: &Path, ov: Overrides, verbose: u8) -> Result<(), Failure> {
    let mut sc = load(scenario)?;
    ov.apply(&mut sc);
    sc.validate().map_err(|e| scenario_error(scenario, e))?;
    if verbose > 0 {
        eprintln!("running {} ({} ticks)", sc.name, sc.tick_count());
    }
    let result = run(&sc);
    write_run(out, &result)?;
    if let Ok(o) = &result {
        print!("{}", o.metrics.to_kv_string());
    }
    Ok(())
}

fn cmd_suite(out: &Path, ov: Overrides, verbose: u8) -> Result<(), Failure> {
    let report = suite::run_suite_with(|sc| ov.apply(sc))
        .map_err(|e| Failure::Input(format!("bundled scenario: {e}")))?;
    let mut numerical = None;
    for r in &report.results {
        let dir = out.join(r.name);
        if verbose > 0 {
            eprintln!("{}: {:.3} s, writing {}", r.name, r.elapsed.as_secs_f64(), dir.display());
        }
        match write_run(&dir, &r.output) {
            Ok(()) => {}
            Err(Failure::Numerical(m)) => numerical = Some(format!("{}: {m}", r.name)),
            Err(e) => return Err(e),
        }
    }

    let mut table = String::new();
    table.push_str(&format!(
        "{:<6} {:<10} {:<12} {:<26} {:>14}  {}\n",
        "result", "criterion", "scenario", "metric", "value", "threshold"
    ));
    for c in report.checks() {
        let value = c.value.map_or("absent".to_string(), |v| format!("{v:.6}"));
        table.push_str(&format!(
            "{:<6} {:<10} {:<12} {:<26} {:>14}  {}{}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.criterion,
            c.scenario,
            c.name,
            value,
            c.threshold,
            c.detail.as_ref().map_or(String::new(), |d| format!("  ({d})")),
        ));
    }
    print!("{table}");
    fs::write(out.join("summary.txt"), &table)?;

    if let Some(m) = numerical {
        return Err(Failure::Numerical(m));
    }
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::Thresholds)
    }
}

fn cmd_validate(scenario: &Path) -> Result<(), Failure> {
    let sc = load(scenario)?;
    println!(
        "{}: ok ({} mode, {} s, {} ticks)",
        scenario.display(),
        sc.initial_mode,
        sc.duration,
        sc.tick_count()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { scenario, out, overrides } => cmd_run(scenario, out, *overrides, cli.verbose),
        Command::Suite { out, overrides } => cmd_suite(out, *overrides, cli.verbose),
        Command::Validate { scenario } => cmd_validate(scenario),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Thresholds) => {
            eprintln!("error: one or more acceptance thresholds not met");
            ExitCode::from(EXIT_THRESHOLDS)
        }
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
