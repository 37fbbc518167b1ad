use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cohesive::commands::{self, Corruption, ProblemDump, RunOptions};
use cohesive::output::{self, num};
use cohesive::{CliError, Scenario};
use cohesive_core::StepOptions;

/// Quasistatic cohesive fracture with fatigue on a prescribed crack line.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write trajectory.csv and summary.json.
    Run {
        config: PathBuf,
        /// Also write mesh.csv and interface.csv.
        #[arg(long)]
        dump_model: bool,
        /// Write the step problem solved at this step as problem_<N>.json.
        #[arg(long, value_name = "N")]
        dump_step: Option<usize>,
    },
    /// Run a scenario and audit it; writes audit.json.
    Verify { config: PathBuf },
    /// Refinement table over several step counts; writes refinement.csv.
    Sweep {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        ks: Vec<usize>,
        /// Reference step count (default: the largest of --ks).
        #[arg(long)]
        reference: Option<usize>,
    },
    /// Solve a dumped step problem with the solver and the brute-force oracle.
    OracleCompare {
        problem: PathBuf,
        /// CSV destination (default: oracle_compare.csv in the output directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare a triangle-wave run with the scalar cycle map; writes fatigue.csv.
    DemoFatigue { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run {
            config,
            dump_model,
            dump_step,
        } => {
            let scenario = Scenario::load(&config)?;
            let outcome = commands::run_scenario(
                &scenario,
                RunOptions {
                    dump_model,
                    dump_step,
                },
            )?;
            let t = &outcome.trajectory;
            println!(
                "{}: {} steps, {} nodes, output in {}",
                scenario.name,
                t.steps,
                t.nodes(),
                outcome.dir.display()
            );
            if let Some(tb) = cohesive_core::verify::first_rupture_time(t) {
                println!("first rupture at t = {}", num(tb));
            }
            println!("max drift {} (eta {})", num(t.max_drift()), num(t.eta));
        }
        Command::Verify { config } => {
            let scenario = Scenario::load(&config)?;
            let corruption = match std::env::var("COHESIVE_TEST_CORRUPT") {
                Ok(s) => Some(
                    s.parse::<Corruption>()
                        .map_err(|m| CliError::config("COHESIVE_TEST_CORRUPT", m))?,
                ),
                Err(_) => None,
            };
            let (outcome, report) = commands::verify_scenario(&scenario, corruption)?;
            print!("{}", commands::audit_text(&report));
            println!(
                "audit written to {}",
                outcome.dir.join("audit.json").display()
            );
            if !report.passed() {
                let failed: Vec<&str> = report
                    .checks
                    .iter()
                    .filter(|c| !c.passed)
                    .map(|c| c.name.as_str())
                    .collect();
                return Err(CliError::Audit(failed.join(", ")));
            }
        }
        Command::Sweep {
            config,
            ks,
            reference,
        } => {
            let scenario = Scenario::load(&config)?;
            let rows = commands::sweep_scenario(&scenario, &ks, reference)?;
            print!("{}", output::refinement_csv(&rows));
        }
        Command::OracleCompare { problem, out } => {
            let text = std::fs::read_to_string(&problem).map_err(|e| CliError::io(&problem, e))?;
            let dump: ProblemDump = serde_json::from_str(&text).map_err(|e| CliError::Config {
                key: None,
                message: e.to_string(),
            })?;
            let cmp = commands::oracle_compare(&dump, &StepOptions::default())?;
            let csv = cmp.csv();
            let path = out.unwrap_or_else(|| {
                std::env::var_os("COHESIVE_OUT")
                    .map(PathBuf::from)
                    .unwrap_or_default()
                    .join("oracle_compare.csv")
            });
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            }
            std::fs::write(&path, &csv).map_err(|e| CliError::io(&path, e))?;
            print!("{csv}");
        }
        Command::DemoFatigue { config } => {
            let scenario = Scenario::load(&config)?;
            let (outcome, demo) = commands::demo_fatigue(&scenario)?;
            let level = 0.9 * demo.law.kappa;
            let show = |c: Option<usize>| c.map_or("never".to_owned(), |c| c.to_string());
            println!(
                "reduced stiffness s = {}, amplitude A = {}",
                num(demo.stiffness),
                num(demo.amplitude)
            );
            println!(
                "g(V) first reaches 0.9 kappa: run cycle {}, recursion cycle {}",
                show(demo.first_cycle_run(level)),
                show(demo.first_cycle_recursion(level))
            );
            println!(
                "fatigue table written to {}",
                outcome.dir.join("fatigue.csv").display()
            );
        }
    }
    Ok(())
}
