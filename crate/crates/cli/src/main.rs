use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use magel::harness::{load_snapshot, run_scenario, run_simulation, SimState, SimulationConfig, SCENARIOS};
use magel::energetics::{constraints_a, constraints_b};
use magel::Error;

#[derive(Parser)]
#[command(name = "magel", version, about = "Pseudospectral magnetoelastic flow on the periodic torus")]
struct Cli {
    /// Override the RNG seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory of the config.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the configured initial data and write diagnostics.
    Run { config: PathBuf },
    /// Run a named scenario and write its verdict.
    Scenario { name: String, config: PathBuf },
    /// Print the header and summary statistics of a snapshot.
    Inspect { snapshot: PathBuf },
}

fn load_config(path: &std::path::Path, cli: &Cli) -> Result<SimulationConfig, Error> {
    let mut cfg = SimulationConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = &cli.out_dir {
        cfg.out_dir = d.clone();
    }
    Ok(cfg)
}

fn error_code(e: &Error) -> u8 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}

fn real_main(cli: &Cli) -> Result<u8, Error> {
    match &cli.cmd {
        Command::Run { config } => {
            let cfg = load_config(config, cli)?;
            let out = run_simulation(&cfg)?;
            if !cli.quiet {
                println!("steps: {}, t = {}", out.steps, out.state.time());
                println!("diagnostics: {}", out.csv_path.display());
            }
            if let Some(e) = &out.failure {
                eprintln!("run stopped: {e}");
                return Ok(if e.is_numerical() { 3 } else { 1 });
            }
            Ok(0)
        }
        Command::Scenario { name, config } => {
            if !SCENARIOS.contains(&name.as_str()) {
                eprintln!("unknown scenario {name:?}; available: {}", SCENARIOS.join(", "));
                return Ok(2);
            }
            let cfg = load_config(config, cli)?;
            let v = run_scenario(name, &cfg)?;
            if !cli.quiet {
                for c in &v.checks {
                    println!("{} {}: {:e} (limit {:e})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.limit);
                }
                for n in &v.notes {
                    println!("note: {n}");
                }
                println!("verdict: {}", if v.pass { "pass" } else { "fail" });
            }
            if let Some(f) = &v.failure {
                eprintln!("run stopped: {f}");
            }
            Ok(v.exit_code() as u8)
        }
        Command::Inspect { snapshot } => {
            let (grid, state) = load_snapshot(snapshot)?;
            let res = match &state {
                SimState::A(s) => constraints_a(&grid, s, 2)?,
                SimState::B(s) => constraints_b(&grid, s, 2)?,
            };
            if !cli.quiet {
                println!("formulation {:?}, dim {}, n {}, t = {}", state.formulation(), grid.dim(), grid.n(), state.time());
                match &state {
                    SimState::A(s) => println!("max|v| = {:e}, max|F| = {:e}", s.v.max_abs(), s.f.max_abs()),
                    SimState::B(s) => println!("max|v| = {:e}, max|psi| = {:e}", s.v.max_abs(), s.psi.max_abs()),
                }
                println!("{}", serde_json::to_string_pretty(&res)?);
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match real_main(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_code(&e))
        }
    }
}
