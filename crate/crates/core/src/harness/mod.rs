//! Configuration, initial data, file formats and the scenario driver.

pub mod config;
pub mod initial;
pub mod scenarios;
pub mod snapshot;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::energetics::{DiagnosticRecord, CSV_HEADER};
use crate::error::{Error, Result};
use crate::fields::{StateA, StateB};
use crate::spectral::TorusGrid;
use crate::timestepper::{run, RunReport, Sink};

pub use config::{Formulation, SimulationConfig};
pub use initial::{generate_initial_data, InitialDataSpec, InitialKind};
pub use scenarios::{run_scenario, Check, Verdict, SCENARIOS};
pub use snapshot::{load_snapshot, write_snapshot};

/// A state of either formulation.
#[derive(Clone, Debug, PartialEq)]
pub enum SimState {
    A(StateA),
    B(StateB),
}

impl SimState {
    pub fn formulation(&self) -> Formulation {
        match self {
            SimState::A(_) => Formulation::A,
            SimState::B(_) => Formulation::B,
        }
    }

    pub fn time(&self) -> f64 {
        match self {
            SimState::A(s) => s.t,
            SimState::B(s) => s.t,
        }
    }

    pub fn check(&self, grid: &TorusGrid) -> Result<()> {
        match self {
            SimState::A(s) => s.check(grid),
            SimState::B(s) => s.check(grid),
        }
    }

    pub fn into_formulation(self, grid: &TorusGrid, f: Formulation) -> Result<SimState> {
        Ok(match (self, f) {
            (SimState::A(s), Formulation::B) => SimState::B(s.to_b(grid)?),
            (SimState::B(s), Formulation::A) => SimState::A(s.to_a(grid)?),
            (s, _) => s,
        })
    }

    pub fn into_a(self, grid: &TorusGrid) -> Result<StateA> {
        match self.into_formulation(grid, Formulation::A)? {
            SimState::A(s) => Ok(s),
            SimState::B(_) => unreachable!(),
        }
    }

    pub fn into_b(self, grid: &TorusGrid) -> Result<StateB> {
        match self.into_formulation(grid, Formulation::B)? {
            SimState::B(s) => Ok(s),
            SimState::A(_) => unreachable!(),
        }
    }
}

/// Writes the diagnostics CSV and numbered snapshots into a directory.
pub struct FileSink<'g> {
    grid: &'g TorusGrid,
    csv: BufWriter<File>,
    snap_dir: PathBuf,
    pub snapshots_written: Vec<PathBuf>,
}

impl<'g> FileSink<'g> {
    pub fn create(grid: &'g TorusGrid, csv_path: &Path, snap_dir: &Path) -> Result<Self> {
        if let Some(parent) = csv_path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut csv = BufWriter::new(File::create(csv_path)?);
        writeln!(csv, "{CSV_HEADER}")?;
        Ok(Self { grid, csv, snap_dir: snap_dir.to_path_buf(), snapshots_written: Vec::new() })
    }

    pub fn finish(mut self) -> Result<Vec<PathBuf>> {
        self.csv.flush()?;
        Ok(self.snapshots_written)
    }

    fn write_snap(&mut self, step: usize, state: SimState) -> Result<()> {
        std::fs::create_dir_all(&self.snap_dir)?;
        let path = self.snap_dir.join(format!("snap_{step:06}.bin"));
        write_snapshot(&path, self.grid, &state)?;
        self.snapshots_written.push(path);
        Ok(())
    }
}

impl Sink<StateA> for FileSink<'_> {
    fn record(&mut self, rec: &DiagnosticRecord) -> Result<()> {
        writeln!(self.csv, "{}", rec.to_csv_row())?;
        Ok(())
    }
    fn snapshot(&mut self, step: usize, state: &StateA) -> Result<()> {
        self.write_snap(step, SimState::A(state.clone()))
    }
}

impl Sink<StateB> for FileSink<'_> {
    fn record(&mut self, rec: &DiagnosticRecord) -> Result<()> {
        writeln!(self.csv, "{}", rec.to_csv_row())?;
        Ok(())
    }
    fn snapshot(&mut self, step: usize, state: &StateB) -> Result<()> {
        self.write_snap(step, SimState::B(state.clone()))
    }
}

/// Result of a configured run.
#[derive(Debug)]
pub struct RunOutcome {
    pub state: SimState,
    pub records: Vec<DiagnosticRecord>,
    pub steps: usize,
    pub failure: Option<Error>,
    pub csv_path: PathBuf,
}

fn wrap<S>(r: RunReport<S>, f: impl Fn(S) -> SimState, csv_path: PathBuf) -> RunOutcome {
    RunOutcome { state: f(r.state), records: r.records, steps: r.steps, failure: r.failure, csv_path }
}

/// Runs `init` with the settings of `cfg`, writing `csv_name` and snapshots
/// (under `snapshots/`) into `out_dir`.
pub fn run_state(cfg: &SimulationConfig, grid: &TorusGrid, init: SimState, out_dir: &Path, csv_name: &str) -> Result<RunOutcome> {
    let csv_path = out_dir.join(csv_name);
    let snap_dir = out_dir.join("snapshots");
    let mut sink = FileSink::create(grid, &csv_path, &snap_dir)?;
    let params = cfg.params();
    let icfg = cfg.integrator();
    let set = cfg.diagnostics();
    let out = match init {
        SimState::A(s) => wrap(run(grid, s, &params, &icfg, &set, &mut sink)?, SimState::A, csv_path),
        SimState::B(s) => wrap(run(grid, s, &params, &icfg, &set, &mut sink)?, SimState::B, csv_path),
    };
    sink.finish()?;
    Ok(out)
}

/// Generates the configured initial data and runs it.
pub fn run_simulation(cfg: &SimulationConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let init = generate_initial_data(&cfg.initial_spec(), &grid, cfg.seed, cfg.formulation)?;
    run_state(cfg, &grid, init, &cfg.out_dir, &cfg.csv_name)
}

/// Reads a diagnostics CSV back into records.
pub fn read_csv(path: &Path) -> Result<Vec<DiagnosticRecord>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        _ => return Err(Error::Config(format!("{}: unexpected CSV header", path.display()))),
    }
    lines.filter(|l| !l.is_empty()).map(DiagnosticRecord::parse_csv_row).collect()
}
