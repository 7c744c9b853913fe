//! Named experiment presets. Each writes its CSV files, snapshots and a
//! `verdict.json` into the output directory.

use std::path::Path;

use serde::Serialize;

use crate::energetics::{DiagnosticRecord, SobolevWeights};
use crate::error::{Error, Result};
use crate::fields::{g_to_f, grad_rows};
use crate::schemes::{
    dealias_radius, mollifier_convergence_study, monolithic_reference, picard_convergence_report, picard_iterate,
    DeformationStage, FrozenVelocity, MollifierStudy, PicardReport,
};
use crate::spectral::{TorusGrid, VectorField};
use crate::stokes::{solve_generalized_stokes, stokes_residuals, w_diagnostic};

use super::config::{Formulation, SimulationConfig};
use super::initial::{band_limited_field, generate_initial_data};
use super::{run_state, RunOutcome, SimState};

pub const SCENARIOS: [&str; 7] = [
    "decay_small_data",
    "formulation_equivalence",
    "constraint_audit",
    "picard_study",
    "mollifier_study",
    "stokes_verify",
    "lifespan_probe",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value ≤ limit`.
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, pass: value <= limit }
    }

    /// Passes when `value ≥ limit`.
    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, pass: value >= limit }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub scenario: String,
    pub pass: bool,
    pub checks: Vec<Check>,
    /// Numerical failure that stopped a run, if any.
    pub failure: Option<String>,
    pub numerical_failure: bool,
    pub reached_t: Option<f64>,
    pub notes: Vec<String>,
}

impl Verdict {
    fn new(scenario: &str) -> Self {
        Self {
            scenario: scenario.into(),
            pass: true,
            checks: Vec::new(),
            failure: None,
            numerical_failure: false,
            reached_t: None,
            notes: Vec::new(),
        }
    }

    fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn absorb_run(&mut self, out: &RunOutcome) {
        self.reached_t = Some(out.state.time());
        if let Some(e) = &out.failure {
            self.failure = Some(e.to_string());
            self.numerical_failure |= e.is_numerical();
        }
    }

    fn finish(mut self) -> Self {
        self.pass = self.failure.is_none() && self.checks.iter().all(|c| c.pass);
        self
    }

    /// 0 pass, 1 failed check, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        if self.numerical_failure {
            3
        } else if self.pass {
            0
        } else {
            1
        }
    }
}

/// Largest relative increase `(x_{k+1} − x_k)/|x_k|` over consecutive rows
/// (0 when the sequence never increases).
pub fn worst_relative_increase(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| {
            let scale = w[0].abs();
            if w[1] <= w[0] {
                0.0
            } else if scale == 0.0 {
                f64::INFINITY
            } else {
                (w[1] - w[0]) / scale
            }
        })
        .fold(0.0, f64::max)
}

fn column(records: &[DiagnosticRecord], f: impl Fn(&DiagnosticRecord) -> f64) -> Vec<f64> {
    records.iter().map(f).collect()
}

fn col_max(records: &[DiagnosticRecord], f: impl Fn(&DiagnosticRecord) -> f64) -> f64 {
    records.iter().map(f).fold(0.0, f64::max)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// Runs a named scenario and writes `verdict.json`.
pub fn run_scenario(name: &str, cfg: &SimulationConfig) -> Result<Verdict> {
    if !SCENARIOS.contains(&name) {
        return Err(Error::UnknownScenario(name.into()));
    }
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let grid = cfg.grid()?;
    let verdict = match name {
        "decay_small_data" => decay_small_data(cfg, &grid)?,
        "formulation_equivalence" => formulation_equivalence(cfg, &grid)?,
        "constraint_audit" => constraint_audit(cfg, &grid)?,
        "picard_study" => picard_study(cfg, &grid)?,
        "mollifier_study" => mollifier_study(cfg, &grid)?,
        "stokes_verify" => stokes_verify(cfg, &grid)?,
        "lifespan_probe" => lifespan_probe(cfg, &grid)?,
        _ => unreachable!(),
    }
    .finish();
    write_json(&cfg.out_dir.join("verdict.json"), &verdict)?;
    Ok(verdict)
}

fn initial(cfg: &SimulationConfig, grid: &TorusGrid, f: Formulation) -> Result<SimState> {
    generate_initial_data(&cfg.initial_spec(), grid, cfg.seed, f)
}

/// Global functional of the reformulated system decays monotonically.
fn decay_small_data(cfg: &SimulationConfig, grid: &TorusGrid) -> Result<Verdict> {
    let mut v = Verdict::new("decay_small_data");
    let init = initial(cfg, grid, Formulation::B)?;
    let out = run_state(cfg, grid, init, &cfg.out_dir, &cfg.csv_name)?;
    v.absorb_run(&out);
    let r = &out.records;
    let e = column(r, |x| x.e_global);
    v.push(Check::at_most("e_global_monotone_rel", worst_relative_increase(&e), 1e-8));
    if let (Some(first), Some(last)) = (e.first(), e.last()) {
        v.push(Check::at_most("e_global_final_over_initial", last / first, 0.9));
    }
    v.push(Check::at_most("e_basic_monotone_rel", worst_relative_increase(&column(r, |x| x.e_basic)), 1e-9));
    v.notes.push(format!("delta = {:e}, s = {}", cfg.delta_value(), cfg.sobolev_s));
    Ok(v)
}

/// Matched data in both formulations; compares `F_A` with `(I + ∇ψ_B)⁻¹`.
fn formulation_equivalence(cfg: &SimulationConfig, grid: &TorusGrid) -> Result<Verdict> {
    let mut v = Verdict::new("formulation_equivalence");
    if !cfg.h_ext.is_zero() {
        return Err(Error::Config("formulation_equivalence needs h_ext = zero".into()));
    }
    let a = initial(cfg, grid, Formulation::A)?;
    let b = initial(cfg, grid, Formulation::B)?;
    let out_a = run_state(cfg, grid, a, &cfg.out_dir.join("formulation_a"), &cfg.csv_name)?;
    let out_b = run_state(cfg, grid, b, &cfg.out_dir.join("formulation_b"), &cfg.csv_name)?;
    v.absorb_run(&out_a);
    v.absorb_run(&out_b);
    super::write_snapshot(&cfg.out_dir.join("final_a.bin"), grid, &out_a.state)?;
    super::write_snapshot(&cfg.out_dir.join("final_b.bin"), grid, &out_b.state)?;
    if let (SimState::A(sa), SimState::B(sb)) = (&out_a.state, &out_b.state) {
        let fb = g_to_f(&grad_rows(grid, &sb.psi))?;
        v.push(Check::at_most("f_gap_max", sa.f.sub(&fb).max_abs(), 1e-5));
        v.push(Check::at_most("v_gap_max", sa.v.sub(&sb.v).max_abs(), 1e-5));
        v.push(Check::at_most("m_gap_max", sa.m.sub(&sb.m).max_abs(), 1e-5));
    }
    Ok(v)
}

/// Sphere, determinant, divergence and curl residuals along a run.
fn constraint_audit(cfg: &SimulationConfig, grid: &TorusGrid) -> Result<Verdict> {
    let mut v = Verdict::new("constraint_audit");
    let init = initial(cfg, grid, cfg.formulation)?;
    let out = run_state(cfg, grid, init, &cfg.out_dir, &cfg.csv_name)?;
    v.absorb_run(&out);
    let r = &out.records;
    let horizon = cfg.t_end.max(1.0);
    v.push(Check::at_most("sphere_res_max", col_max(r, |x| x.sphere_res), 1e-7 * horizon));
    v.push(Check::at_most("det_res_max", col_max(r, |x| x.det_res), 1e-6 * horizon));
    v.push(Check::at_most("div_v_res_max", col_max(r, |x| x.div_v_res), 1e-11));
    v.push(Check::at_most("trG_vs_divpsi_res_max", col_max(r, |x| x.trg_vs_divpsi_res), 1e-13));
    if cfg.formulation == Formulation::B {
        v.push(Check::at_most("curl_res_max", col_max(r, |x| x.curl_res), 1e-11));
    }
    if cfg.h_ext.is_zero() && !cfg.renormalize_m {
        v.push(Check::at_most("e_basic_monotone_rel", worst_relative_increase(&column(r, |x| x.e_basic)), 1e-9));
    }
    Ok(v)
}

#[derive(Serialize)]
struct PicardSummary<'a> {
    primary: &'a PicardReport,
    primary_variant: DeformationStage,
    alternate: &'a PicardReport,
    alternate_variant: DeformationStage,
    e0: f64,
}

/// Picard iterates against the monolithic solution on `[0, picard_t]`.
fn picard_study(cfg: &SimulationConfig, grid: &TorusGrid) -> Result<Verdict> {
    let mut v = Verdict::new("picard_study");
    let init = initial(cfg, grid, Formulation::A)?.into_a(grid)?;
    let params = cfg.params();
    let icfg = cfg.integrator();
    let s = cfg.sobolev_s;
    let reference = monolithic_reference(grid, &init, &params, cfg.picard_t, &icfg)?;
    let other = match cfg.picard_deformation {
        DeformationStage::Frozen => DeformationStage::Transported,
        DeformationStage::Transported => DeformationStage::Frozen,
    };
    let run = picard_iterate(grid, &init, &params, cfg.picard_t, cfg.picard_iterates, &icfg, s, cfg.picard_deformation)?;
    let alt = picard_iterate(grid, &init, &params, cfg.picard_t, cfg.picard_iterates, &icfg, s, other)?;
    let bound = 2.0 * run.e0;
    let rep = picard_convergence_report(grid, &run, &reference, bound, s);
    let alt_rep = picard_convergence_report(grid, &alt, &reference, bound, s);
    std::fs::write(cfg.out_dir.join("picard.csv"), run.to_csv())?;
    std::fs::write(cfg.out_dir.join("picard_alternate.csv"), alt.to_csv())?;
    write_json(
        &cfg.out_dir.join("picard_summary.json"),
        &PicardSummary { primary: &rep, primary_variant: cfg.picard_deformation, alternate: &alt_rep, alternate_variant: other, e0: run.e0 },
    )?;
    let worst_ratio = rep.ratios.iter().filter(|(n, _)| *n >= 2).map(|(_, r)| *r).fold(0.0, f64::max);
    v.push(Check::at_most("successive_ratio_max_from_2", worst_ratio, 0.5));
    v.push(Check::at_most("distance_to_monolithic", rep.distance, 1e-4));
    let worst_bound = run.iterates.iter().skip(1).map(|it| it.sup_energy_with_dissipation).fold(0.0, f64::max);
    v.push(Check::at_most("uniform_energy_bound", worst_bound, bound));
    v.push(Check::at_most("div_v_max", rep.max_div_v, 1e-11));
    v.notes.push(format!("alternate variant distance to monolithic: {:e}", alt_rep.distance));
    Ok(v)
}

/// Truncated LLG runs over increasing cutoffs with the initial velocity
/// frozen.
fn mollifier_study(cfg: &SimulationConfig, grid: &TorusGrid) -> Result<Verdict> {
    let mut v = Verdict::new("mollifier_study");
    let radius = dealias_radius(grid);
    if cfg.cutoffs.iter().any(|&k| k > radius) {
        return Err(Error::Config(format!("cutoffs must not exceed {radius:.4} on this grid")));
    }
    let init = initial(cfg, grid, Formulation::A)?.into_a(grid)?;
    let vs = FrozenVelocity(init.v.clone());
    let study: MollifierStudy =
        mollifier_convergence_study(grid, &cfg.cutoffs, &vs, &init.m, &cfg.h_ext, cfg.sobolev_s, &cfg.integrator(), 4.0)?;
    std::fs::write(cfg.out_dir.join("mollifier.csv"), study.to_csv())?;
    write_json(&cfg.out_dir.join("mollifier_summary.json"), &study)?;
    let min_ratio = study.ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    if !study.ratios.is_empty() {
        v.push(Check::at_least("min_difference_ratio", min_ratio, 4.0));
    }
    let sup = study.rows.iter().map(|r| r.sup_e_eps).fold(0.0, f64::max);
    v.push(Check::at_most("sup_e_eps_over_e0", if study.e0 > 0.0 { sup / study.e0 } else { 0.0 }, 2.2));
    let init_ratio = study.rows.iter().map(|r| r.e_eps_initial).fold(0.0, f64::max);
    v.push(Check::at_most("e_eps_initial_minus_e0", init_ratio - study.e0, 1e-12 * study.e0.max(1.0)));
    Ok(v)
}

#[derive(Serialize)]
struct StokesRow {
    trial: usize,
    momentum_res_rel: f64,
    divergence_res_rel: f64,
    estimate_ratio: f64,
}

/// Measured `(‖w‖_{H²} + ‖q‖_{H¹}) / (‖f‖_{L²} + ‖g‖_{H¹})`.
fn estimate_ratio(grid: &TorusGrid, f: &VectorField, g: &crate::spectral::ScalarField) -> Result<f64> {
    let sol = solve_generalized_stokes(grid, f, g)?;
    let w2 = SobolevWeights::new(grid, 2);
    let w1 = SobolevWeights::new(grid, 1);
    let w0 = SobolevWeights::new(grid, 0);
    let num = w2.norm_sq_vec(grid, &sol.w).sqrt() + w1.norm_sq(grid, &sol.q).sqrt();
    let den = w0.norm_sq_vec(grid, f).sqrt() + w1.norm_sq(grid, g).sqrt();
    Ok(if den == 0.0 { 0.0 } else { num / den })
}

fn random_stokes_data(grid: &TorusGrid, seed: u64, trial: usize) -> (VectorField, crate::spectral::ScalarField) {
    let base = 100 + 10 * trial as u64;
    let band = 4.min(grid.n() / 3);
    let f = VectorField { comps: (0..grid.dim()).map(|i| band_limited_field(grid, band, seed, base + i as u64)).collect() };
    let g = band_limited_field(grid, band, seed, base + 9);
    (f, g)
}

/// Analytic examples, random residual trials, and the resolution study of
/// the estimate constant.
fn stokes_verify(cfg: &SimulationConfig, grid: &TorusGrid) -> Result<Verdict> {
    let mut v = Verdict::new("stokes_verify");
    let g2 = TorusGrid::new(2, grid.n())?;
    let len = g2.len();
    // f = (sin y, 0), g = 0
    let f = VectorField { comps: vec![g2.sample(|x| x[1].sin()), g2.zeros()] };
    let sol = solve_generalized_stokes(&g2, &f, &g2.zeros())?;
    let err = sol.w.sub(&f).max_abs().max(sol.q.max_abs());
    v.push(Check::at_most("example_shear", err, 1e-12));
    // f = 0, g = sin x
    let g = g2.sample(|x| x[0].sin());
    let sol = solve_generalized_stokes(&g2, &VectorField::zeros(2, len), &g)?;
    let w_exact = VectorField { comps: vec![g2.sample(|x| -x[0].cos()), g2.zeros()] };
    let err = sol.w.sub(&w_exact).max_abs().max((&sol.q - &g).max_abs());
    v.push(Check::at_most("example_divergence", err, 1e-12));
    let sol = solve_generalized_stokes(&g2, &VectorField::zeros(2, len), &g2.zeros())?;
    v.push(Check::at_most("example_zero", sol.w.max_abs().max(sol.q.max_abs()), 1e-12));

    let mut rows = Vec::new();
    let mut passed = 0usize;
    for trial in 0..cfg.stokes_trials {
        let (f, g) = random_stokes_data(grid, cfg.seed, trial);
        let sol = solve_generalized_stokes(grid, &f, &g)?;
        let (rm, rd) = stokes_residuals(grid, &sol, &f, &g);
        let rm = rm / f.max_abs().max(1e-300);
        let rd = rd / g.max_abs().max(1e-300);
        if rm <= 1e-10 && rd <= 1e-10 {
            passed += 1;
        }
        rows.push(StokesRow { trial, momentum_res_rel: rm, divergence_res_rel: rd, estimate_ratio: estimate_ratio(grid, &f, &g)? });
    }
    let mut csv = String::from("trial,momentum_res_rel,divergence_res_rel,estimate_ratio\n");
    for r in &rows {
        csv.push_str(&format!("{},{:.16e},{:.16e},{:.16e}\n", r.trial, r.momentum_res_rel, r.divergence_res_rel, r.estimate_ratio));
    }
    std::fs::write(cfg.out_dir.join("stokes.csv"), csv)?;
    v.push(Check::at_least("residual_trials_passed", passed as f64, cfg.stokes_trials as f64));

    let c_fine = rows.iter().map(|r| r.estimate_ratio).fold(0.0, f64::max);
    let coarse = TorusGrid::new(grid.dim(), (grid.n() / 2).max(8) & !1)?;
    let mut c_coarse: f64 = 0.0;
    for trial in 0..cfg.stokes_trials {
        let (f, g) = random_stokes_data(&coarse, cfg.seed, trial);
        c_coarse = c_coarse.max(estimate_ratio(&coarse, &f, &g)?);
    }
    v.push(Check::at_most("estimate_constant_finite", if c_fine.is_finite() { 0.0 } else { 1.0 }, 0.0));
    let spread = if c_coarse > 0.0 { (c_fine / c_coarse).max(c_coarse / c_fine) } else { 1.0 };
    v.push(Check::at_most("estimate_constant_resolution_spread", spread, 2.0));
    v.notes.push(format!("estimate constant: {c_fine:e} (n = {}), {c_coarse:e} (n = {})", grid.n(), coarse.n()));

    // w = νv − ψ closure on the configured initial data
    let state = initial(cfg, grid, Formulation::B)?.into_b(grid)?;
    let wd = w_diagnostic(grid, &state, cfg.nu, cfg.sobolev_s, cfg.dealias)?;
    write_json(&cfg.out_dir.join("w_diagnostic.json"), &wd)?;
    v.push(Check::at_most("w_closure_gap", wd.closure_gap, 1e-8));
    Ok(v)
}

/// Runs until `t_end` or breakdown and reports the time reached.
fn lifespan_probe(cfg: &SimulationConfig, grid: &TorusGrid) -> Result<Verdict> {
    let mut v = Verdict::new("lifespan_probe");
    let init = initial(cfg, grid, cfg.formulation)?;
    let out = run_state(cfg, grid, init, &cfg.out_dir, &cfg.csv_name)?;
    v.absorb_run(&out);
    v.push(Check::at_least("positive_lifespan_steps", out.steps as f64, if cfg.t_end > 0.0 { 1.0 } else { 0.0 }));
    v.notes.push(format!("reached t = {} after {} steps", out.state.time(), out.steps));
    Ok(v)
}
