//! Two-stage second-order implicit-explicit integration.
//!
//! The stiff linear parts (`νΔv`, `ΔM`, `κΔF`) are solved exactly mode by
//! mode with `(1 − c γ dt Δ)⁻¹`; everything else is explicit. The tableau is
//! the ARS(2,2,2) pair with `γ = 1 − 1/√2`, `δ = 1 − 1/(2γ)`, which is
//! stiffly accurate, so the last stage is the new state.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::dynamics::Dynamics;
use crate::energetics::{diagnose_a, diagnose_b, DiagnosticRecord, DiagnosticSettings};
use crate::error::{Error, Result};
use crate::fields::{renormalize_m, PhysParams, StateA, StateB};
use crate::spectral::{MatrixField, ScalarField, TorusGrid, VectorField};

pub const IMEX_GAMMA: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
pub const IMEX_DELTA: f64 = 1.0 - 1.0 / (2.0 * IMEX_GAMMA);

/// Stage times as fractions of `dt`.
pub const STAGE_TIMES: [f64; 2] = [0.0, IMEX_GAMMA];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Imex2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub renormalize_m: bool,
    pub cfl_guard: f64,
    /// Steps between snapshots, 0 disables them.
    pub snapshot_every: usize,
    pub diag_every: usize,
    pub dealias: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 1.0,
            scheme: Scheme::Imex2,
            renormalize_m: false,
            cfl_guard: 0.5,
            snapshot_every: 0,
            diag_every: 1,
            dealias: true,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if !(self.cfl_guard > 0.0 && self.cfl_guard <= 1.0) {
            return Err(Error::InvalidParameter(format!("cfl_guard must lie in (0, 1], got {}", self.cfl_guard)));
        }
        if self.diag_every == 0 {
            return Err(Error::InvalidParameter("diag_every must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of fixed steps covering `[0, t_end]`.
    pub fn n_steps(&self) -> usize {
        if self.t_end == 0.0 {
            0
        } else {
            (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize
        }
    }
}

fn diffusion_solve(grid: &TorusGrid, rhs: Vec<ScalarField>, coeffs: &[f64], a: f64) -> Vec<ScalarField> {
    rhs.into_iter()
        .zip(coeffs)
        .map(|(f, &c)| {
            if c == 0.0 {
                return f;
            }
            let mut s = grid.forward(&f);
            for (idx, z) in s.coeffs.iter_mut().enumerate() {
                *z /= 1.0 + a * c * grid.ksq(idx);
            }
            grid.backward(&s)
        })
        .collect()
}

fn project(grid: &TorusGrid, u: &mut [ScalarField], range: &Option<Range<usize>>) {
    if let Some(r) = range {
        let v = VectorField { comps: u[r.clone()].to_vec() };
        let p = grid.leray_project(&v);
        for (dst, src) in u[r.clone()].iter_mut().zip(p.comps) {
            *dst = src;
        }
    }
}

/// One IMEX step on a flat list of components.
///
/// `coeffs[c]` multiplies `Δ` in the implicit part of component `c`;
/// `explicit(stage, U)` returns the explicit tendency at stage 0 or 1.
/// Components in `project` are Leray-projected after each stage.
pub fn imex_step(
    grid: &TorusGrid,
    dt: f64,
    u: &[ScalarField],
    coeffs: &[f64],
    project_range: Option<Range<usize>>,
    mut explicit: impl FnMut(usize, &[ScalarField]) -> Result<Vec<ScalarField>>,
) -> Result<Vec<ScalarField>> {
    let (g, dl) = (IMEX_GAMMA, IMEX_DELTA);
    let e1 = explicit(0, u)?;
    let rhs2 = u
        .iter()
        .zip(&e1)
        .map(|(a, e)| {
            let mut r = a.clone();
            r.axpy(g * dt, e);
            r
        })
        .collect();
    let mut u2 = diffusion_solve(grid, rhs2, coeffs, g * dt);
    project(grid, &mut u2, &project_range);
    let e2 = explicit(1, &u2)?;
    let w = (1.0 - g) / g;
    let rhs3 = (0..u.len())
        .map(|c| {
            let mut r = u[c].clone();
            r.axpy(dt * dl - (1.0 - g) * dt, &e1[c]);
            r.axpy(dt * (1.0 - dl), &e2[c]);
            r.axpy(w, &u2[c]);
            r.axpy(-w, &u[c]);
            r
        })
        .collect();
    let mut u3 = diffusion_solve(grid, rhs3, coeffs, g * dt);
    project(grid, &mut u3, &project_range);
    Ok(u3)
}

pub(crate) fn flatten_a(s: &StateA) -> Vec<ScalarField> {
    s.v.comps.iter().chain(&s.f.entries).chain(&s.m.comps).cloned().collect()
}

pub(crate) fn unflatten_a(d: usize, t: f64, u: &[ScalarField]) -> StateA {
    let dd = d * d;
    StateA {
        t,
        v: VectorField { comps: u[..d].to_vec() },
        f: MatrixField { dim: d, entries: u[d..d + dd].to_vec() },
        m: VectorField { comps: u[d + dd..].to_vec() },
    }
}

pub(crate) fn flatten_b(s: &StateB) -> Vec<ScalarField> {
    s.v.comps.iter().chain(&s.psi.comps).chain(&s.m.comps).cloned().collect()
}

pub(crate) fn unflatten_b(d: usize, t: f64, u: &[ScalarField]) -> StateB {
    StateB {
        t,
        v: VectorField { comps: u[..d].to_vec() },
        psi: VectorField { comps: u[d..2 * d].to_vec() },
        m: VectorField { comps: u[2 * d..].to_vec() },
    }
}

/// `dt·max|v|/h`
pub fn cfl_number(grid: &TorusGrid, v: &VectorField, dt: f64) -> f64 {
    dt * v.pointwise_norm().max_abs() / grid.spacing()
}

fn check_cfl(grid: &TorusGrid, v: &VectorField, cfg: &IntegratorConfig) -> Result<()> {
    let cfl = cfl_number(grid, v, cfg.dt);
    if cfl.is_nan() {
        return Err(Error::BlowUp { t: f64::NAN });
    }
    if cfl > cfg.cfl_guard {
        return Err(Error::Cfl { cfl, limit: cfg.cfl_guard });
    }
    Ok(())
}

pub fn step_a(grid: &TorusGrid, state: &StateA, params: &PhysParams, cfg: &IntegratorConfig) -> Result<StateA> {
    state.check(grid)?;
    check_cfl(grid, &state.v, cfg)?;
    let d = grid.dim();
    let dyn_ = Dynamics::new(grid, cfg.dealias);
    let mut coeffs = vec![params.nu; d];
    coeffs.extend(std::iter::repeat_n(params.kappa, d * d));
    coeffs.extend([1.0; 3]);
    let t0 = state.t;
    let u = flatten_a(state);
    let out = imex_step(grid, cfg.dt, &u, &coeffs, Some(0..d), |stage, x| {
        let s = unflatten_a(d, t0 + STAGE_TIMES[stage] * cfg.dt, x);
        Ok(flatten_a_rhs(dyn_.explicit_a(&s, params)))
    })?;
    let mut next = unflatten_a(d, t0 + cfg.dt, &out);
    if !next.is_finite() {
        return Err(Error::BlowUp { t: next.t });
    }
    if cfg.renormalize_m {
        next.m = renormalize_m(&next.m)?;
    }
    Ok(next)
}

fn flatten_a_rhs(r: crate::dynamics::RhsA) -> Vec<ScalarField> {
    r.dv.comps.into_iter().chain(r.df.entries).chain(r.dm.comps).collect()
}

/// Reformulated system; requires `H_ext = 0`.
pub fn step_b(grid: &TorusGrid, state: &StateB, params: &PhysParams, cfg: &IntegratorConfig) -> Result<StateB> {
    if !params.h_ext.is_zero() {
        return Err(Error::InvalidParameter("the reformulated system has no external field".into()));
    }
    state.check(grid)?;
    check_cfl(grid, &state.v, cfg)?;
    let d = grid.dim();
    let dyn_ = Dynamics::new(grid, cfg.dealias);
    let mut coeffs = vec![params.nu; d];
    coeffs.extend(std::iter::repeat_n(0.0, d));
    coeffs.extend([1.0; 3]);
    let t0 = state.t;
    let u = flatten_b(state);
    let out = imex_step(grid, cfg.dt, &u, &coeffs, Some(0..d), |stage, x| {
        let s = unflatten_b(d, t0 + STAGE_TIMES[stage] * cfg.dt, x);
        let r = dyn_.explicit_b(&s)?;
        Ok(r.dv.comps.into_iter().chain(r.dpsi.comps).chain(r.dm.comps).collect())
    })?;
    let mut next = unflatten_b(d, t0 + cfg.dt, &out);
    if !next.is_finite() {
        return Err(Error::BlowUp { t: next.t });
    }
    if cfg.renormalize_m {
        next.m = renormalize_m(&next.m)?;
    }
    Ok(next)
}

/// A state the generic driver can advance and diagnose.
pub trait Evolve: Clone {
    fn time(&self) -> f64;
    fn advance(&self, grid: &TorusGrid, params: &PhysParams, cfg: &IntegratorConfig) -> Result<Self>;
    fn diagnose(&self, grid: &TorusGrid, params: &PhysParams, set: &DiagnosticSettings) -> Result<DiagnosticRecord>;
}

impl Evolve for StateA {
    fn time(&self) -> f64 {
        self.t
    }
    fn advance(&self, grid: &TorusGrid, params: &PhysParams, cfg: &IntegratorConfig) -> Result<Self> {
        step_a(grid, self, params, cfg)
    }
    fn diagnose(&self, grid: &TorusGrid, params: &PhysParams, set: &DiagnosticSettings) -> Result<DiagnosticRecord> {
        diagnose_a(grid, self, params, set)
    }
}

impl Evolve for StateB {
    fn time(&self) -> f64 {
        self.t
    }
    fn advance(&self, grid: &TorusGrid, params: &PhysParams, cfg: &IntegratorConfig) -> Result<Self> {
        step_b(grid, self, params, cfg)
    }
    fn diagnose(&self, grid: &TorusGrid, params: &PhysParams, set: &DiagnosticSettings) -> Result<DiagnosticRecord> {
        diagnose_b(grid, self, params.nu, set)
    }
}

/// Receives diagnostic rows and snapshots as the run proceeds.
pub trait Sink<S> {
    fn record(&mut self, _rec: &DiagnosticRecord) -> Result<()> {
        Ok(())
    }
    fn snapshot(&mut self, _step: usize, _state: &S) -> Result<()> {
        Ok(())
    }
}

/// Discards everything.
pub struct NullSink;

impl<S> Sink<S> for NullSink {}

/// Outcome of [`run`]: the last good state, all rows, and the failure if the
/// run stopped early.
#[derive(Debug)]
pub struct RunReport<S> {
    pub state: S,
    pub records: Vec<DiagnosticRecord>,
    pub steps: usize,
    pub failure: Option<Error>,
}

impl<S: Evolve> RunReport<S> {
    /// Time of the last accepted state.
    pub fn reached_time(&self) -> f64 {
        self.state.time()
    }

    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Steps from `init` to `t_end`. Step and diagnostic failures end the run
/// and are stored in the report with their time; sink errors are returned.
pub fn run<S: Evolve>(
    grid: &TorusGrid,
    init: S,
    params: &PhysParams,
    cfg: &IntegratorConfig,
    set: &DiagnosticSettings,
    sink: &mut dyn Sink<S>,
) -> Result<RunReport<S>> {
    cfg.validate()?;
    params.validate()?;
    let n = cfg.n_steps();
    let mut report = RunReport { state: init, records: Vec::new(), steps: 0, failure: None };

    let emit = |report: &mut RunReport<S>, sink: &mut dyn Sink<S>| -> Result<bool> {
        match report.state.diagnose(grid, params, set) {
            Ok(rec) if rec.is_valid() => {
                sink.record(&rec)?;
                report.records.push(rec);
                Ok(true)
            }
            Ok(rec) => {
                report.failure = Some(Error::StepFailed { t: rec.t, source: Box::new(Error::BlowUp { t: rec.t }) });
                Ok(false)
            }
            Err(e) => {
                let t = report.state.time();
                report.failure = Some(Error::StepFailed { t, source: Box::new(e) });
                Ok(false)
            }
        }
    };

    if !emit(&mut report, sink)? {
        return Ok(report);
    }
    if cfg.snapshot_every > 0 {
        sink.snapshot(0, &report.state)?;
    }
    for k in 1..=n {
        match report.state.advance(grid, params, cfg) {
            Ok(next) => report.state = next,
            Err(e) => {
                let t = report.state.time();
                report.failure = Some(Error::StepFailed { t, source: Box::new(e) });
                return Ok(report);
            }
        }
        report.steps = k;
        if (k % cfg.diag_every == 0 || k == n) && !emit(&mut report, sink)? {
            return Ok(report);
        }
        if cfg.snapshot_every > 0 && (k % cfg.snapshot_every == 0 || k == n) {
            sink.snapshot(k, &report.state)?;
        }
    }
    Ok(report)
}
