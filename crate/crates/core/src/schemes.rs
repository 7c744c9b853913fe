//! The two construction procedures as solvers: the Fourier-truncated LLG
//! equation with a prescribed velocity, and the staged Picard iteration for
//! the full system. Both reuse the IMEX step of [`crate::timestepper`].

use serde::Serialize;

use crate::dynamics::Dynamics;
use crate::energetics::{SobolevWeights, local_functionals};
use crate::error::{Error, Result};
use crate::fields::{sphere_residual, ExternalField, PhysParams, StateA};
use crate::spectral::{ScalarField, TorusGrid, VectorField};
use crate::timestepper::{flatten_a, imex_step, step_a, unflatten_a, IntegratorConfig, STAGE_TIMES};

/// Velocity prescribed at step `k`, stage `stage`, time `t`.
pub trait VelocitySource {
    fn velocity(&self, k: usize, stage: usize, t: f64) -> VectorField;
}

/// A time-independent velocity.
pub struct FrozenVelocity(pub VectorField);

impl VelocitySource for FrozenVelocity {
    fn velocity(&self, _k: usize, _stage: usize, _t: f64) -> VectorField {
        self.0.clone()
    }
}

/// Velocity given as a function of time.
pub struct TimeVelocity<F: Fn(f64) -> VectorField>(pub F);

impl<F: Fn(f64) -> VectorField> VelocitySource for TimeVelocity<F> {
    fn velocity(&self, _k: usize, _stage: usize, t: f64) -> VectorField {
        (self.0)(t)
    }
}

/// Largest `|ξ|` kept by the 2/3 mask.
pub fn dealias_radius(grid: &TorusGrid) -> f64 {
    grid.max_dealiased_ksq().sqrt()
}

/// One mollified run.
#[derive(Clone, Debug, Serialize)]
pub struct MollifierRun {
    pub cutoff: f64,
    pub times: Vec<f64>,
    /// `‖∇M^ε‖²_{H^s} + ‖M^ε − J_ε M₀‖²_{L²}`
    pub e_eps: Vec<f64>,
    /// `‖ΔM^ε‖²_{H^s}`
    pub d_eps: Vec<f64>,
    /// `‖∇M₀‖²_{H^s}` of the untruncated data.
    pub e0: f64,
    #[serde(skip)]
    pub snapshots: Vec<(f64, VectorField)>,
    #[serde(skip)]
    pub final_m: VectorField,
    pub final_t: f64,
    /// Time at which non-finite values appeared.
    pub blow_up_at: Option<f64>,
}

impl MollifierRun {
    pub fn sup_energy(&self) -> f64 {
        self.e_eps.iter().cloned().fold(0.0, f64::max)
    }
}

/// Integrates `∂_t M = J[−v·∇M + Γ(M)M − M×(ΔM + H)] + ΔM + H` from
/// `J M₀`, where `J` keeps the modes with `|ξ| ≤ cutoff`.
#[allow(clippy::too_many_arguments)]
pub fn solve_llg_given_v(
    grid: &TorusGrid,
    v_source: &dyn VelocitySource,
    m0: &VectorField,
    h_ext: &ExternalField,
    cutoff: f64,
    s: usize,
    cfg: &IntegratorConfig,
) -> Result<MollifierRun> {
    cfg.validate()?;
    if !(cutoff > 0.0 && cutoff <= dealias_radius(grid) + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "cutoff {cutoff} must lie in (0, {:.4}]",
            dealias_radius(grid)
        )));
    }
    if m0.ncomp() != 3 || m0.comps.iter().any(|c| c.len() != grid.len()) {
        return Err(Error::ShapeMismatch("M0 must have 3 components on the grid".into()));
    }
    let res = sphere_residual(m0);
    if res > 1e-8 {
        return Err(Error::InvalidParameter(format!("|M0| deviates from 1 by {res:e}")));
    }
    let dy = Dynamics::new(grid, cfg.dealias);
    let ws = SobolevWeights::new(grid, s);
    let w0 = SobolevWeights::new(grid, 0);
    let jm0 = grid.truncate_vec(m0, cutoff);
    let energy = |m: &VectorField| -> (f64, f64) {
        let e = ws.grad_norm_sq(grid, m) + w0.norm_sq_vec(grid, &m.sub(&jm0));
        (e, ws.lap_norm_sq(grid, m))
    };
    let mut run = MollifierRun {
        cutoff,
        times: Vec::new(),
        e_eps: Vec::new(),
        d_eps: Vec::new(),
        e0: ws.grad_norm_sq(grid, m0),
        snapshots: Vec::new(),
        final_m: jm0.clone(),
        final_t: 0.0,
        blow_up_at: None,
    };
    let record = |run: &mut MollifierRun, t: f64, m: &VectorField| {
        let (e, d) = energy(m);
        run.times.push(t);
        run.e_eps.push(e);
        run.d_eps.push(d);
    };
    let n = cfg.n_steps();
    let mut m = jm0.clone();
    record(&mut run, 0.0, &m);
    if cfg.snapshot_every > 0 {
        run.snapshots.push((0.0, m.clone()));
    }
    for k in 0..n {
        let t0 = k as f64 * cfg.dt;
        let out = imex_step(grid, cfg.dt, &m.comps, &[1.0; 3], None, |stage, x| {
            let t = t0 + STAGE_TIMES[stage] * cfg.dt;
            let v = v_source.velocity(k, stage, t);
            let h = h_ext.sample(grid, t);
            let mm = VectorField { comps: x.to_vec() };
            Ok(dy.llg_explicit(Some(&v), &mm, &h, Some(cutoff)).comps)
        })?;
        let next = VectorField { comps: out };
        let t1 = (k + 1) as f64 * cfg.dt;
        if !next.is_finite() {
            run.blow_up_at = Some(t1);
            break;
        }
        m = next;
        run.final_t = t1;
        if (k + 1) % cfg.diag_every == 0 || k + 1 == n {
            record(&mut run, t1, &m);
        }
        if cfg.snapshot_every > 0 && ((k + 1) % cfg.snapshot_every == 0 || k + 1 == n) {
            run.snapshots.push((t1, m.clone()));
        }
    }
    run.final_m = m;
    Ok(run)
}

#[derive(Clone, Debug, Serialize)]
pub struct MollifierRow {
    pub cutoff: f64,
    /// `‖M^{K_i} − M^{K_{i+1}}‖_{L²}` at the final time.
    pub diff_to_next: Option<f64>,
    pub e_eps_initial: f64,
    pub sup_e_eps: f64,
    pub final_t: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MollifierStudy {
    pub rows: Vec<MollifierRow>,
    pub e0: f64,
    /// Successive ratios `diff_i / diff_{i+1}`.
    pub ratios: Vec<f64>,
    pub differences_decrease: bool,
    pub min_ratio_ok: bool,
    pub energy_bound_ok: bool,
    pub initial_bound_ok: bool,
    pub pass: bool,
}

impl MollifierStudy {
    pub const CSV_HEADER: &'static str = "cutoff,diff_to_next,e_eps_initial,sup_e_eps,final_t";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let diff = r.diff_to_next.map(|d| format!("{d:.16e}")).unwrap_or_default();
            out.push_str(&format!("{:.16e},{},{:.16e},{:.16e},{:.16e}\n", r.cutoff, diff, r.e_eps_initial, r.sup_e_eps, r.final_t));
        }
        out
    }
}

/// Runs every cutoff on the same data and compares consecutive final states.
/// Passes when the differences shrink by at least `min_ratio` per step,
/// `E_ε(0) ≤ E₀`, and `sup_t E_ε ≤ 2.2 E₀`.
#[allow(clippy::too_many_arguments)]
pub fn mollifier_convergence_study(
    grid: &TorusGrid,
    cutoffs: &[f64],
    v_source: &dyn VelocitySource,
    m0: &VectorField,
    h_ext: &ExternalField,
    s: usize,
    cfg: &IntegratorConfig,
    min_ratio: f64,
) -> Result<MollifierStudy> {
    if cutoffs.is_empty() || cutoffs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("cutoffs must be non-empty and increasing".into()));
    }
    let runs = cutoffs
        .iter()
        .map(|&k| solve_llg_given_v(grid, v_source, m0, h_ext, k, s, cfg))
        .collect::<Result<Vec<_>>>()?;
    if let Some(t) = runs.iter().find_map(|r| r.blow_up_at) {
        return Err(Error::BlowUp { t });
    }
    let w0 = SobolevWeights::new(grid, 0);
    let e0 = runs[0].e0;
    let mut rows = Vec::new();
    for (i, r) in runs.iter().enumerate() {
        let diff = runs.get(i + 1).map(|next| w0.norm_sq_vec(grid, &r.final_m.sub(&next.final_m)).sqrt());
        rows.push(MollifierRow {
            cutoff: r.cutoff,
            diff_to_next: diff,
            e_eps_initial: r.e_eps[0],
            sup_e_eps: r.sup_energy(),
            final_t: r.final_t,
        });
    }
    let diffs: Vec<f64> = rows.iter().filter_map(|r| r.diff_to_next).collect();
    let ratios: Vec<f64> = diffs.windows(2).map(|w| w[0] / w[1]).collect();
    let differences_decrease = diffs.windows(2).all(|w| w[1] < w[0]);
    let min_ratio_ok = ratios.iter().all(|&r| r >= min_ratio);
    let energy_bound_ok = rows.iter().all(|r| r.sup_e_eps <= 2.2 * e0);
    let initial_bound_ok = rows.iter().all(|r| r.e_eps_initial <= e0 * (1.0 + 1e-12));
    Ok(MollifierStudy {
        rows,
        e0,
        ratios,
        differences_decrease,
        min_ratio_ok,
        energy_bound_ok,
        initial_bound_ok,
        pass: differences_decrease && min_ratio_ok && energy_bound_ok && initial_bound_ok,
    })
}

/// How the deformation stage treats `F`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeformationStage {
    /// `∂_t F^{n+1} = −v^n·∇F^n + ∇v^n F^n`: a quadrature of level-n data.
    #[default]
    Frozen,
    /// `∂_t F^{n+1} = −v^n·∇F^{n+1} + ∇v^n F^{n+1}`.
    Transported,
}

/// Summary of one Picard iterate.
#[derive(Clone, Debug, Serialize)]
pub struct PicardIterate {
    pub index: usize,
    #[serde(skip)]
    pub final_state: StateA,
    /// `‖Δv‖_{H^s} + ‖ΔF‖_{H^s} + ‖∇ΔM‖_{H^s}` against the previous iterate at `T`.
    pub diff_from_prev: Option<f64>,
    /// `sup_t (E_s(t) + ∫₀ᵗ D_s)`
    pub sup_energy_with_dissipation: f64,
    pub max_div_v: f64,
    pub max_sphere_res: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PicardRun {
    pub t_final: f64,
    pub e0: f64,
    pub iterates: Vec<PicardIterate>,
}

impl PicardRun {
    pub fn last(&self) -> &PicardIterate {
        self.iterates.last().expect("iterate 0 is always present")
    }

    /// `diff_{n+1} / diff_n` for consecutive iterates, indexed by the later one.
    pub fn ratios(&self) -> Vec<(usize, f64)> {
        let diffs: Vec<(usize, f64)> = self.iterates.iter().filter_map(|it| it.diff_from_prev.map(|d| (it.index, d))).collect();
        diffs.windows(2).map(|w| (w[1].0, if w[0].1 == 0.0 { 0.0 } else { w[1].1 / w[0].1 })).collect()
    }

    pub const CSV_HEADER: &'static str = "iterate,diff_from_prev,sup_energy_with_dissipation,max_div_v,max_sphere_res";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for it in &self.iterates {
            let diff = it.diff_from_prev.map(|d| format!("{d:.16e}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{:.16e},{:.16e},{:.16e}\n",
                it.index, diff, it.sup_energy_with_dissipation, it.max_div_v, it.max_sphere_res
            ));
        }
        out
    }
}

/// `‖v‖_{H^s} + ‖F‖_{H^s} + ‖∇M‖_{H^s}` of the difference of two states.
pub fn state_distance(grid: &TorusGrid, a: &StateA, b: &StateA, s: usize) -> f64 {
    let ws = SobolevWeights::new(grid, s);
    ws.norm_sq_vec(grid, &a.v.sub(&b.v)).sqrt()
        + ws.norm_sq_mat(grid, &a.f.sub(&b.f)).sqrt()
        + ws.grad_norm_sq(grid, &a.m.sub(&b.m)).sqrt()
}

type Stages = Vec<[Vec<ScalarField>; 2]>;

/// Runs `n_max` Picard iterates on `[0, T]`. Each iterate solves, with the
/// previous iterate's stage values as data, the Stokes-type velocity
/// equation (implicit `νΔv`, projected), the deformation equation and the
/// full LLG equation with the previous velocity.
pub fn picard_iterate(
    grid: &TorusGrid,
    init: &StateA,
    params: &PhysParams,
    t_final: f64,
    n_max: usize,
    cfg: &IntegratorConfig,
    s: usize,
    deformation: DeformationStage,
) -> Result<PicardRun> {
    init.check(grid)?;
    params.validate()?;
    let icfg = IntegratorConfig { t_end: t_final, ..cfg.clone() };
    icfg.validate()?;
    let div0 = grid.divergence(&init.v).max_abs();
    let det0 = crate::fields::det_field(&init.f).values.iter().fold(0.0_f64, |a, x| a.max((x - 1.0).abs()));
    let sph0 = sphere_residual(&init.m);
    if div0 > 1e-10 || det0 > 1e-8 || sph0 > 1e-8 {
        return Err(Error::InvalidParameter(format!(
            "Picard data must satisfy div v = 0, det F = 1, |M| = 1 (got {div0:e}, {det0:e}, {sph0:e})"
        )));
    }
    let d = grid.dim();
    let dd = d * d;
    let n_steps = icfg.n_steps();
    let dt = icfg.dt;
    let dy = Dynamics::new(grid, cfg.dealias);
    let (e0, _) = local_functionals(grid, init, params.nu, s);

    let u0 = flatten_a(init);
    let mut prev: Stages = vec![[u0.clone(), u0.clone()]; n_steps];
    let mut iterates = vec![PicardIterate {
        index: 0,
        final_state: StateA { t: init.t, ..init.clone() },
        diff_from_prev: None,
        sup_energy_with_dissipation: e0,
        max_div_v: div0,
        max_sphere_res: sph0,
    }];
    let mut coeffs = vec![params.nu; d];
    coeffs.extend(std::iter::repeat_n(params.kappa, dd));
    coeffs.extend([1.0; 3]);

    for it in 1..=n_max {
        let mut cur: Stages = Vec::with_capacity(n_steps);
        let mut u = u0.clone();
        let mut integral = 0.0;
        let (e_start, d_start) = local_functionals(grid, init, params.nu, s);
        let mut sup = e_start;
        let mut d_prev = d_start;
        let mut max_div = grid.divergence(&init.v).max_abs();
        let mut max_sph = sphere_residual(&init.m);
        for k in 0..n_steps {
            let t0 = init.t + k as f64 * dt;
            let mut stage_store: [Vec<ScalarField>; 2] = [Vec::new(), Vec::new()];
            let old = &prev[k];
            let out = imex_step(grid, dt, &u, &coeffs, Some(0..d), |stage, x| {
                stage_store[stage] = x.to_vec();
                let t = t0 + STAGE_TIMES[stage] * dt;
                let lv = unflatten_a(d, t, &old[stage]);
                let cv = unflatten_a(d, t, x);
                let ev = dy.momentum_explicit(&lv.v, &lv.f, &lv.m, &params.h_ext, t);
                let f_src = match deformation {
                    DeformationStage::Frozen => &lv.f,
                    DeformationStage::Transported => &cv.f,
                };
                let ef = dy.deformation_rhs(&lv.v, f_src, 0.0);
                let h = params.h_ext.sample(grid, t);
                let em = dy.llg_explicit(Some(&lv.v), &cv.m, &h, None);
                Ok(ev.comps.into_iter().chain(ef.entries).chain(em.comps).collect())
            })?;
            let t1 = t0 + dt;
            let stage_name = if !out[..d].iter().all(|c| c.is_finite()) {
                Some("velocity")
            } else if !out[d..d + dd].iter().all(|c| c.is_finite()) {
                Some("deformation")
            } else if !out[d + dd..].iter().all(|c| c.is_finite()) {
                Some("magnetization")
            } else {
                None
            };
            if let Some(stage) = stage_name {
                return Err(Error::PicardStage { stage, iterate: it, source: Box::new(Error::BlowUp { t: t1 }) });
            }
            cur.push(stage_store);
            u = out;
            let st = unflatten_a(d, t1, &u);
            let (e, dd_) = local_functionals(grid, &st, params.nu, s);
            integral += 0.5 * dt * (d_prev + dd_);
            d_prev = dd_;
            sup = sup.max(e + integral);
            max_div = max_div.max(grid.divergence(&st.v).max_abs());
            max_sph = max_sph.max(sphere_residual(&st.m));
        }
        let final_state = unflatten_a(d, init.t + n_steps as f64 * dt, &u);
        let diff = state_distance(grid, &final_state, &iterates.last().unwrap().final_state, s);
        iterates.push(PicardIterate {
            index: it,
            final_state,
            diff_from_prev: Some(diff),
            sup_energy_with_dissipation: sup,
            max_div_v: max_div,
            max_sphere_res: max_sph,
        });
        prev = cur;
    }
    Ok(PicardRun { t_final: n_steps as f64 * dt, e0, iterates })
}

/// Monolithic solution on the same grid and steps, for comparison.
pub fn monolithic_reference(grid: &TorusGrid, init: &StateA, params: &PhysParams, t_final: f64, cfg: &IntegratorConfig) -> Result<StateA> {
    let icfg = IntegratorConfig { t_end: t_final, ..cfg.clone() };
    let mut s = init.clone();
    for _ in 0..icfg.n_steps() {
        s = step_a(grid, &s, params, &icfg)?;
    }
    Ok(s)
}

#[derive(Clone, Debug, Serialize)]
pub struct PicardReport {
    /// State distance of the last iterate to the reference.
    pub distance: f64,
    /// Max-norm distance over all fields.
    pub distance_max: f64,
    pub ratios: Vec<(usize, f64)>,
    /// All ratios from iterate 2 on are at most 0.5.
    pub contraction_ok: bool,
    pub bound: f64,
    pub uniform_bound_ok: bool,
    pub max_div_v: f64,
}

/// Compares the last iterate with `reference` and checks the uniform bound
/// `sup_t E_{n+1} + ∫D_{n+1} ≤ bound` over all iterates.
pub fn picard_convergence_report(grid: &TorusGrid, run: &PicardRun, reference: &StateA, bound: f64, s: usize) -> PicardReport {
    let last = &run.last().final_state;
    let distance = state_distance(grid, last, reference, s);
    let distance_max = last
        .v
        .sub(&reference.v)
        .max_abs()
        .max(last.f.sub(&reference.f).max_abs())
        .max(last.m.sub(&reference.m).max_abs());
    let ratios = run.ratios();
    let contraction_ok = ratios.iter().filter(|(n, _)| *n >= 2).all(|(_, r)| *r <= 0.5);
    let uniform_bound_ok = run.iterates.iter().skip(1).all(|it| it.sup_energy_with_dissipation <= bound);
    let max_div_v = run.iterates.iter().map(|it| it.max_div_v).fold(0.0, f64::max);
    PicardReport { distance, distance_max, ratios, contraction_ok, bound, uniform_bound_ok, max_div_v }
}
