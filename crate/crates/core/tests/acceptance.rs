//! One PASS/FAIL line per acceptance criterion, run at the default desk
//! scale (N = 64, d = 2, dt = 1e-3) unless a criterion says otherwise.

mod common;

use std::path::Path;

use common::*;
use magel::energetics::{DiagnosticRecord, DiagnosticSettings};
use magel::fields::{PhysParams, StateA, StateB};
use magel::harness::scenarios::worst_relative_increase;
use magel::harness::{generate_initial_data, run_scenario, run_simulation, Formulation, InitialDataSpec, InitialKind, SimulationConfig, Verdict};
use magel::spectral::{MatrixField, TorusGrid, VectorField};
use magel::timestepper::{run, IntegratorConfig, NullSink};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn from_verdict(v: &Verdict) -> Outcome {
    let mut detail: Vec<String> = v.checks.iter().map(|c| format!("{} = {:.3e} (limit {:.1e})", c.name, c.value, c.limit)).collect();
    if let Some(f) = &v.failure {
        detail.push(format!("stopped: {f}"));
    }
    outcome(v.pass, detail.join("; "))
}

fn config(dir: &Path) -> SimulationConfig {
    SimulationConfig { n: 64, dt: 1e-3, out_dir: dir.to_path_buf(), seed: 7, ..Default::default() }
}

fn col_max(r: &[DiagnosticRecord], f: impl Fn(&DiagnosticRecord) -> f64) -> f64 {
    r.iter().map(f).fold(0.0, f64::max)
}

fn small_data(g: &TorusGrid, f: Formulation) -> magel::harness::SimState {
    generate_initial_data(&InitialDataSpec::new(InitialKind::RandomSmall, 1e-2), g, 7, f).unwrap()
}

fn spectral_exactness() -> Outcome {
    let g = grid2(64);
    let f = g.sample(|x| (3.0 * x[0]).sin() * (2.0 * x[1]).cos());
    let dx = g.sample(|x| 3.0 * (3.0 * x[0]).cos() * (2.0 * x[1]).cos());
    let e_d = (&g.partial(&f, 0) - &dx).max_abs();
    let e_lap = (&g.laplacian(&f) - &f.scaled(-13.0)).max_abs();
    let grad = g.gradient(&g.sample(|x| (x[0] + 2.0 * x[1]).sin()));
    let e_leray_grad = g.leray_project(&grad).max_abs();
    let u = random_vector(&g, 2, 6, 3);
    let pu = g.leray_project(&u);
    let e_div = g.divergence(&pu).max_abs() / u.max_abs();
    let e_idem = g.leray_project(&pu).sub(&pu).max_abs();
    let t1 = g.truncate(&u.comps[0], 4.0);
    let e_trunc = (&g.truncate(&t1, 4.0) - &t1).max_abs();
    let e_trunc_high = g.truncate(&g.sample(|x| (7.0 * x[0]).cos()), 4.0).max_abs();
    let worst = [e_d, e_lap, e_leray_grad, e_div, e_idem, e_trunc, e_trunc_high].into_iter().fold(0.0, f64::max);
    let s = &u.comps[1];
    let phys = g.inner(s, s);
    let spec = g.spectral_l2_sq(&g.forward(s));
    let parseval = (phys - spec).abs() / phys;
    outcome(worst <= 1e-11 && parseval <= 1e-12, format!("operator error {worst:.3e}, Parseval {parseval:.3e}"))
}

fn steady_states() -> Outcome {
    let g = grid2(64);
    let len = g.len();
    let p = PhysParams::default();
    let cfg = IntegratorConfig { dt: 1e-3, t_end: 1.0, ..Default::default() };
    let set = DiagnosticSettings { s: 2, delta: 1e-3, dealias: true };
    let ms = [
        VectorField::constant(&[0.0, 0.0, 1.0], len),
        VectorField { comps: vec![g.sample(|x| x[0].cos()), g.sample(|x| x[0].sin()), g.zeros()] },
    ];
    let mut worst: f64 = 0.0;
    let mut steps = usize::MAX;
    for m in ms {
        let a = StateA { t: 0.0, v: VectorField::zeros(2, len), f: MatrixField::identity(2, len), m: m.clone() };
        let ra = run(&g, a.clone(), &p, &cfg, &set, &mut NullSink).unwrap();
        let b = StateB { t: 0.0, v: VectorField::zeros(2, len), psi: VectorField::zeros(2, len), m: m.clone() };
        let rb = run(&g, b.clone(), &p, &cfg, &set, &mut NullSink).unwrap();
        steps = steps.min(ra.steps).min(rb.steps);
        let sa = &ra.state;
        let sb = &rb.state;
        worst = worst
            .max(sa.v.max_abs())
            .max(sa.f.sub(&a.f).max_abs())
            .max(sa.m.sub(&m).max_abs())
            .max(sb.v.max_abs())
            .max(sb.psi.max_abs())
            .max(sb.m.sub(&m).max_abs());
    }
    outcome(worst <= 1e-8 && steps >= 1000, format!("max drift {worst:.3e} after {steps} steps"))
}

/// Criteria 3, 4 and 5 share one run.
fn small_data_run() -> (Outcome, Outcome, Outcome) {
    let g = grid2(64);
    let a = small_data(&g, Formulation::A).into_a(&g).unwrap();
    let cfg = IntegratorConfig { dt: 1e-3, t_end: 1.0, dealias: false, renormalize_m: false, ..Default::default() };
    let set = DiagnosticSettings { s: 2, delta: 1e-3, dealias: false };
    let r = run(&g, a, &PhysParams::default(), &cfg, &set, &mut NullSink).unwrap();
    let ok = r.failure.is_none() && r.state.t >= 1.0 - 1e-12;
    let sphere = col_max(&r.records, |x| x.sphere_res);
    let det = col_max(&r.records, |x| x.det_res);
    let e: Vec<f64> = r.records.iter().map(|x| x.e_basic).collect();
    let incr = worst_relative_increase(&e);
    (
        outcome(ok && sphere <= 1e-7, format!("max sphere residual {sphere:.3e} over {} steps", r.steps)),
        outcome(ok && det <= 1e-6, format!("max |det F - 1| {det:.3e}")),
        outcome(ok && incr <= 1e-9, format!("worst relative energy increase {incr:.3e}")),
    )
}

fn scenario(name: &str, edit: impl FnOnce(&mut SimulationConfig)) -> (Verdict, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    edit(&mut cfg);
    (run_scenario(name, &cfg).unwrap(), dir)
}

fn global_decay() -> Outcome {
    let (v, _d) = scenario("decay_small_data", |c| {
        c.formulation = Formulation::B;
        c.sobolev_s = 3;
        c.t_end = 2.0;
    });
    from_verdict(&v)
}

fn equivalence() -> Outcome {
    let (v, _d) = scenario("formulation_equivalence", |c| c.t_end = 0.5);
    let f_gap = v.checks.iter().find(|c| c.name == "f_gap_max").map(|c| c.value).unwrap_or(f64::INFINITY);
    outcome(v.failure.is_none() && f_gap <= 1e-5, format!("max |F_A - (I + grad psi_B)^-1| = {f_gap:.3e} at t = 0.5"))
}

fn curl_free_identities() -> Outcome {
    let mut ratios = Vec::new();
    let mut curl: f64 = 0.0;
    let mut trg: f64 = 0.0;
    let mut failed = None;
    for n in [32, 64] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SimulationConfig { n, formulation: Formulation::B, t_end: 1.0, ..config(dir.path()) };
        let out = run_simulation(&cfg).unwrap();
        if let Some(e) = out.failure {
            failed = Some(e.to_string());
        }
        curl = curl.max(col_max(&out.records, |x| x.curl_res));
        trg = trg.max(col_max(&out.records, |x| x.trg_vs_divpsi_res));
        ratios.push(col_max(&out.records, |x| x.trg_ratio));
    }
    let spread = (ratios[0] / ratios[1]).max(ratios[1] / ratios[0]);
    let pass = failed.is_none() && curl <= 1e-11 && trg <= 1e-13 && ratios.iter().all(|r| r.is_finite()) && spread <= 2.0;
    outcome(
        pass,
        format!("curl {curl:.3e}, trG vs div psi {trg:.3e}, ratio {:.4e} (N=32) vs {:.4e} (N=64)", ratios[0], ratios[1]),
    )
}

fn stokes() -> Outcome {
    from_verdict(&scenario("stokes_verify", |_| {}).0)
}

fn mollifier() -> Outcome {
    from_verdict(&scenario("mollifier_study", |c| c.t_end = 0.2).0)
}

fn picard() -> Outcome {
    from_verdict(&scenario("picard_study", |c| c.picard_t = 0.1).0)
}

fn max_gap(a: &[&VectorField], b: &[&VectorField]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.sub(y).max_abs()).fold(0.0, f64::max)
}

fn temporal_order() -> Outcome {
    let g = grid2(64);
    let p = PhysParams::default();
    let set = DiagnosticSettings { s: 2, delta: 1e-3, dealias: true };
    let (t, dt) = (0.1, 0.01);
    let cfg = |h: f64| IntegratorConfig { dt: h, t_end: t, ..Default::default() };
    let a0 = small_data(&g, Formulation::A).into_a(&g).unwrap();
    let b0 = small_data(&g, Formulation::B).into_b(&g).unwrap();
    let sa = |h: f64| run(&g, a0.clone(), &p, &cfg(h), &set, &mut NullSink).unwrap().state;
    let sb = |h: f64| run(&g, b0.clone(), &p, &cfg(h), &set, &mut NullSink).unwrap().state;
    let fa = |s: &StateA| vec![s.v.clone(), VectorField { comps: s.f.entries.clone() }, s.m.clone()];
    let fb = |s: &StateB| vec![s.v.clone(), s.psi.clone(), s.m.clone()];
    let order = |e1: f64, e2: f64| (e1 / e2).log2();
    let gap = |x: Vec<VectorField>, y: &[VectorField]| max_gap(&x.iter().collect::<Vec<_>>(), &y.iter().collect::<Vec<_>>());
    let ra = fa(&sa(dt / 8.0));
    let pa = order(gap(fa(&sa(dt)), &ra), gap(fa(&sa(dt / 2.0)), &ra));
    let rb = fb(&sb(dt / 8.0));
    let pb = order(gap(fb(&sb(dt)), &rb), gap(fb(&sb(dt / 2.0)), &rb));
    outcome(pa >= 1.9 && pb >= 1.9, format!("observed order {pa:.3} (A), {pb:.3} (B)"))
}

fn reproducibility() -> Outcome {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let run_once = |d: &Path| {
        let cfg = SimulationConfig { t_end: 0.1, formulation: Formulation::B, ..config(d) };
        let out = run_simulation(&cfg).unwrap();
        std::fs::read(out.csv_path).unwrap()
    };
    let (a, b) = (run_once(d1.path()), run_once(d2.path()));
    outcome(a == b && !a.is_empty(), format!("{} CSV bytes, identical: {}", a.len(), a == b))
}

#[test]
fn acceptance() {
    let mut results: Vec<(usize, Outcome)> = std::thread::scope(|s| {
        let jobs: Vec<(usize, std::thread::ScopedJoinHandle<'_, Outcome>)> = vec![
            (1, s.spawn(spectral_exactness)),
            (2, s.spawn(steady_states)),
            (6, s.spawn(global_decay)),
            (7, s.spawn(equivalence)),
            (8, s.spawn(curl_free_identities)),
            (9, s.spawn(stokes)),
            (10, s.spawn(mollifier)),
            (11, s.spawn(picard)),
            (12, s.spawn(temporal_order)),
            (13, s.spawn(reproducibility)),
        ];
        let shared = s.spawn(small_data_run);
        let mut out: Vec<(usize, Outcome)> = jobs.into_iter().map(|(k, h)| (k, h.join().unwrap())).collect();
        let (c3, c4, c5) = shared.join().unwrap();
        out.extend([(3, c3), (4, c4), (5, c5)]);
        out
    });
    results.sort_by_key(|(k, _)| *k);
    for (k, o) in &results {
        println!("criterion {k:>2}: {} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    let failed: Vec<usize> = results.iter().filter(|(_, o)| !o.pass).map(|(k, _)| *k).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
