use magel::energetics::{basic_energy, constraints_a};
use magel::fields::{PhysParams, StateA};
use magel::harness::{generate_initial_data, Formulation, InitialDataSpec, InitialKind};
use magel::spectral::{TorusGrid, VectorField};
use magel::stokes::{solve_generalized_stokes, stokes_residuals};
use magel::timestepper::{step_a, IntegratorConfig};
use wasm_bindgen::prelude::*;

fn js_err(e: magel::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn kind_from(name: &str) -> Result<InitialKind, JsValue> {
    match name {
        "random_small" => Ok(InitialKind::RandomSmall),
        "harmonic_map" => Ok(InitialKind::HarmonicMap),
        "shear_F" => Ok(InitialKind::ShearF),
        "flow_map_F" => Ok(InitialKind::FlowMapF),
        "zero_steady" => Ok(InitialKind::ZeroSteady),
        _ => Err(JsValue::from_str(&format!("unknown initial data {name:?}"))),
    }
}

// M ∈ S² to RGB, one byte per channel
fn paint(m: &VectorField, out: &mut [u8]) {
    for p in 0..m.npoints() {
        for c in 0..3 {
            out[4 * p + c] = ((m.comps[c].values[p] + 1.0) * 127.5).clamp(0.0, 255.0) as u8;
        }
        out[4 * p + 3] = 255;
    }
}

/// A 2D run of the primitive system.
#[wasm_bindgen]
pub struct Simulation {
    grid: TorusGrid,
    state: StateA,
    params: PhysParams,
    cfg: IntegratorConfig,
}

#[wasm_bindgen]
impl Simulation {
    #[wasm_bindgen(constructor)]
    pub fn new(n: usize, kind: &str, amplitude: f64, seed: u64, dt: f64) -> Result<Simulation, JsValue> {
        let grid = TorusGrid::new(2, n).map_err(js_err)?;
        let mut spec = InitialDataSpec::new(kind_from(kind)?, amplitude);
        spec.band = spec.band.min(n / 3);
        let state = generate_initial_data(&spec, &grid, seed, Formulation::A)
            .and_then(|s| s.into_a(&grid))
            .map_err(js_err)?;
        let cfg = IntegratorConfig { dt, t_end: f64::INFINITY, ..Default::default() };
        Ok(Simulation { grid, state, params: PhysParams::default(), cfg })
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn time(&self) -> f64 {
        self.state.t
    }

    /// Advances `steps` steps. A failed step leaves the state unchanged.
    pub fn step(&mut self, steps: usize) -> Result<(), JsValue> {
        for _ in 0..steps {
            self.state = step_a(&self.grid, &self.state, &self.params, &self.cfg).map_err(js_err)?;
        }
        Ok(())
    }

    pub fn energy(&self) -> f64 {
        basic_energy(&self.grid, &self.state.v, &self.state.f, &self.state.m)
    }

    pub fn sphere_residual(&self) -> f64 {
        constraints_a(&self.grid, &self.state, 2).map(|c| c.sphere_res).unwrap_or(f64::NAN)
    }

    pub fn det_residual(&self) -> f64 {
        constraints_a(&self.grid, &self.state, 2).map(|c| c.det_res).unwrap_or(f64::NAN)
    }

    /// Tilts M towards `e_x` inside a Gaussian bump centred at `(x, y)` in
    /// `[0, 2π)²`, then renormalizes.
    pub fn poke(&mut self, x: f64, y: f64, strength: f64) {
        let r2 = 0.6f64.powi(2);
        let tau = std::f64::consts::TAU;
        let wrap = |d: f64| d - tau * (d / tau).round();
        for p in 0..self.grid.len() {
            let q = self.grid.point(p);
            let dist2 = wrap(q[0] - x).powi(2) + wrap(q[1] - y).powi(2);
            let w = strength * (-dist2 / r2).exp();
            let m = &mut self.state.m.comps;
            let mut v = [m[0].values[p] + w, m[1].values[p], m[2].values[p]];
            let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            v.iter_mut().for_each(|c| *c /= norm);
            for c in 0..3 {
                m[c].values[p] = v[c];
            }
        }
    }

    /// RGBA pixels of M, `n × n`, row-major with `x` as the slow axis.
    pub fn pixels(&self) -> Vec<u8> {
        let mut out = vec![0u8; 4 * self.grid.len()];
        paint(&self.state.m, &mut out);
        out
    }

    /// RGBA pixels of the Fourier truncation of M to `|ξ| ≤ cutoff`.
    pub fn truncated_pixels(&self, cutoff: f64) -> Vec<u8> {
        let mut out = vec![0u8; 4 * self.grid.len()];
        paint(&self.grid.truncate_vec(&self.state.m, cutoff), &mut out);
        out
    }

    /// `‖∇J M‖² / ‖∇M‖²` for the truncation at `cutoff`.
    pub fn truncation_energy_ratio(&self, cutoff: f64) -> f64 {
        let g = &self.grid;
        let dirichlet = |m: &VectorField| -> f64 {
            m.comps.iter().map(|c| g.gradient(c).comps.iter().map(|d| g.inner(d, d)).sum::<f64>()).sum()
        };
        let full = dirichlet(&self.state.m);
        if full == 0.0 {
            return 1.0;
        }
        dirichlet(&g.truncate_vec(&self.state.m, cutoff)) / full
    }
}

/// Solves one generalized Stokes problem with `f = (sin(a y), cos(b x))` and
/// `g = sin(c x) cos(c y)`; returns `[momentum residual, divergence residual,
/// max|w|, max|q|]`.
#[wasm_bindgen]
pub fn stokes_check(n: usize, a: f64, b: f64, c: f64) -> Result<Vec<f64>, JsValue> {
    let grid = TorusGrid::new(2, n).map_err(js_err)?;
    let (a, b, c) = (a.round(), b.round(), c.round());
    let f = VectorField { comps: vec![grid.sample(|x| (a * x[1]).sin()), grid.sample(|x| (b * x[0]).cos())] };
    let g = grid.sample(|x| (c * x[0]).sin() * (c * x[1]).cos());
    let sol = solve_generalized_stokes(&grid, &f, &g).map_err(js_err)?;
    let (rm, rd) = stokes_residuals(&grid, &sol, &f, &g);
    Ok(vec![rm, rd, sol.w.max_abs(), sol.q.max_abs()])
}
