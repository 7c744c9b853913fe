//! Initial-data generators.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{g_to_f, grad_rows, StateA, StateB};
use crate::spectral::{MatrixField, ScalarField, TorusGrid, VectorField};

use super::config::Formulation;
use super::snapshot::load_snapshot;
use super::SimState;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    ZeroSteady,
    HarmonicMap,
    #[default]
    RandomSmall,
    ShearF,
    FlowMapF,
    FromSnapshot,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitialDataSpec {
    pub kind: InitialKind,
    pub amplitude: f64,
    /// Largest `|k|_∞` of the random modes.
    pub band: usize,
    pub snapshot_path: Option<PathBuf>,
}

impl InitialDataSpec {
    pub fn new(kind: InitialKind, amplitude: f64) -> Self {
        Self { kind, amplitude, band: 2, snapshot_path: None }
    }

    pub fn validate(&self, grid: &TorusGrid) -> Result<()> {
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::Config(format!("amplitude must be >= 0, got {}", self.amplitude)));
        }
        if matches!(self.kind, InitialKind::RandomSmall | InitialKind::FlowMapF)
            && (self.band == 0 || 3 * self.band > grid.n())
        {
            return Err(Error::Config(format!("band must lie in [1, n/3], got {}", self.band)));
        }
        if self.kind == InitialKind::FromSnapshot && self.snapshot_path.is_none() {
            return Err(Error::Config("from_snapshot needs snapshot_path".into()));
        }
        Ok(())
    }
}

/// A band-limited real trigonometric sum `Σ a cos(k·x) + b sin(k·x)`.
#[derive(Clone, Debug)]
struct Modes {
    terms: Vec<([f64; 3], f64, f64)>,
}

impl Modes {
    /// One coefficient pair per wavevector in a half space with
    /// `1 ≤ |k|_∞ ≤ band`, weighted by `1/|k|²`.
    fn random(d: usize, band: usize, rng: &mut ChaCha8Rng) -> Self {
        let b = band as i32;
        let third = if d == 3 { b } else { 0 };
        let mut terms = Vec::new();
        for k0 in -b..=b {
            for k1 in -b..=b {
                for k2 in -third..=third {
                    let k = [k0, k1, k2];
                    let first_nonzero = k.iter().find(|&&c| c != 0);
                    if first_nonzero.is_none_or(|&c| c < 0) {
                        continue;
                    }
                    let kf = [k0 as f64, k1 as f64, k2 as f64];
                    let k2sum: f64 = kf.iter().map(|x| x * x).sum();
                    let a = rng.gen_range(-1.0..1.0) / k2sum;
                    let c = rng.gen_range(-1.0..1.0) / k2sum;
                    terms.push((kf, a, c));
                }
            }
        }
        Self { terms }
    }

    fn value(&self, x: &[f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|(k, a, b)| {
                let p = k[0] * x[0] + k[1] * x[1] + k[2] * x[2];
                a * p.cos() + b * p.sin()
            })
            .sum()
    }

    fn grad(&self, x: &[f64; 3]) -> [f64; 3] {
        let mut g = [0.0; 3];
        for (k, a, b) in &self.terms {
            let p = k[0] * x[0] + k[1] * x[1] + k[2] * x[2];
            let w = -a * p.sin() + b * p.cos();
            for i in 0..3 {
                g[i] += k[i] * w;
            }
        }
        g
    }

    fn hessian(&self, x: &[f64; 3]) -> [[f64; 3]; 3] {
        let mut h = [[0.0; 3]; 3];
        for (k, a, b) in &self.terms {
            let p = k[0] * x[0] + k[1] * x[1] + k[2] * x[2];
            let w = -a * p.cos() - b * p.sin();
            for i in 0..3 {
                for j in 0..3 {
                    h[i][j] += k[i] * k[j] * w;
                }
            }
        }
        h
    }
}

/// Divergence-free band-limited velocity: `(∂₂φ, −∂₁φ)` in 2D, `∇×A` in 3D.
#[derive(Clone, Debug)]
struct SolenoidalField {
    d: usize,
    potentials: Vec<Modes>,
    scale: f64,
}

impl SolenoidalField {
    fn random(d: usize, band: usize, rng: &mut ChaCha8Rng) -> Self {
        let count = if d == 2 { 1 } else { 3 };
        Self { d, potentials: (0..count).map(|_| Modes::random(d, band, rng)).collect(), scale: 1.0 }
    }

    fn value(&self, x: &[f64; 3]) -> [f64; 3] {
        let s = self.scale;
        if self.d == 2 {
            let g = self.potentials[0].grad(x);
            [s * g[1], -s * g[0], 0.0]
        } else {
            let g: Vec<[f64; 3]> = self.potentials.iter().map(|p| p.grad(x)).collect();
            [s * (g[2][1] - g[1][2]), s * (g[0][2] - g[2][0]), s * (g[1][0] - g[0][1])]
        }
    }

    /// `J[i][j] = ∂_j u^i`
    fn jacobian(&self, x: &[f64; 3]) -> [[f64; 3]; 3] {
        let s = self.scale;
        let mut jac = [[0.0; 3]; 3];
        if self.d == 2 {
            let h = self.potentials[0].hessian(x);
            for j in 0..2 {
                jac[0][j] = s * h[1][j];
                jac[1][j] = -s * h[0][j];
            }
        } else {
            let h: Vec<[[f64; 3]; 3]> = self.potentials.iter().map(|p| p.hessian(x)).collect();
            for j in 0..3 {
                jac[0][j] = s * (h[2][1][j] - h[1][2][j]);
                jac[1][j] = s * (h[0][2][j] - h[2][0][j]);
                jac[2][j] = s * (h[1][0][j] - h[0][1][j]);
            }
        }
        jac
    }

    fn sample(&self, grid: &TorusGrid) -> VectorField {
        let d = grid.dim();
        let mut out = VectorField::zeros(d, grid.len());
        for p in 0..grid.len() {
            let u = self.value(&grid.point(p));
            for i in 0..d {
                out.comps[i].values[p] = u[i];
            }
        }
        out
    }

    /// Rescales so the sampled maximum speed equals `amp`.
    fn normalized(mut self, grid: &TorusGrid, amp: f64) -> Self {
        let peak = self.sample(grid).pointwise_norm().max_abs();
        self.scale = if peak > 0.0 { amp / peak } else { 0.0 };
        self
    }
}

/// A random band-limited scalar field (no zero mode) sampled on `grid`. The
/// same `(seed, stream, band)` gives the same continuum field on any grid.
pub fn band_limited_field(grid: &TorusGrid, band: usize, seed: u64, stream: u64) -> ScalarField {
    let modes = Modes::random(grid.dim(), band, &mut rng_for(seed, stream));
    grid.sample(|x| modes.value(x))
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Projected random velocity with `max|v| = a`.
fn random_velocity(grid: &TorusGrid, band: usize, a: f64, seed: u64) -> VectorField {
    let f = SolenoidalField::random(grid.dim(), band, &mut rng_for(seed, 1)).normalized(grid, a);
    grid.leray_project(&f.sample(grid))
}

/// `M = (e_z + a m)/|e_z + a m|` with `max|m| = 1` band-limited.
fn random_magnetization(grid: &TorusGrid, band: usize, a: f64, seed: u64) -> VectorField {
    let mut rng = rng_for(seed, 3);
    let modes: Vec<Modes> = (0..3).map(|_| Modes::random(grid.dim(), band, &mut rng)).collect();
    let raw: Vec<ScalarField> = modes.iter().map(|m| grid.sample(|x| m.value(x))).collect();
    let peak = VectorField { comps: raw.clone() }.pointwise_norm().max_abs();
    let w = if peak > 0.0 { a / peak } else { 0.0 };
    let mut m = VectorField { comps: raw.into_iter().map(|c| c.scaled(w)).collect() };
    m.comps[2].values.iter_mut().for_each(|x| *x += 1.0);
    let norm = m.pointwise_norm();
    for c in &mut m.comps {
        for (x, n) in c.values.iter_mut().zip(&norm.values) {
            *x /= n;
        }
    }
    m
}

/// `ψ = Φ − x` where `Φ` is the time-one flow map of a random solenoidal
/// field of size `a`, so that `det(I + ∇ψ) = 1` and `∇ψ` is curl-free.
pub fn flow_map_potential(grid: &TorusGrid, band: usize, a: f64, seed: u64) -> VectorField {
    let u = SolenoidalField::random(grid.dim(), band, &mut rng_for(seed, 2)).normalized(grid, a);
    let d = grid.dim();
    let steps = 100;
    let h = 1.0 / steps as f64;
    let mut psi = VectorField::zeros(d, grid.len());
    let add = |x: &[f64; 3], k: &[f64; 3], c: f64| [x[0] + c * k[0], x[1] + c * k[1], x[2] + c * k[2]];
    for p in 0..grid.len() {
        let x0 = grid.point(p);
        let mut x = x0;
        for _ in 0..steps {
            let k1 = u.value(&x);
            let k2 = u.value(&add(&x, &k1, 0.5 * h));
            let k3 = u.value(&add(&x, &k2, 0.5 * h));
            let k4 = u.value(&add(&x, &k3, h));
            for i in 0..3 {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        for i in 0..d {
            psi.comps[i].values[p] = x[i] - x0[i];
        }
    }
    // remove the mean so the potential is the zero-mean representative
    for c in &mut psi.comps {
        let m = c.mean();
        c.values.iter_mut().for_each(|x| *x -= m);
    }
    psi
}

/// `F = exp(∇u)` pointwise, from `∂_τF = (∇u)F`, `F(0) = I`, integrated
/// with a 4-stage explicit scheme at `δτ = 10⁻³`.
fn flow_map_deformation(grid: &TorusGrid, band: usize, a: f64, seed: u64) -> MatrixField {
    let u = SolenoidalField::random(grid.dim(), band, &mut rng_for(seed, 4)).normalized(grid, a);
    let d = grid.dim();
    let steps = 1000;
    let h = 1.0 / steps as f64;
    let mut out = MatrixField::identity(d, grid.len());
    let mul = |a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]| {
        let mut c = [[0.0; 3]; 3];
        for i in 0..d {
            for j in 0..d {
                c[i][j] = (0..d).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        c
    };
    let lin = |f: &[[f64; 3]; 3], k: &[[f64; 3]; 3], c: f64| {
        let mut r = *f;
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] += c * k[i][j];
            }
        }
        r
    };
    for p in 0..grid.len() {
        let j = u.jacobian(&grid.point(p));
        let mut f = [[0.0; 3]; 3];
        for (i, row) in f.iter_mut().enumerate().take(d) {
            row[i] = 1.0;
        }
        for _ in 0..steps {
            let k1 = mul(&j, &f);
            let k2 = mul(&j, &lin(&f, &k1, 0.5 * h));
            let k3 = mul(&j, &lin(&f, &k2, 0.5 * h));
            let k4 = mul(&j, &lin(&f, &k3, h));
            for r in 0..d {
                for c in 0..d {
                    f[r][c] += h / 6.0 * (k1[r][c] + 2.0 * k2[r][c] + 2.0 * k3[r][c] + k4[r][c]);
                }
            }
        }
        out.set_at(p, &f);
    }
    out
}

fn unit_z(grid: &TorusGrid) -> VectorField {
    VectorField::constant(&[0.0, 0.0, 1.0], grid.len())
}

fn from_potential(grid: &TorusGrid, formulation: Formulation, v: VectorField, psi: VectorField, m: VectorField) -> Result<SimState> {
    Ok(match formulation {
        Formulation::A => SimState::A(StateA { t: 0.0, v, f: g_to_f(&grad_rows(grid, &psi))?, m }),
        Formulation::B => SimState::B(StateB { t: 0.0, v, psi, m }),
    })
}

/// Builds the initial state. Deterministic in `seed`.
pub fn generate_initial_data(spec: &InitialDataSpec, grid: &TorusGrid, seed: u64, formulation: Formulation) -> Result<SimState> {
    spec.validate(grid)?;
    let d = grid.dim();
    let len = grid.len();
    let a = spec.amplitude;
    let zero_v = || VectorField::zeros(d, len);
    match spec.kind {
        InitialKind::ZeroSteady => from_potential(grid, formulation, zero_v(), zero_v(), unit_z(grid)),
        InitialKind::HarmonicMap => {
            let m = VectorField { comps: vec![grid.sample(|x| x[0].cos()), grid.sample(|x| x[0].sin()), grid.zeros()] };
            from_potential(grid, formulation, zero_v(), zero_v(), m)
        }
        InitialKind::RandomSmall => {
            let v = random_velocity(grid, spec.band, a, seed);
            let psi = flow_map_potential(grid, spec.band, a, seed);
            let m = random_magnetization(grid, spec.band, a, seed);
            from_potential(grid, formulation, v, psi, m)
        }
        InitialKind::ShearF => {
            let mut psi = zero_v();
            psi.comps[0] = grid.sample(|x| a * x[1].cos());
            match formulation {
                Formulation::A => {
                    let mut f = MatrixField::identity(d, len);
                    *f.get_mut(0, 1) = grid.sample(|x| a * x[1].sin());
                    Ok(SimState::A(StateA { t: 0.0, v: zero_v(), f, m: unit_z(grid) }))
                }
                Formulation::B => Ok(SimState::B(StateB { t: 0.0, v: zero_v(), psi, m: unit_z(grid) })),
            }
        }
        InitialKind::FlowMapF => {
            let v = random_velocity(grid, spec.band, a, seed);
            let m = random_magnetization(grid, spec.band, a, seed);
            match formulation {
                Formulation::A => {
                    let f = flow_map_deformation(grid, spec.band, a, seed);
                    Ok(SimState::A(StateA { t: 0.0, v, f, m }))
                }
                Formulation::B => {
                    let psi = flow_map_potential(grid, spec.band, a, seed);
                    Ok(SimState::B(StateB { t: 0.0, v, psi, m }))
                }
            }
        }
        InitialKind::FromSnapshot => {
            let path = spec.snapshot_path.as_ref().expect("validated");
            let (snap_grid, state) = load_snapshot(path)?;
            if snap_grid != *grid {
                return Err(Error::Config(format!(
                    "snapshot grid (dim {}, n {}) does not match the configured grid (dim {}, n {})",
                    snap_grid.dim(),
                    snap_grid.n(),
                    grid.dim(),
                    grid.n()
                )));
            }
            state.into_formulation(grid, formulation)
        }
    }
}
