//! Sobolev norms as Fourier multipliers and the monitored functionals.
//!
//! `‖f‖²_{H^s} = Σ_{|m|≤s} ‖∂^m f‖²_{L²}` is evaluated in one pass over the
//! modes with the weight `Σ_{|m|≤s} ∏_a |ξ_a|^{2 m_a}` (odd orders use the
//! Nyquist-zeroed wavenumber, matching [`TorusGrid::derivative`]).

use serde::{Deserialize, Serialize};

use crate::dynamics::{Dynamics, RhsB};
use crate::error::{Error, Result};
use crate::fields::{self, det_field, f_to_g, grad_rows, psi_from_g, sphere_residual, trace, StateA, StateB};
use crate::spectral::{MatrixField, ScalarField, Spectrum, TorusGrid, VectorField};

/// Highest Sobolev order the diagnostics accept.
pub const MAX_SOBOLEV_ORDER: usize = 4;

/// All multi-indices `m ∈ ℕ^d` with `|m| ≤ s`, in lexicographic order.
pub fn multi_indices(d: usize, s: usize) -> Vec<Vec<usize>> {
    fn rec(d: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == d {
            out.push(cur.clone());
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(d, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, s, &mut Vec::with_capacity(d), &mut out);
    out
}

/// Number of multi-indices with `|m| ≤ s`: `C(s + d, d)`.
pub fn multiindex_count(d: usize, s: usize) -> usize {
    let mut c = 1usize;
    for i in 1..=d {
        c = c * (s + i) / i;
    }
    c
}

/// `min(¼, ν² / (16 ĉ₀² K_s²))`
pub fn delta_default(nu: f64, c0_hat: f64, k_s: usize) -> f64 {
    let k = k_s as f64;
    (0.25_f64).min(nu * nu / (16.0 * c0_hat * c0_hat * k * k))
}

/// Per-mode Sobolev weights for one grid and order.
pub struct SobolevWeights {
    weights: Vec<f64>,
    order: usize,
}

impl SobolevWeights {
    pub fn new(grid: &TorusGrid, s: usize) -> Self {
        let d = grid.dim();
        let indices = multi_indices(d, s);
        let weights = (0..grid.len())
            .map(|idx| {
                let k = grid.wavevector(idx);
                let kd = grid.wavevector_d(idx);
                indices
                    .iter()
                    .map(|m| {
                        m.iter()
                            .enumerate()
                            .map(|(a, &ma)| {
                                let xi = if ma % 2 == 1 { kd[a] } else { k[a] };
                                xi.powi(2 * ma as i32)
                            })
                            .product::<f64>()
                    })
                    .sum()
            })
            .collect();
        Self { weights, order: s }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `Σ_ξ w(ξ) mult(ξ) |ŝ(ξ)|²`, normalized so that `mult ≡ 1, s = 0`
    /// gives the `L²` norm squared.
    fn weighted(&self, grid: &TorusGrid, s: &Spectrum, mult: impl Fn(usize) -> f64) -> f64 {
        let sum: f64 = s
            .coeffs
            .iter()
            .zip(&self.weights)
            .enumerate()
            .map(|(idx, (c, w))| w * mult(idx) * c.norm_sqr())
            .sum();
        grid.volume() * sum / (grid.len() as f64).powi(2)
    }

    pub fn norm_sq(&self, grid: &TorusGrid, f: &ScalarField) -> f64 {
        self.weighted(grid, &grid.forward(f), |_| 1.0)
    }

    pub fn norm_sq_vec(&self, grid: &TorusGrid, u: &VectorField) -> f64 {
        u.comps.iter().map(|c| self.norm_sq(grid, c)).sum()
    }

    pub fn norm_sq_mat(&self, grid: &TorusGrid, a: &MatrixField) -> f64 {
        a.entries.iter().map(|c| self.norm_sq(grid, c)).sum()
    }

    /// `‖∇f‖²_{H^s}` summed over the components of `u`.
    pub fn grad_norm_sq(&self, grid: &TorusGrid, u: &VectorField) -> f64 {
        u.comps
            .iter()
            .map(|c| {
                let s = grid.forward(c);
                self.weighted(grid, &s, |idx| {
                    let kd = grid.wavevector_d(idx);
                    kd.iter().map(|x| x * x).sum()
                })
            })
            .sum()
    }

    /// `‖Δf‖²_{H^s}` summed over the components of `u`.
    pub fn lap_norm_sq(&self, grid: &TorusGrid, u: &VectorField) -> f64 {
        u.comps
            .iter()
            .map(|c| {
                let s = grid.forward(c);
                self.weighted(grid, &s, |idx| grid.ksq(idx).powi(2))
            })
            .sum()
    }
}

/// `Σ_{|m|≤s} ‖∂^m f‖²_{L²}`
pub fn sobolev_norm_sq(grid: &TorusGrid, f: &ScalarField, s: usize) -> Result<f64> {
    if s > MAX_SOBOLEV_ORDER {
        return Err(Error::InvalidParameter(format!("Sobolev order {s} exceeds {MAX_SOBOLEV_ORDER}")));
    }
    grid.check(f)?;
    Ok(SobolevWeights::new(grid, s).norm_sq(grid, f))
}

/// `½(‖v‖² + ‖F‖² + ‖∇M‖²)` in `L²`.
pub fn basic_energy(grid: &TorusGrid, v: &VectorField, f: &MatrixField, m: &VectorField) -> f64 {
    let w = SobolevWeights::new(grid, 0);
    0.5 * (w.norm_sq_vec(grid, v) + w.norm_sq_mat(grid, f) + w.grad_norm_sq(grid, m))
}

/// `(E_s, D_s)` with `E_s = ‖v‖²_{H^s} + ‖F‖²_{H^s} + ‖∇M‖²_{H^s}` and
/// `D_s = ν‖∇v‖²_{H^s} + ‖ΔM‖²_{H^s}`.
pub fn local_functionals(grid: &TorusGrid, state: &StateA, nu: f64, s: usize) -> (f64, f64) {
    let w = SobolevWeights::new(grid, s);
    local_with(grid, &w, &state.v, &state.f, &state.m, nu)
}

fn local_with(grid: &TorusGrid, w: &SobolevWeights, v: &VectorField, f: &MatrixField, m: &VectorField, nu: f64) -> (f64, f64) {
    let e = w.norm_sq_vec(grid, v) + w.norm_sq_mat(grid, f) + w.grad_norm_sq(grid, m);
    let d = nu * w.grad_norm_sq(grid, v) + w.lap_norm_sq(grid, m);
    (e, d)
}

/// The individual squared norms that make up the global functionals.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GlobalParts {
    /// `‖v‖²_{H^s}`
    pub v: f64,
    /// `‖∇M‖²_{H^s}`
    pub grad_m: f64,
    /// `‖∇ψ‖²_{H^s}`
    pub grad_psi: f64,
    /// `‖∂_t v‖²_{H^{s−2}}`
    pub dt_v: f64,
    /// `‖∇∂_t ψ‖²_{H^{s−2}}`
    pub grad_dt_psi: f64,
    /// `‖∇v‖²_{H^s}`
    pub grad_v: f64,
    /// `‖ΔM‖²_{H^s}`
    pub lap_m: f64,
    /// `‖∇∂_t v‖²_{H^{s−2}}`
    pub grad_dt_v: f64,
}

impl GlobalParts {
    pub fn compute(grid: &TorusGrid, state: &StateB, rhs: &RhsB, s: usize) -> Result<Self> {
        if s < 2 {
            return Err(Error::InvalidParameter(format!("global functionals need s >= 2, got {s}")));
        }
        let ws = SobolevWeights::new(grid, s);
        let wl = SobolevWeights::new(grid, s - 2);
        Ok(Self {
            v: ws.norm_sq_vec(grid, &state.v),
            grad_m: ws.grad_norm_sq(grid, &state.m),
            grad_psi: ws.grad_norm_sq(grid, &state.psi),
            dt_v: wl.norm_sq_vec(grid, &rhs.dv),
            grad_dt_psi: wl.grad_norm_sq(grid, &rhs.dpsi),
            grad_v: ws.grad_norm_sq(grid, &state.v),
            lap_m: ws.lap_norm_sq(grid, &state.m),
            grad_dt_v: wl.grad_norm_sq(grid, &rhs.dv),
        })
    }

    /// `δ²‖v‖² + ‖∇M‖² + δ‖∇ψ‖² + ‖∂_t v‖² + ‖∇∂_t ψ‖²`
    pub fn energy(&self, delta: f64) -> f64 {
        delta * delta * self.v + self.grad_m + delta * self.grad_psi + self.dt_v + self.grad_dt_psi
    }

    /// `½δ²ν‖∇v‖² + δ²ν‖∇∂_tψ‖² + 2‖ΔM‖² + (δ/2ν)‖∇ψ‖² + ν‖∇∂_t v‖²`
    pub fn dissipation(&self, delta: f64, nu: f64) -> f64 {
        0.5 * delta * delta * nu * self.grad_v
            + delta * delta * nu * self.grad_dt_psi
            + 2.0 * self.lap_m
            + delta / (2.0 * nu) * self.grad_psi
            + nu * self.grad_dt_v
    }
}

/// `(𝔼_s, 𝔻_s)` from a reformulated state and its evaluated tendencies.
pub fn global_functionals(grid: &TorusGrid, state: &StateB, rhs: &RhsB, nu: f64, s: usize, delta: f64) -> Result<(f64, f64)> {
    let p = GlobalParts::compute(grid, state, rhs, s)?;
    Ok((p.energy(delta), p.dissipation(delta, nu)))
}

/// Geometric constraint residuals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintResiduals {
    pub sphere_res: f64,
    pub det_res: f64,
    pub curl_res: f64,
    pub div_v_res: f64,
    pub trg_vs_divpsi_res: f64,
    /// `‖tr G‖_{H^s} / ‖G‖²_{H^s}`, 0 when `G = 0`.
    pub trg_ratio: f64,
}

fn max_dev_from_one(f: &ScalarField) -> f64 {
    f.values.iter().fold(0.0_f64, |w, v| w.max((v - 1.0).abs()))
}

fn trace_ratio(grid: &TorusGrid, g: &MatrixField, s: usize) -> f64 {
    let w = SobolevWeights::new(grid, s);
    let num = w.norm_sq(grid, &trace(g)).sqrt();
    let den = w.norm_sq_mat(grid, g);
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn constraints_a(grid: &TorusGrid, state: &StateA, s: usize) -> Result<ConstraintResiduals> {
    let g = f_to_g(&state.f)?;
    let psi = psi_from_g(grid, &g);
    let trg = trace(&grad_rows(grid, &psi));
    Ok(ConstraintResiduals {
        sphere_res: sphere_residual(&state.m),
        det_res: max_dev_from_one(&det_field(&state.f)),
        curl_res: fields::curl_residual(grid, &g),
        div_v_res: grid.divergence(&state.v).max_abs(),
        trg_vs_divpsi_res: (&trg - &grid.divergence(&psi)).max_abs(),
        trg_ratio: trace_ratio(grid, &g, s),
    })
}

pub fn constraints_b(grid: &TorusGrid, state: &StateB, s: usize) -> Result<ConstraintResiduals> {
    let g = state.g(grid);
    let f = fields::g_to_f(&g)?;
    Ok(ConstraintResiduals {
        sphere_res: sphere_residual(&state.m),
        det_res: max_dev_from_one(&det_field(&f)),
        curl_res: fields::curl_residual(grid, &g),
        div_v_res: grid.divergence(&state.v).max_abs(),
        trg_vs_divpsi_res: (&trace(&g) - &grid.divergence(&state.psi)).max_abs(),
        trg_ratio: trace_ratio(grid, &g, s),
    })
}

/// Settings shared by every diagnostic evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticSettings {
    pub s: usize,
    pub delta: f64,
    pub dealias: bool,
}

/// One time-stamped row of energies, dissipation rates and residuals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRecord {
    pub t: f64,
    pub e_basic: f64,
    pub e_s: f64,
    pub d_s: f64,
    pub e_global: f64,
    pub d_global: f64,
    pub dt_v_norm: f64,
    pub dt_psi_norm: f64,
    pub sphere_res: f64,
    pub det_res: f64,
    pub curl_res: f64,
    pub div_v_res: f64,
    pub trg_vs_divpsi_res: f64,
    pub trg_ratio: f64,
}

/// CSV header, one column per [`DiagnosticRecord`] field in declaration order.
pub const CSV_HEADER: &str = "t,e_basic,e_s,d_s,e_global,d_global,dt_v_norm,dt_psi_norm,sphere_res,det_res,curl_res,div_v_res,trG_vs_divpsi_res,trG_ratio";

impl DiagnosticRecord {
    pub fn values(&self) -> [f64; 14] {
        [
            self.t,
            self.e_basic,
            self.e_s,
            self.d_s,
            self.e_global,
            self.d_global,
            self.dt_v_norm,
            self.dt_psi_norm,
            self.sphere_res,
            self.det_res,
            self.curl_res,
            self.div_v_res,
            self.trg_vs_divpsi_res,
            self.trg_ratio,
        ]
    }

    pub fn from_values(v: &[f64]) -> Result<Self> {
        if v.len() != 14 {
            return Err(Error::Config(format!("diagnostic row has {} columns, expected 14", v.len())));
        }
        Ok(Self {
            t: v[0],
            e_basic: v[1],
            e_s: v[2],
            d_s: v[3],
            e_global: v[4],
            d_global: v[5],
            dt_v_norm: v[6],
            dt_psi_norm: v[7],
            sphere_res: v[8],
            det_res: v[9],
            curl_res: v[10],
            div_v_res: v[11],
            trg_vs_divpsi_res: v[12],
            trg_ratio: v[13],
        })
    }

    /// Decimal row with 17 significant digits.
    pub fn to_csv_row(&self) -> String {
        self.values().iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(",")
    }

    pub fn parse_csv_row(line: &str) -> Result<Self> {
        let vals = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Config(format!("bad CSV value {s:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_values(&vals)
    }

    pub fn is_valid(&self) -> bool {
        self.values().iter().all(|v| v.is_finite() && *v >= 0.0)
    }

    /// Diagnostics of a primitive-system state. The global functionals need
    /// a potential and are reported as 0 here.
    pub fn for_state_a(grid: &TorusGrid, state: &StateA, nu: f64, rhs_dv: &VectorField, set: &DiagnosticSettings) -> Result<Self> {
        let ws = SobolevWeights::new(grid, set.s);
        let (e_s, d_s) = local_with(grid, &ws, &state.v, &state.f, &state.m, nu);
        let c = constraints_a(grid, state, set.s)?;
        let wl = SobolevWeights::new(grid, set.s.saturating_sub(2));
        Ok(Self {
            t: state.t,
            e_basic: basic_energy(grid, &state.v, &state.f, &state.m),
            e_s,
            d_s,
            dt_v_norm: wl.norm_sq_vec(grid, rhs_dv),
            sphere_res: c.sphere_res,
            det_res: c.det_res,
            curl_res: c.curl_res,
            div_v_res: c.div_v_res,
            trg_vs_divpsi_res: c.trg_vs_divpsi_res,
            trg_ratio: c.trg_ratio,
            ..Default::default()
        })
    }

    pub fn for_state_b(grid: &TorusGrid, state: &StateB, nu: f64, rhs: &RhsB, set: &DiagnosticSettings) -> Result<Self> {
        let f = fields::g_to_f(&state.g(grid))?;
        let ws = SobolevWeights::new(grid, set.s);
        let (e_s, d_s) = local_with(grid, &ws, &state.v, &f, &state.m, nu);
        let parts = GlobalParts::compute(grid, state, rhs, set.s)?;
        let c = constraints_b(grid, state, set.s)?;
        Ok(Self {
            t: state.t,
            e_basic: basic_energy(grid, &state.v, &f, &state.m),
            e_s,
            d_s,
            e_global: parts.energy(set.delta),
            d_global: parts.dissipation(set.delta, nu),
            dt_v_norm: parts.dt_v,
            dt_psi_norm: parts.grad_dt_psi,
            sphere_res: c.sphere_res,
            det_res: c.det_res,
            curl_res: c.curl_res,
            div_v_res: c.div_v_res,
            trg_vs_divpsi_res: c.trg_vs_divpsi_res,
            trg_ratio: c.trg_ratio,
        })
    }
}

/// Diagnostics with the tendencies evaluated on the spot.
pub fn diagnose_a(grid: &TorusGrid, state: &StateA, params: &crate::fields::PhysParams, set: &DiagnosticSettings) -> Result<DiagnosticRecord> {
    let rhs = Dynamics::new(grid, set.dealias).rhs_a(state, params);
    DiagnosticRecord::for_state_a(grid, state, params.nu, &rhs.dv, set)
}

pub fn diagnose_b(grid: &TorusGrid, state: &StateB, nu: f64, set: &DiagnosticSettings) -> Result<DiagnosticRecord> {
    let rhs = Dynamics::new(grid, set.dealias).rhs_b(state, nu)?;
    DiagnosticRecord::for_state_b(grid, state, nu, &rhs, set)
}
