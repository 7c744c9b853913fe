//! Exact Fourier solver for `−Δw + ∇q = f`, `∇·w = g` on the torus, and the
//! `w = νv − ψ` diagnostic built on it.

use serde::{Deserialize, Serialize};

use crate::dynamics::Dynamics;
use crate::energetics::SobolevWeights;
use crate::error::{Error, Result};
use crate::fields::StateB;
use crate::spectral::{Complex, ScalarField, Spectrum, TorusGrid, VectorField};

#[derive(Clone, Debug, PartialEq)]
pub struct StokesSolution {
    pub w: VectorField,
    /// Zero mean.
    pub q: ScalarField,
}

/// Solves mode by mode. The zero mode of `w` is set to 0 and the mean of `f`
/// is ignored. First derivatives use the Nyquist-zeroed wavenumber, so on
/// ordinary modes
/// `q̂ = −iξ·f̂/|ξ|² + ĝ`, `ŵ = (f̂ − ξ(ξ·f̂)/|ξ|²)/|ξ|² − iξĝ/|ξ|²`.
pub fn solve_generalized_stokes(grid: &TorusGrid, f: &VectorField, g: &ScalarField) -> Result<StokesSolution> {
    let d = grid.dim();
    if f.ncomp() != d {
        return Err(Error::ShapeMismatch(format!("forcing has {} components, expected {d}", f.ncomp())));
    }
    for c in &f.comps {
        grid.check(c)?;
    }
    grid.check(g)?;
    let mean = g.mean();
    if mean.abs() > 1e-12 * (1.0 + g.max_abs()) {
        return Err(Error::NonzeroMean { mean });
    }
    let fs: Vec<Spectrum> = f.comps.iter().map(|c| grid.forward(c)).collect();
    let gs = grid.forward(g);
    let mut ws = vec![Spectrum::zeros(grid.len()); d];
    let mut qs = Spectrum::zeros(grid.len());
    let i = Complex::new(0.0, 1.0);
    for idx in 1..grid.len() {
        let k2 = grid.ksq(idx);
        let kd = grid.wavevector_d(idx);
        let kd2: f64 = kd[..d].iter().map(|x| x * x).sum();
        let q = if kd2 == 0.0 {
            Complex::new(0.0, 0.0)
        } else {
            let kf: Complex = (0..d).map(|a| fs[a].coeffs[idx] * kd[a]).sum();
            (gs.coeffs[idx] * k2 - i * kf) / kd2
        };
        qs.coeffs[idx] = q;
        for a in 0..d {
            ws[a].coeffs[idx] = (fs[a].coeffs[idx] - i * kd[a] * q) / k2;
        }
    }
    Ok(StokesSolution {
        w: VectorField { comps: ws.iter().map(|s| grid.backward(s)).collect() },
        q: grid.backward(&qs),
    })
}

/// `(‖−Δw + ∇q − f‖_max, ‖∇·w − g‖_max)`
pub fn stokes_residuals(grid: &TorusGrid, sol: &StokesSolution, f: &VectorField, g: &ScalarField) -> (f64, f64) {
    let lap = grid.laplacian_vec(&sol.w);
    let gq = grid.gradient(&sol.q);
    let fmean: Vec<f64> = f.comps.iter().map(|c| c.mean()).collect();
    let mom = (0..grid.dim())
        .map(|a| {
            let r = &(&gq.comps[a] - &lap.comps[a]) - &f.comps[a];
            r.values.iter().map(|x| (x + fmean[a]).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let div = (&grid.divergence(&sol.w) - g).max_abs();
    (mom, div)
}

/// Output of [`w_diagnostic`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WDiagnostic {
    /// `‖∇w‖_{H^s}`
    pub grad_w: f64,
    /// `‖∇q‖_{H^{s−1}}`
    pub grad_q: f64,
    /// `4‖∇∂_t v‖_{H^{s−2}} + (‖v‖ + ‖∇ψ‖ + ‖∇M‖)(‖∇v‖ + ‖∇ψ‖ + ‖ΔM‖)` in `H^s`.
    pub bracket: f64,
    /// `grad_w / bracket`, `None` when both vanish.
    pub ratio: Option<f64>,
    /// `‖w − (νv − ψ)‖_max` after removing the mean of `νv − ψ`.
    pub closure_gap: f64,
}

/// Builds the forcing from the state and its momentum tendency, solves the
/// Stokes system, and compares `‖∇w‖_{H^s}` with the bracket of the a-priori
/// bound (constant taken as 1).
pub fn w_diagnostic(grid: &TorusGrid, state: &StateB, nu: f64, s: usize, dealias: bool) -> Result<WDiagnostic> {
    if s < 2 {
        return Err(Error::InvalidParameter(format!("w diagnostic needs s >= 2, got {s}")));
    }
    let dy = Dynamics::new(grid, dealias);
    let dv = dy.momentum_rhs_b(&state.v, &state.psi, &state.m, nu)?;
    let mut f = dy.nonlinear_force_b(&state.v, &state.psi, &state.m)?;
    f.axpy(-1.0, &dv);
    let g = grid.divergence(&state.psi).scaled(-1.0);
    let sol = solve_generalized_stokes(grid, &f, &g)?;

    let ws = SobolevWeights::new(grid, s);
    let ws1 = SobolevWeights::new(grid, s - 1);
    let ws2 = SobolevWeights::new(grid, s - 2);
    let grad_w = ws.grad_norm_sq(grid, &sol.w).sqrt();
    let grad_q = ws1.norm_sq_vec(grid, &grid.gradient(&sol.q)).sqrt();
    let lhs_a = ws.norm_sq_vec(grid, &state.v).sqrt() + ws.grad_norm_sq(grid, &state.psi).sqrt() + ws.grad_norm_sq(grid, &state.m).sqrt();
    let lhs_b = ws.grad_norm_sq(grid, &state.v).sqrt() + ws.grad_norm_sq(grid, &state.psi).sqrt() + ws.lap_norm_sq(grid, &state.m).sqrt();
    let bracket = 4.0 * ws2.grad_norm_sq(grid, &dv).sqrt() + lhs_a * lhs_b;
    let ratio = if bracket == 0.0 { None } else { Some(grad_w / bracket) };

    let mut direct = state.v.scaled(nu);
    direct.axpy(-1.0, &state.psi);
    let closure_gap = (0..grid.dim())
        .map(|a| {
            let m = direct.comps[a].mean();
            sol.w.comps[a].values.iter().zip(&direct.comps[a].values).map(|(x, y)| (x - (y - m)).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    Ok(WDiagnostic { grad_w, grad_q, bracket, ratio, closure_gap })
}
