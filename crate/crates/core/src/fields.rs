//! State containers for the primitive `(v, F, M)` and reformulated
//! `(v, ψ, M)` systems, the external field, and the pointwise algebra that
//! links `F`, `G = F⁻¹ − I` and `ψ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{MatrixField, ScalarField, TorusGrid, VectorField};

/// Smallest admissible `|det|` for pointwise inversion.
pub const DET_THRESHOLD: f64 = 0.1;

/// External magnetic field `H(t, x) = base + amplitude · cos(k·x − ω t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExternalField {
    #[default]
    Zero,
    Uniform([f64; 3]),
    Mode {
        base: [f64; 3],
        amplitude: [f64; 3],
        wavevector: [i32; 3],
        omega: f64,
    },
}

impl ExternalField {
    pub fn is_zero(&self) -> bool {
        match self {
            ExternalField::Zero => true,
            ExternalField::Uniform(h) => h.iter().all(|v| *v == 0.0),
            ExternalField::Mode { base, amplitude, .. } => {
                base.iter().chain(amplitude.iter()).all(|v| *v == 0.0)
            }
        }
    }

    /// Samples the three components at time `t`.
    pub fn sample(&self, grid: &TorusGrid, t: f64) -> VectorField {
        match self {
            ExternalField::Zero => VectorField::zeros(3, grid.len()),
            ExternalField::Uniform(h) => VectorField::constant(h, grid.len()),
            ExternalField::Mode { base, amplitude, wavevector, omega } => {
                let phase = grid.sample(|x| phase_at(wavevector, x, *omega, t).cos());
                VectorField {
                    comps: (0..3)
                        .map(|c| phase.map(|p| base[c] + amplitude[c] * p))
                        .collect(),
                }
            }
        }
    }

    /// `((∇H)ᵀ M)_i = ∂_i H_k M_k`, a `d`-component field.
    pub fn grad_transpose_dot(&self, grid: &TorusGrid, t: f64, m: &VectorField) -> VectorField {
        let d = grid.dim();
        match self {
            ExternalField::Mode { amplitude, wavevector, omega, .. } => {
                // ∂_i H_k = −amplitude_k k_i sin(k·x − ωt)
                let mut out = VectorField::zeros(d, grid.len());
                for p in 0..grid.len() {
                    let x = grid.point(p);
                    let s = phase_at(wavevector, &x, *omega, t).sin();
                    let am: f64 = (0..3).map(|c| amplitude[c] * m.comps[c].values[p]).sum();
                    for i in 0..d {
                        out.comps[i].values[p] = -(wavevector[i] as f64) * s * am;
                    }
                }
                out
            }
            _ => VectorField::zeros(d, grid.len()),
        }
    }
}

fn phase_at(k: &[i32; 3], x: &[f64; 3], omega: f64, t: f64) -> f64 {
    k[0] as f64 * x[0] + k[1] as f64 * x[1] + k[2] as f64 * x[2] - omega * t
}

/// Physical coefficients. `A = ½`, `μ₀ = γ = λ = 1` and `W(F) = ½|F|²` are
/// fixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    pub nu: f64,
    pub kappa: f64,
    pub h_ext: ExternalField,
}

impl Default for PhysParams {
    fn default() -> Self {
        Self { nu: 1.0, kappa: 0.0, h_ext: ExternalField::Zero }
    }
}

impl PhysParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::InvalidParameter(format!("nu must be > 0, got {}", self.nu)));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa must be >= 0, got {}", self.kappa)));
        }
        Ok(())
    }
}

/// Primitive formulation: velocity, deformation gradient, magnetization.
#[derive(Clone, Debug, PartialEq)]
pub struct StateA {
    pub t: f64,
    pub v: VectorField,
    pub f: MatrixField,
    pub m: VectorField,
}

/// Reformulated system: velocity, potential `ψ` with `G = ∇ψ`, magnetization.
#[derive(Clone, Debug, PartialEq)]
pub struct StateB {
    pub t: f64,
    pub v: VectorField,
    pub psi: VectorField,
    pub m: VectorField,
}

impl StateA {
    pub fn check(&self, grid: &TorusGrid) -> Result<()> {
        let (d, len) = (grid.dim(), grid.len());
        let ok = self.v.ncomp() == d
            && self.f.dim == d
            && self.f.entries.len() == d * d
            && self.m.ncomp() == 3
            && self.v.comps.iter().chain(&self.f.entries).chain(&self.m.comps).all(|c| c.len() == len);
        if !ok {
            return Err(Error::ShapeMismatch("state A fields do not match the grid".into()));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.f.is_finite() && self.m.is_finite()
    }

    /// Converts to `(v, ψ, M)`, recovering `ψ` from the rows of `F⁻¹ − I`.
    pub fn to_b(&self, grid: &TorusGrid) -> Result<StateB> {
        let g = f_to_g(&self.f)?;
        Ok(StateB { t: self.t, v: self.v.clone(), psi: psi_from_g(grid, &g), m: self.m.clone() })
    }
}

impl StateB {
    pub fn check(&self, grid: &TorusGrid) -> Result<()> {
        let (d, len) = (grid.dim(), grid.len());
        let ok = self.v.ncomp() == d
            && self.psi.ncomp() == d
            && self.m.ncomp() == 3
            && self.v.comps.iter().chain(&self.psi.comps).chain(&self.m.comps).all(|c| c.len() == len);
        if !ok {
            return Err(Error::ShapeMismatch("state B fields do not match the grid".into()));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.psi.is_finite() && self.m.is_finite()
    }

    pub fn g(&self, grid: &TorusGrid) -> MatrixField {
        grad_rows(grid, &self.psi)
    }

    /// Converts to `(v, F, M)` with `F = (I + ∇ψ)⁻¹`.
    pub fn to_a(&self, grid: &TorusGrid) -> Result<StateA> {
        Ok(StateA { t: self.t, v: self.v.clone(), f: g_to_f(&self.g(grid))?, m: self.m.clone() })
    }
}

pub(crate) fn det3(m: &[[f64; 3]; 3], d: usize) -> f64 {
    if d == 2 {
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    } else {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

pub(crate) fn inv3(m: &[[f64; 3]; 3], d: usize, det: f64) -> [[f64; 3]; 3] {
    let mut r = [[0.0; 3]; 3];
    if d == 2 {
        r[0][0] = m[1][1] / det;
        r[0][1] = -m[0][1] / det;
        r[1][0] = -m[1][0] / det;
        r[1][1] = m[0][0] / det;
    } else {
        r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
        r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
        r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
        r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
        r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
        r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
        r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
        r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
        r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
    }
    r
}

/// Pointwise inverse, failing if `|det| < 0.1` anywhere.
pub fn invert_pointwise(a: &MatrixField) -> Result<MatrixField> {
    let d = a.dim;
    let len = a.npoints();
    let mut out = MatrixField::zeros(d, len);
    let mut min_det = f64::INFINITY;
    for p in 0..len {
        let m = a.at(p);
        let det = det3(&m, d);
        min_det = min_det.min(det.abs());
        out.set_at(p, &inv3(&m, d, det));
    }
    // NaN compares false, so a non-finite det also lands here.
    if !(min_det >= DET_THRESHOLD) {
        return Err(Error::NearSingular { min_det, threshold: DET_THRESHOLD });
    }
    Ok(out)
}

fn add_identity(a: &mut MatrixField, sign: f64) {
    for i in 0..a.dim {
        a.get_mut(i, i).values.iter_mut().for_each(|v| *v += sign);
    }
}

/// `G = F⁻¹ − I`.
pub fn f_to_g(f: &MatrixField) -> Result<MatrixField> {
    let mut g = invert_pointwise(f)?;
    add_identity(&mut g, -1.0);
    Ok(g)
}

/// `F = (I + G)⁻¹`.
pub fn g_to_f(g: &MatrixField) -> Result<MatrixField> {
    let mut u = g.clone();
    add_identity(&mut u, 1.0);
    invert_pointwise(&u)
}

pub fn det_field(f: &MatrixField) -> ScalarField {
    let len = f.npoints();
    ScalarField { values: (0..len).map(|p| det3(&f.at(p), f.dim)).collect() }
}

/// `G^{jk} = ∂_k ψ^j`: row `j` is the gradient of `ψ^j`.
pub fn grad_rows(grid: &TorusGrid, psi: &VectorField) -> MatrixField {
    let d = grid.dim();
    let mut g = MatrixField::zeros(d, grid.len());
    for j in 0..d {
        let grad = grid.gradient(&psi.comps[j]);
        for (k, c) in grad.comps.into_iter().enumerate() {
            *g.get_mut(j, k) = c;
        }
    }
    g
}

/// Zero-mean potential whose row gradients best match `G`: `ψ^j = Δ⁻¹ ∂_k G^{jk}`.
pub fn psi_from_g(grid: &TorusGrid, g: &MatrixField) -> VectorField {
    let d = grid.dim();
    let comps = (0..d)
        .map(|j| {
            let row = VectorField { comps: (0..d).map(|k| g.get(j, k).clone()).collect() };
            let mut s = grid.forward(&grid.divergence(&row));
            for (idx, c) in s.coeffs.iter_mut().enumerate() {
                let k2 = grid.ksq(idx);
                *c = if k2 == 0.0 { Default::default() } else { *c / -k2 };
            }
            grid.backward(&s)
        })
        .collect();
    VectorField { comps }
}

/// `max |∂_i G^{jk} − ∂_k G^{ji}|` over the grid and all index triples.
pub fn curl_residual(grid: &TorusGrid, g: &MatrixField) -> f64 {
    let d = grid.dim();
    // dg[(j*d + k)*d + i] = ∂_i G^{jk}
    let mut dg = Vec::with_capacity(d * d * d);
    for e in &g.entries {
        let s = grid.forward(e);
        for i in 0..d {
            dg.push(grid.backward(&grid.d_spectrum(&s, i)));
        }
    }
    let mut worst = 0.0_f64;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                if i == k {
                    continue;
                }
                let a = &dg[(j * d + k) * d + i];
                let b = &dg[(j * d + i) * d + k];
                worst = worst.max((a - b).max_abs());
            }
        }
    }
    worst
}

/// `max_x | |M(x)| − 1 |`
pub fn sphere_residual(m: &VectorField) -> f64 {
    m.pointwise_norm().values.iter().fold(0.0_f64, |w, n| w.max((n - 1.0).abs()))
}

/// Divides `M` pointwise by its length; fails when `|M| < 0.5` somewhere.
pub fn renormalize_m(m: &VectorField) -> Result<VectorField> {
    let norm = m.pointwise_norm();
    let min_norm = norm.values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if !(min_norm >= 0.5) {
        return Err(Error::SphereCollapse { min_norm });
    }
    Ok(VectorField {
        comps: m
            .comps
            .iter()
            .map(|c| ScalarField {
                values: c.values.iter().zip(&norm.values).map(|(v, n)| v / n).collect(),
            })
            .collect(),
    })
}

/// Pointwise trace.
pub fn trace(a: &MatrixField) -> ScalarField {
    let mut t = ScalarField::zeros(a.npoints());
    for i in 0..a.dim {
        t += a.get(i, i);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TorusGrid {
        TorusGrid::new(2, 32).unwrap()
    }

    #[test]
    fn identity_maps_to_zero_g() {
        let g = f_to_g(&MatrixField::identity(2, 16)).unwrap();
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn shear_inverse() {
        let f = MatrixField::constant(2, &[1.0, 0.2, 0.0, 1.0], 4);
        let g = f_to_g(&f).unwrap();
        let expect = MatrixField::constant(2, &[0.0, -0.2, 0.0, 0.0], 4);
        assert!(g.sub(&expect).max_abs() <= 1e-15);
        let back = g_to_f(&g).unwrap();
        assert!(back.sub(&f).max_abs() <= 1e-13);
    }

    #[test]
    fn near_singular_is_rejected() {
        let f = MatrixField::constant(2, &[0.05, 0.0, 0.0, 1.0], 4);
        assert!(matches!(f_to_g(&f), Err(Error::NearSingular { .. })));
    }

    #[test]
    fn determinants() {
        for rows in [[1.0, 0.0, 0.0, 1.0], [1.0, 0.2, 0.0, 1.0], [2.0, 0.0, 0.0, 0.5]] {
            let d = det_field(&MatrixField::constant(2, &rows, 8));
            assert!(d.values.iter().all(|v| (v - 1.0).abs() <= 1e-15));
        }
    }

    #[test]
    fn three_by_three_round_trip() {
        let f = MatrixField::constant(3, &[1.0, 0.1, 0.2, -0.3, 1.1, 0.0, 0.05, 0.4, 0.9], 3);
        let back = g_to_f(&f_to_g(&f).unwrap()).unwrap();
        assert!(back.sub(&f).max_abs() <= 1e-13);
    }

    #[test]
    fn curl_examples() {
        let gr = grid();
        let psi = VectorField {
            comps: vec![
                gr.sample(|x| (x[0] + x[1]).sin() + 0.3 * (2.0 * x[1]).cos()),
                gr.sample(|x| x[0].cos() * (3.0 * x[1]).sin()),
            ],
        };
        assert!(curl_residual(&gr, &grad_rows(&gr, &psi)) <= 1e-11);

        let mut g = MatrixField::zeros(2, gr.len());
        *g.get_mut(0, 1) = gr.sample(|x| x[0].sin());
        assert!((curl_residual(&gr, &g) - 1.0).abs() <= 1e-12);

        assert_eq!(curl_residual(&gr, &MatrixField::zeros(2, gr.len())), 0.0);
    }

    #[test]
    fn sphere_examples() {
        let gr = grid();
        let m = VectorField::constant(&[0.0, 0.0, 1.0], gr.len());
        assert_eq!(sphere_residual(&m), 0.0);
        let hm = VectorField { comps: vec![gr.sample(|x| x[0].cos()), gr.sample(|x| x[0].sin()), gr.zeros()] };
        assert!(sphere_residual(&hm) <= 1e-15);
        let big = m.scaled(1.1);
        assert!((sphere_residual(&big) - 0.1).abs() <= 1e-15);
        let r = renormalize_m(&big).unwrap();
        assert!(r.sub(&m).max_abs() <= 1e-15);
        assert!(matches!(renormalize_m(&m.scaled(0.4)), Err(Error::SphereCollapse { .. })));
    }

    #[test]
    fn trace_matches_divergence_of_psi() {
        let gr = grid();
        let psi = VectorField {
            comps: vec![gr.sample(|x| (2.0 * x[0]).sin() * x[1].cos()), gr.sample(|x| (x[0] - x[1]).cos())],
        };
        let tr = trace(&grad_rows(&gr, &psi));
        let div = gr.divergence(&psi);
        assert!((&tr - &div).max_abs() <= 1e-13);
    }

    #[test]
    fn psi_recovered_from_its_gradient() {
        let gr = grid();
        let psi = VectorField {
            comps: vec![gr.sample(|x| 0.01 * (x[0] + 2.0 * x[1]).sin()), gr.sample(|x| 0.02 * x[1].cos())],
        };
        let back = psi_from_g(&gr, &grad_rows(&gr, &psi));
        assert!(back.sub(&psi).max_abs() <= 1e-15);
    }

    #[test]
    fn mode_field_gradient() {
        let gr = grid();
        let h = ExternalField::Mode { base: [0.0; 3], amplitude: [0.0, 0.0, 2.0], wavevector: [1, 0, 0], omega: 0.0 };
        let m = VectorField::constant(&[0.0, 0.0, 1.0], gr.len());
        let gh = h.grad_transpose_dot(&gr, 0.0, &m);
        // ∂_x (2 cos x) = −2 sin x
        let expect = gr.sample(|x| -2.0 * x[0].sin());
        assert!((&gh.comps[0] - &expect).max_abs() <= 1e-14);
        assert_eq!(gh.comps[1].max_abs(), 0.0);
    }
}
