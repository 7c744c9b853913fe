//! Right-hand sides of the primitive and reformulated systems.
//!
//! Products are formed pointwise in physical space; every derivative is
//! spectral. With dealiasing on, each nonlinear term passes through the 2/3
//! mask before it is differentiated or returned. The divergence of a matrix
//! field is taken over its first index, `(∇·A)_i = ∂_j A^{ji}`; every tensor
//! differentiated here is symmetric.
//!
//! Each tendency is split into an explicit part (transport, stresses,
//! precession, multiplier) and a linear diffusive part (`νΔv`, `ΔM`, `κΔF`)
//! so the time stepper can treat the latter implicitly.

use crate::error::Result;
use crate::fields::{invert_pointwise, ExternalField, PhysParams, StateA, StateB};
use crate::spectral::{Complex, MatrixField, ScalarField, Spectrum, TorusGrid, VectorField};

/// Evaluated tendencies of the primitive system.
#[derive(Clone, Debug)]
pub struct RhsA {
    pub dv: VectorField,
    pub df: MatrixField,
    pub dm: VectorField,
}

/// Evaluated tendencies of the reformulated system.
#[derive(Clone, Debug)]
pub struct RhsB {
    pub dv: VectorField,
    pub dpsi: VectorField,
    pub dm: VectorField,
}

/// Spectral evaluator for all nonlinear terms on one grid.
#[derive(Clone, Copy, Debug)]
pub struct Dynamics<'a> {
    pub grid: &'a TorusGrid,
    pub dealias: bool,
}

impl<'a> Dynamics<'a> {
    pub fn new(grid: &'a TorusGrid, dealias: bool) -> Self {
        Self { grid, dealias }
    }

    fn mask(&self, s: &mut Spectrum) {
        if self.dealias {
            self.grid.dealias_spectrum(s);
        }
    }

    /// Dealiases a field that came out of pointwise products.
    fn filtered(&self, f: ScalarField) -> ScalarField {
        if self.dealias {
            let mut s = self.grid.forward(&f);
            self.grid.dealias_spectrum(&mut s);
            self.grid.backward(&s)
        } else {
            f
        }
    }

    /// `grads[c].comps[i] = ∂_i u^c`
    pub fn component_gradients(&self, u: &VectorField) -> Vec<VectorField> {
        u.comps.iter().map(|c| self.grid.gradient(c)).collect()
    }

    /// `v·∇f` given the gradient of `f`.
    fn advect(&self, v: &VectorField, grad: &VectorField) -> ScalarField {
        let mut out = ScalarField::zeros(self.grid.len());
        for (vi, gi) in v.comps.iter().zip(&grad.comps) {
            out.add_product(1.0, vi, gi);
        }
        out
    }

    /// Spectra of `(∇·T)_i = ∂_j T_ij` for a symmetric tensor given entrywise.
    fn div_tensor(&self, tensor: &[ScalarField], acc: &mut [Spectrum]) {
        let d = self.grid.dim();
        for i in 0..d {
            for j in 0..d {
                let mut s = self.grid.forward(&tensor[i * d + j]);
                self.mask(&mut s);
                for (idx, (a, c)) in acc[i].coeffs.iter_mut().zip(&s.coeffs).enumerate() {
                    *a += c * Complex::new(0.0, self.grid.wavevector_d(idx)[j]);
                }
            }
        }
    }

    /// `(∇M⊙∇M)_{ij} = ∂_i M_k ∂_j M_k`, row-major.
    fn ericksen_tensor(&self, grad_m: &[VectorField]) -> Vec<ScalarField> {
        let d = self.grid.dim();
        let mut t = vec![ScalarField::zeros(self.grid.len()); d * d];
        for i in 0..d {
            for j in i..d {
                let mut e = ScalarField::zeros(self.grid.len());
                for gk in grad_m {
                    e.add_product(1.0, &gk.comps[i], &gk.comps[j]);
                }
                if j != i {
                    t[j * d + i] = e.clone();
                }
                t[i * d + j] = e;
            }
        }
        t
    }

    fn f_ft(&self, f: &MatrixField) -> Vec<ScalarField> {
        let d = self.grid.dim();
        let mut t = vec![ScalarField::zeros(self.grid.len()); d * d];
        for i in 0..d {
            for j in i..d {
                let mut e = ScalarField::zeros(self.grid.len());
                for k in 0..d {
                    e.add_product(1.0, f.get(i, k), f.get(j, k));
                }
                if j != i {
                    t[j * d + i] = e.clone();
                }
                t[i * d + j] = e;
            }
        }
        t
    }

    fn finish_vector(&self, acc: Vec<Spectrum>, project: bool) -> VectorField {
        let mut acc = acc;
        if project {
            self.grid.leray_spectra(&mut acc);
        }
        VectorField { comps: acc.iter().map(|s| self.grid.backward(s)).collect() }
    }

    /// `Γ(M) = |∇M|² − M·H`
    pub fn lagrange_multiplier(&self, m: &VectorField, h: &VectorField) -> ScalarField {
        let grads = self.component_gradients(m);
        self.multiplier_from(&grads, m, h)
    }

    fn multiplier_from(&self, grad_m: &[VectorField], m: &VectorField, h: &VectorField) -> ScalarField {
        let mut gamma = ScalarField::zeros(self.grid.len());
        for g in grad_m {
            for c in &g.comps {
                gamma.add_product(1.0, c, c);
            }
        }
        for (mk, hk) in m.comps.iter().zip(&h.comps) {
            gamma.add_product(-1.0, mk, hk);
        }
        gamma
    }

    /// Explicit LLG terms `−v·∇M + H + Γ(M)M − M×(ΔM + H)`.
    ///
    /// With `cutoff = Some(K)` the nonlinear part is passed through the sharp
    /// Fourier truncation `|ξ| ≤ K` (the mollified system); `H` is added
    /// untruncated.
    pub fn llg_explicit(
        &self,
        v: Option<&VectorField>,
        m: &VectorField,
        h: &VectorField,
        cutoff: Option<f64>,
    ) -> VectorField {
        let grads = self.component_gradients(m);
        self.llg_explicit_from(v, m, &grads, h, cutoff)
    }

    fn llg_explicit_from(
        &self,
        v: Option<&VectorField>,
        m: &VectorField,
        grad_m: &[VectorField],
        h: &VectorField,
        cutoff: Option<f64>,
    ) -> VectorField {
        let gamma = self.multiplier_from(grad_m, m, h);
        let lap = self.grid.laplacian_vec(m);
        let field = lap.add(h);
        let cross = m.cross(&field);
        let comps = (0..3)
            .map(|k| {
                let mut nl = gamma.mul(&m.comps[k]);
                nl -= &cross.comps[k];
                if let Some(v) = v {
                    nl -= &self.advect(v, &grad_m[k]);
                }
                let needs_spectral = self.dealias || cutoff.is_some();
                let mut out = if needs_spectral {
                    let mut s = self.grid.forward(&nl);
                    self.mask(&mut s);
                    if let Some(kc) = cutoff {
                        self.grid.truncate_spectrum(&mut s, kc);
                    }
                    self.grid.backward(&s)
                } else {
                    nl
                };
                out += &h.comps[k];
                out
            })
            .collect();
        VectorField { comps }
    }

    /// `−v·∇M + ΔM + H + Γ(M)M − M×(ΔM + H)`
    pub fn llg_rhs(&self, v: &VectorField, m: &VectorField, h: &VectorField) -> VectorField {
        let mut out = self.llg_explicit(Some(v), m, h, None);
        out.axpy(1.0, &self.grid.laplacian_vec(m));
        out
    }

    /// `∂_j (∂_i M_k ∂_j M_k)`
    pub fn ericksen_stress_div(&self, m: &VectorField) -> VectorField {
        let grads = self.component_gradients(m);
        let t = self.ericksen_tensor(&grads);
        let mut acc = vec![Spectrum::zeros(self.grid.len()); self.grid.dim()];
        self.div_tensor(&t, &mut acc);
        self.finish_vector(acc, false)
    }

    /// `∂_j (F^{ik} F^{jk})`
    pub fn elastic_stress_div(&self, f: &MatrixField) -> VectorField {
        let t = self.f_ft(f);
        let mut acc = vec![Spectrum::zeros(self.grid.len()); self.grid.dim()];
        self.div_tensor(&t, &mut acc);
        self.finish_vector(acc, false)
    }

    /// Projected momentum tendency of the primitive system without `νΔv`.
    fn momentum_explicit_a(
        &self,
        v: &VectorField,
        grad_v: &[VectorField],
        f: &MatrixField,
        m: &VectorField,
        grad_m: &[VectorField],
        h_ext: &ExternalField,
        t: f64,
    ) -> VectorField {
        let d = self.grid.dim();
        // FFᵀ − ∇M⊙∇M
        let mut tensor = self.f_ft(f);
        for (a, b) in tensor.iter_mut().zip(self.ericksen_tensor(grad_m)) {
            *a -= &b;
        }
        let forcing = h_ext.grad_transpose_dot(self.grid, t, m);
        let mut acc = Vec::with_capacity(d);
        for i in 0..d {
            let mut pointwise = forcing.comps[i].clone();
            pointwise -= &self.advect(v, &grad_v[i]);
            let mut s = self.grid.forward(&pointwise);
            self.mask(&mut s);
            acc.push(s);
        }
        self.div_tensor(&tensor, &mut acc);
        self.finish_vector(acc, true)
    }

    /// `Leray[−v·∇v − ∇·(∇M⊙∇M) + ∇·(FFᵀ) + (∇H)ᵀM]`
    pub fn momentum_explicit(&self, v: &VectorField, f: &MatrixField, m: &VectorField, h_ext: &ExternalField, t: f64) -> VectorField {
        let grad_v = self.component_gradients(v);
        let grad_m = self.component_gradients(m);
        self.momentum_explicit_a(v, &grad_v, f, m, &grad_m, h_ext, t)
    }

    /// `Leray[−v·∇v − ∇·(∇M⊙∇M) + ∇·(FFᵀ) + νΔv + (∇H)ᵀM]`
    pub fn momentum_rhs_a(
        &self,
        v: &VectorField,
        f: &MatrixField,
        m: &VectorField,
        h_ext: &ExternalField,
        t: f64,
        nu: f64,
    ) -> VectorField {
        let grad_v = self.component_gradients(v);
        let grad_m = self.component_gradients(m);
        let mut out = self.momentum_explicit_a(v, &grad_v, f, m, &grad_m, h_ext, t);
        out.axpy(nu, &self.grid.laplacian_vec(v));
        self.grid.leray_project(&out)
    }

    fn deformation_explicit(&self, v: &VectorField, grad_v: &[VectorField], f: &MatrixField) -> MatrixField {
        let d = self.grid.dim();
        let mut out = MatrixField::zeros(d, self.grid.len());
        for i in 0..d {
            for j in 0..d {
                let fij = f.get(i, j);
                let grad_f = self.grid.gradient(fij);
                let mut e = self.advect(v, &grad_f).scaled(-1.0);
                // ((∇v)F)_{ij} = ∂_k v^i F^{kj}
                for k in 0..d {
                    e.add_product(1.0, &grad_v[i].comps[k], f.get(k, j));
                }
                *out.get_mut(i, j) = self.filtered(e);
            }
        }
        out
    }

    /// `−v·∇F + (∇v)F + κΔF` with `(∇v)_{ij} = ∂_j v^i`.
    pub fn deformation_rhs(&self, v: &VectorField, f: &MatrixField, kappa: f64) -> MatrixField {
        let grad_v = self.component_gradients(v);
        let mut out = self.deformation_explicit(v, &grad_v, f);
        if kappa != 0.0 {
            for (o, e) in out.entries.iter_mut().zip(&f.entries) {
                o.axpy(kappa, &self.grid.laplacian(e));
            }
        }
        out
    }

    /// `g(G) = (I+G)⁻¹(I+G)⁻ᵀ − I + G + Gᵀ`, exact pointwise algebra.
    pub fn g_of_g(&self, g: &MatrixField) -> Result<MatrixField> {
        g_remainder(g)
    }

    fn force_b_spectra(
        &self,
        v: &VectorField,
        grad_v: &[VectorField],
        g: &MatrixField,
        grad_m: &[VectorField],
    ) -> Result<Vec<Spectrum>> {
        let d = self.grid.dim();
        let mut tensor = g_remainder(g)?.entries;
        for (a, b) in tensor.iter_mut().zip(self.ericksen_tensor(grad_m)) {
            *a -= &b;
        }
        let mut acc = Vec::with_capacity(d);
        for i in 0..d {
            let mut s = self.grid.forward(&self.advect(v, &grad_v[i]).scaled(-1.0));
            self.mask(&mut s);
            acc.push(s);
        }
        self.div_tensor(&tensor, &mut acc);
        Ok(acc)
    }

    fn momentum_explicit_b(
        &self,
        v: &VectorField,
        grad_v: &[VectorField],
        psi: &VectorField,
        g: &MatrixField,
        grad_m: &[VectorField],
    ) -> Result<VectorField> {
        let mut acc = self.force_b_spectra(v, grad_v, g, grad_m)?;
        for (i, s) in acc.iter_mut().enumerate() {
            // −Δψ has symbol +|ξ|²
            let sp = self.grid.forward(&psi.comps[i]);
            for (idx, (a, p)) in s.coeffs.iter_mut().zip(&sp.coeffs).enumerate() {
                *a += p * self.grid.ksq(idx);
            }
        }
        Ok(self.finish_vector(acc, true))
    }

    /// `−v·∇v + ∇·g(∇ψ) − ∇·(∇M⊙∇M)`, not projected.
    pub fn nonlinear_force_b(&self, v: &VectorField, psi: &VectorField, m: &VectorField) -> Result<VectorField> {
        let grad_v = self.component_gradients(v);
        let grad_m = self.component_gradients(m);
        let g = crate::fields::grad_rows(self.grid, psi);
        let acc = self.force_b_spectra(v, &grad_v, &g, &grad_m)?;
        Ok(self.finish_vector(acc, false))
    }

    /// `Leray[νΔv − Δψ − v·∇v + ∇·g(∇ψ) − ∇·(∇M⊙∇M)]`
    pub fn momentum_rhs_b(&self, v: &VectorField, psi: &VectorField, m: &VectorField, nu: f64) -> Result<VectorField> {
        let grad_v = self.component_gradients(v);
        let grad_m = self.component_gradients(m);
        let g = crate::fields::grad_rows(self.grid, psi);
        let mut out = self.momentum_explicit_b(v, &grad_v, psi, &g, &grad_m)?;
        out.axpy(nu, &self.grid.laplacian_vec(v));
        Ok(self.grid.leray_project(&out))
    }

    fn psi_from_rows(&self, v: &VectorField, g: &MatrixField) -> VectorField {
        let d = self.grid.dim();
        let comps = (0..d)
            .map(|j| {
                let mut e = ScalarField::zeros(self.grid.len());
                for k in 0..d {
                    e.add_product(-1.0, &v.comps[k], g.get(j, k));
                }
                let mut e = self.filtered(e);
                e -= &v.comps[j];
                e
            })
            .collect();
        VectorField { comps }
    }

    /// `−v − v·∇ψ`
    pub fn psi_rhs(&self, v: &VectorField, psi: &VectorField) -> VectorField {
        let g = crate::fields::grad_rows(self.grid, psi);
        self.psi_from_rows(v, &g)
    }

    /// Explicit parts `(E_v, E_F, E_M)` of the primitive system.
    pub fn explicit_a(&self, s: &StateA, params: &PhysParams) -> RhsA {
        let grad_v = self.component_gradients(&s.v);
        let grad_m = self.component_gradients(&s.m);
        let h = params.h_ext.sample(self.grid, s.t);
        RhsA {
            dv: self.momentum_explicit_a(&s.v, &grad_v, &s.f, &s.m, &grad_m, &params.h_ext, s.t),
            df: self.deformation_explicit(&s.v, &grad_v, &s.f),
            dm: self.llg_explicit_from(Some(&s.v), &s.m, &grad_m, &h, None),
        }
    }

    /// Explicit parts `(E_v, E_ψ, E_M)` of the reformulated system (`H = 0`).
    pub fn explicit_b(&self, s: &StateB) -> Result<RhsB> {
        let grad_v = self.component_gradients(&s.v);
        let grad_m = self.component_gradients(&s.m);
        let g = s.g(self.grid);
        let h = VectorField::zeros(3, self.grid.len());
        Ok(RhsB {
            dv: self.momentum_explicit_b(&s.v, &grad_v, &s.psi, &g, &grad_m)?,
            dpsi: self.psi_from_rows(&s.v, &g),
            dm: self.llg_explicit_from(Some(&s.v), &s.m, &grad_m, &h, None),
        })
    }

    /// Full tendencies `(∂_t v, ∂_t F, ∂_t M)`.
    pub fn rhs_a(&self, s: &StateA, params: &PhysParams) -> RhsA {
        let mut r = self.explicit_a(s, params);
        r.dv.axpy(params.nu, &self.grid.laplacian_vec(&s.v));
        r.dv = self.grid.leray_project(&r.dv);
        r.dm.axpy(1.0, &self.grid.laplacian_vec(&s.m));
        if params.kappa != 0.0 {
            for (o, e) in r.df.entries.iter_mut().zip(&s.f.entries) {
                o.axpy(params.kappa, &self.grid.laplacian(e));
            }
        }
        r
    }

    /// Full tendencies `(∂_t v, ∂_t ψ, ∂_t M)`.
    pub fn rhs_b(&self, s: &StateB, nu: f64) -> Result<RhsB> {
        let mut r = self.explicit_b(s)?;
        r.dv.axpy(nu, &self.grid.laplacian_vec(&s.v));
        r.dv = self.grid.leray_project(&r.dv);
        r.dm.axpy(1.0, &self.grid.laplacian_vec(&s.m));
        Ok(r)
    }
}

/// `g(G) = (I+G)⁻¹(I+G)⁻ᵀ − I + G + Gᵀ`
pub fn g_remainder(g: &MatrixField) -> Result<MatrixField> {
    let d = g.dim;
    let mut u = g.clone();
    for i in 0..d {
        u.get_mut(i, i).values.iter_mut().for_each(|x| *x += 1.0);
    }
    let f = invert_pointwise(&u)?;
    let mut out = MatrixField::zeros(d, g.npoints());
    for p in 0..g.npoints() {
        let fm = f.at(p);
        let gm = g.at(p);
        let mut r = [[0.0; 3]; 3];
        for i in 0..d {
            for j in 0..d {
                let mut ff = 0.0;
                for k in 0..d {
                    ff += fm[i][k] * fm[j][k];
                }
                let id = if i == j { 1.0 } else { 0.0 };
                r[i][j] = ff - id + gm[i][j] + gm[j][i];
            }
        }
        out.set_at(p, &r);
    }
    Ok(out)
}
