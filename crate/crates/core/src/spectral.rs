//! Periodic grid on the torus `[0, 2π)^d` with Fourier-multiplier calculus.
//!
//! Samples are stored row-major with the last axis varying fastest, so the
//! value at grid point `(i_0, .., i_{d-1})` lives at `((i_0 * n) + i_1) * n ..`
//! and sits at coordinates `x_a = 2π i_a / n`.
//!
//! Transform normalization: `forward` is the unnormalized DFT and `backward`
//! divides by `n^d`, so `backward(forward(f)) == f` up to rounding. With that
//! convention Parseval reads
//!
//! ```text
//! h^d Σ_x f(x)^2  =  (2π)^d / n^(2d) · Σ_ξ |f̂(ξ)|^2 ,   h = 2π / n.
//! ```
//!
//! First-order symbols use wavenumbers with the Nyquist entry zeroed (odd
//! derivatives of the `−n/2` mode are not representable as real fields);
//! even-order symbols use the full wavenumber. All reductions run in index
//! order, so results are bit-reproducible for a fixed configuration.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Sub, SubAssign};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub type Complex = Complex64;

/// Real samples of a scalar field, one per grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

/// `d` (or 3, for the magnetization) scalar components on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub comps: Vec<ScalarField>,
}

/// A `d × d` field, entries stored row-major: entry `(i, j)` is row `i`,
/// column `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixField {
    pub dim: usize,
    pub entries: Vec<ScalarField>,
}

/// Unnormalized Fourier coefficients of a [`ScalarField`].
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub coeffs: Vec<Complex>,
}

impl ScalarField {
    pub fn zeros(len: usize) -> Self {
        Self { values: vec![0.0; len] }
    }

    pub fn constant(len: usize, c: f64) -> Self {
        Self { values: vec![c; len] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn scale(&mut self, a: f64) {
        self.values.iter_mut().for_each(|v| *v *= a);
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { values: self.values.iter().map(|v| a * v).collect() }
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &ScalarField) {
        debug_assert_eq!(self.len(), other.len());
        for (s, o) in self.values.iter_mut().zip(&other.values) {
            *s += a * o;
        }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &ScalarField) -> ScalarField {
        Self {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        }
    }

    /// `self += a * b * c` pointwise.
    pub fn add_product(&mut self, a: f64, b: &ScalarField, c: &ScalarField) {
        for ((s, x), y) in self.values.iter_mut().zip(&b.values).zip(&c.values) {
            *s += a * x * y;
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        Self { values: self.values.iter().map(|&v| f(v)).collect() }
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        ScalarField {
            values: self.values.iter().zip(&rhs.values).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        ScalarField {
            values: self.values.iter().zip(&rhs.values).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: f64) -> ScalarField {
        self.scaled(rhs)
    }
}

impl AddAssign<&ScalarField> for ScalarField {
    fn add_assign(&mut self, rhs: &ScalarField) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&ScalarField> for ScalarField {
    fn sub_assign(&mut self, rhs: &ScalarField) {
        self.axpy(-1.0, rhs);
    }
}

impl VectorField {
    pub fn zeros(ncomp: usize, len: usize) -> Self {
        Self { comps: (0..ncomp).map(|_| ScalarField::zeros(len)).collect() }
    }

    /// Every point carries the same vector `c`.
    pub fn constant(c: &[f64], len: usize) -> Self {
        Self { comps: c.iter().map(|&v| ScalarField::constant(len, v)).collect() }
    }

    pub fn ncomp(&self) -> usize {
        self.comps.len()
    }

    pub fn npoints(&self) -> usize {
        self.comps.first().map_or(0, |c| c.len())
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0_f64, |m, c| m.max(c.max_abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.is_finite())
    }

    pub fn axpy(&mut self, a: f64, other: &VectorField) {
        for (s, o) in self.comps.iter_mut().zip(&other.comps) {
            s.axpy(a, o);
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { comps: self.comps.iter().map(|c| c.scaled(a)).collect() }
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        Self { comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a - b).collect() }
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        Self { comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a + b).collect() }
    }

    /// Pointwise Euclidean length.
    pub fn pointwise_norm(&self) -> ScalarField {
        let len = self.npoints();
        let mut out = ScalarField::zeros(len);
        for c in &self.comps {
            for (o, v) in out.values.iter_mut().zip(&c.values) {
                *o += v * v;
            }
        }
        out.values.iter_mut().for_each(|v| *v = v.sqrt());
        out
    }

    /// Pointwise dot product.
    pub fn dot(&self, other: &VectorField) -> ScalarField {
        let mut out = ScalarField::zeros(self.npoints());
        for (a, b) in self.comps.iter().zip(&other.comps) {
            out.add_product(1.0, a, b);
        }
        out
    }

    /// Pointwise cross product of two 3-component fields.
    pub fn cross(&self, other: &VectorField) -> VectorField {
        assert!(self.ncomp() == 3 && other.ncomp() == 3, "cross product needs 3 components");
        let (a, b) = (&self.comps, &other.comps);
        let len = self.npoints();
        let mut out = VectorField::zeros(3, len);
        for p in 0..len {
            let (a0, a1, a2) = (a[0].values[p], a[1].values[p], a[2].values[p]);
            let (b0, b1, b2) = (b[0].values[p], b[1].values[p], b[2].values[p]);
            out.comps[0].values[p] = a1 * b2 - a2 * b1;
            out.comps[1].values[p] = a2 * b0 - a0 * b2;
            out.comps[2].values[p] = a0 * b1 - a1 * b0;
        }
        out
    }
}

impl MatrixField {
    pub fn zeros(dim: usize, len: usize) -> Self {
        Self { dim, entries: (0..dim * dim).map(|_| ScalarField::zeros(len)).collect() }
    }

    pub fn identity(dim: usize, len: usize) -> Self {
        let mut m = Self::zeros(dim, len);
        for i in 0..dim {
            m.entries[i * dim + i] = ScalarField::constant(len, 1.0);
        }
        m
    }

    /// Every point carries the same matrix, given row-major.
    pub fn constant(dim: usize, rows: &[f64], len: usize) -> Self {
        assert_eq!(rows.len(), dim * dim);
        Self { dim, entries: rows.iter().map(|&v| ScalarField::constant(len, v)).collect() }
    }

    pub fn get(&self, i: usize, j: usize) -> &ScalarField {
        &self.entries[i * self.dim + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut ScalarField {
        &mut self.entries[i * self.dim + j]
    }

    pub fn npoints(&self) -> usize {
        self.entries.first().map_or(0, |c| c.len())
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0_f64, |m, c| m.max(c.max_abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|c| c.is_finite())
    }

    pub fn axpy(&mut self, a: f64, other: &MatrixField) {
        for (s, o) in self.entries.iter_mut().zip(&other.entries) {
            s.axpy(a, o);
        }
    }

    pub fn sub(&self, other: &MatrixField) -> MatrixField {
        Self {
            dim: self.dim,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn transpose(&self) -> MatrixField {
        let d = self.dim;
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                entries.push(self.get(j, i).clone());
            }
        }
        Self { dim: d, entries }
    }

    /// The `d × d` matrix at grid point `p`, row-major, padded to 3×3.
    pub fn at(&self, p: usize) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate().take(self.dim) {
            for (j, e) in row.iter_mut().enumerate().take(self.dim) {
                *e = self.get(i, j).values[p];
            }
        }
        m
    }

    pub fn set_at(&mut self, p: usize, m: &[[f64; 3]; 3]) {
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                self.entries[i * d + j].values[p] = m[i][j];
            }
        }
    }
}

impl Spectrum {
    pub fn zeros(len: usize) -> Self {
        Self { coeffs: vec![Complex::new(0.0, 0.0); len] }
    }

    pub fn axpy(&mut self, a: Complex, other: &Spectrum) {
        for (s, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *s += a * o;
        }
    }
}

/// The periodic discretization: dimension, points per axis, FFT plans and
/// the per-mode wavenumber tables.
pub struct TorusGrid {
    dim: usize,
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    /// Full wavenumber vector per mode (unused axes are 0).
    k: Vec<[f64; 3]>,
    /// Wavenumbers for first-order symbols, Nyquist entries zeroed.
    kd: Vec<[f64; 3]>,
    ksq: Vec<f64>,
    kd_sq: Vec<f64>,
    dealias_keep: Vec<bool>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid").field("dim", &self.dim).field("n", &self.n).finish()
    }
}

impl Clone for TorusGrid {
    fn clone(&self) -> Self {
        Self {
            dim: self.dim,
            n: self.n,
            fft: Arc::clone(&self.fft),
            ifft: Arc::clone(&self.ifft),
            k: self.k.clone(),
            kd: self.kd.clone(),
            ksq: self.ksq.clone(),
            kd_sq: self.kd_sq.clone(),
            dealias_keep: self.dealias_keep.clone(),
        }
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n
    }
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::InvalidGrid(format!("dimension must be 2 or 3, got {dim}")));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("points per axis must be even and >= 8, got {n}")));
        }
        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);

        let axis_k: Vec<f64> = (0..n)
            .map(|i| if i < n / 2 { i as f64 } else { i as f64 - n as f64 })
            .collect();
        let len = n.pow(dim as u32);
        let mut k = Vec::with_capacity(len);
        let mut kd = Vec::with_capacity(len);
        let mut ksq = Vec::with_capacity(len);
        let mut kd_sq = Vec::with_capacity(len);
        let mut dealias_keep = Vec::with_capacity(len);
        let cutoff = n as f64 / 3.0;
        for idx in 0..len {
            let mut kv = [0.0; 3];
            let mut kdv = [0.0; 3];
            let mut rem = idx;
            for a in (0..dim).rev() {
                let i = rem % n;
                rem /= n;
                kv[a] = axis_k[i];
                kdv[a] = if i == n / 2 { 0.0 } else { axis_k[i] };
            }
            ksq.push(kv.iter().map(|x| x * x).sum());
            kd_sq.push(kdv.iter().map(|x| x * x).sum());
            dealias_keep.push(kv.iter().all(|x| x.abs() <= cutoff));
            k.push(kv);
            kd.push(kdv);
        }
        Ok(Self { dim, n, fft, ifft, k, kd, ksq, kd_sq, dealias_keep })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of grid points, `n^d`.
    pub fn len(&self) -> usize {
        self.ksq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ksq.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// `(2π)^d`
    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.dim as i32)
    }

    /// Coordinates of grid point `idx` (unused axes are 0).
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let mut x = [0.0; 3];
        let mut rem = idx;
        let h = self.spacing();
        for a in (0..self.dim).rev() {
            x[a] = (rem % self.n) as f64 * h;
            rem /= self.n;
        }
        x
    }

    /// Full wavenumber vector of mode `idx`.
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        self.k[idx]
    }

    /// First-order wavenumber vector of mode `idx` (Nyquist entries zeroed).
    pub fn wavevector_d(&self, idx: usize) -> [f64; 3] {
        self.kd[idx]
    }

    pub fn ksq(&self, idx: usize) -> f64 {
        self.ksq[idx]
    }

    /// Largest `|ξ|^2` kept by the 2/3 rule.
    pub fn max_dealiased_ksq(&self) -> f64 {
        let c = (self.n as f64 / 3.0).floor();
        self.dim as f64 * c * c
    }

    pub fn max_ksq(&self) -> f64 {
        let c = (self.n / 2) as f64;
        self.dim as f64 * c * c
    }

    pub fn sample(&self, f: impl Fn(&[f64; 3]) -> f64) -> ScalarField {
        ScalarField { values: (0..self.len()).map(|i| f(&self.point(i))).collect() }
    }

    pub fn zeros(&self) -> ScalarField {
        ScalarField::zeros(self.len())
    }

    pub fn check(&self, f: &ScalarField) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::ShapeMismatch(format!(
                "field has {} samples, grid has {}",
                f.len(),
                self.len()
            )));
        }
        Ok(())
    }

    fn transform(&self, data: &mut [Complex], inverse: bool) {
        let plan = if inverse { &self.ifft } else { &self.fft };
        let n = self.n;
        let len = data.len();
        let mut buf = vec![Complex::new(0.0, 0.0); len];
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            if stride == 1 {
                plan.process(data);
                continue;
            }
            let block = n * stride;
            let mut line = 0;
            for outer in (0..len).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    let dst = &mut buf[line * n..(line + 1) * n];
                    for (j, d) in dst.iter_mut().enumerate() {
                        *d = data[base + j * stride];
                    }
                    line += 1;
                }
            }
            plan.process(&mut buf);
            let mut line = 0;
            for outer in (0..len).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    let src = &buf[line * n..(line + 1) * n];
                    for (j, s) in src.iter().enumerate() {
                        data[base + j * stride] = *s;
                    }
                    line += 1;
                }
            }
        }
        if inverse {
            let scale = 1.0 / len as f64;
            data.iter_mut().for_each(|c| *c *= scale);
        }
    }

    pub fn forward(&self, f: &ScalarField) -> Spectrum {
        debug_assert_eq!(f.len(), self.len());
        let mut coeffs: Vec<Complex> = f.values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.transform(&mut coeffs, false);
        Spectrum { coeffs }
    }

    /// Inverse transform; the (rounding-level) imaginary part is dropped.
    pub fn backward(&self, s: &Spectrum) -> ScalarField {
        let mut data = s.coeffs.clone();
        self.transform(&mut data, true);
        ScalarField { values: data.into_iter().map(|c| c.re).collect() }
    }

    /// `∂^m f` via the multiplier `∏ (i ξ_a)^{m_a}`.
    pub fn derivative(&self, f: &ScalarField, m: &[usize]) -> Result<ScalarField> {
        if m.len() != self.dim {
            return Err(Error::MultiIndex { got: m.len(), dim: self.dim });
        }
        self.check(f)?;
        let mut s = self.forward(f);
        self.apply_multi_index(&mut s, m);
        Ok(self.backward(&s))
    }

    pub fn apply_multi_index(&self, s: &mut Spectrum, m: &[usize]) {
        for (idx, c) in s.coeffs.iter_mut().enumerate() {
            *c *= self.multi_index_symbol(idx, m);
        }
    }

    /// Symbol of `∂^m` at mode `idx`.
    pub fn multi_index_symbol(&self, idx: usize, m: &[usize]) -> Complex {
        let mut sym = Complex::new(1.0, 0.0);
        for (a, &ma) in m.iter().enumerate() {
            if ma == 0 {
                continue;
            }
            let xi = if ma % 2 == 1 { self.kd[idx][a] } else { self.k[idx][a] };
            sym *= Complex::new(0.0, xi).powu(ma as u32);
        }
        sym
    }

    /// Spectrum of `∂_a f` given the spectrum of `f`.
    pub fn d_spectrum(&self, s: &Spectrum, axis: usize) -> Spectrum {
        Spectrum {
            coeffs: s
                .coeffs
                .iter()
                .zip(&self.kd)
                .map(|(c, k)| c * Complex::new(0.0, k[axis]))
                .collect(),
        }
    }

    pub fn partial(&self, f: &ScalarField, axis: usize) -> ScalarField {
        self.backward(&self.d_spectrum(&self.forward(f), axis))
    }

    pub fn gradient(&self, f: &ScalarField) -> VectorField {
        let s = self.forward(f);
        VectorField { comps: (0..self.dim).map(|a| self.backward(&self.d_spectrum(&s, a))).collect() }
    }

    /// `∇·u = ∂_a u^a` for a `d`-component field.
    pub fn divergence(&self, u: &VectorField) -> ScalarField {
        let mut acc = Spectrum::zeros(self.len());
        for (a, c) in u.comps.iter().enumerate().take(self.dim) {
            let s = self.forward(c);
            for (idx, (o, v)) in acc.coeffs.iter_mut().zip(&s.coeffs).enumerate() {
                *o += v * Complex::new(0.0, self.kd[idx][a]);
            }
        }
        self.backward(&acc)
    }

    pub fn laplacian(&self, f: &ScalarField) -> ScalarField {
        let mut s = self.forward(f);
        for (c, k2) in s.coeffs.iter_mut().zip(&self.ksq) {
            *c *= -k2;
        }
        self.backward(&s)
    }

    pub fn laplacian_vec(&self, u: &VectorField) -> VectorField {
        VectorField { comps: u.comps.iter().map(|c| self.laplacian(c)).collect() }
    }

    /// Solves `Δu = f` for zero-mean `u`. Rejects `f` whose mean exceeds 1e-12.
    pub fn inverse_laplacian_zero_mean(&self, f: &ScalarField) -> Result<ScalarField> {
        self.check(f)?;
        let mean = f.mean();
        if mean.abs() > 1e-12 {
            return Err(Error::NonzeroMean { mean });
        }
        let mut s = self.forward(f);
        for (c, k2) in s.coeffs.iter_mut().zip(&self.ksq) {
            if *k2 == 0.0 {
                *c = Complex::new(0.0, 0.0);
            } else {
                *c /= -k2;
            }
        }
        Ok(self.backward(&s))
    }

    /// Removes the gradient part of `d` spectra in place:
    /// `û ↦ û − ξ (ξ·û) / |ξ|²` for `ξ ≠ 0`.
    pub fn leray_spectra(&self, comps: &mut [Spectrum]) {
        let d = self.dim;
        for idx in 0..self.len() {
            let k2 = self.kd_sq[idx];
            if k2 == 0.0 {
                continue;
            }
            let kv = &self.kd[idx];
            let mut dot = Complex::new(0.0, 0.0);
            for a in 0..d {
                dot += comps[a].coeffs[idx] * kv[a];
            }
            let dot = dot / k2;
            for a in 0..d {
                comps[a].coeffs[idx] -= dot * kv[a];
            }
        }
    }

    pub fn leray_project(&self, u: &VectorField) -> VectorField {
        let mut specs: Vec<Spectrum> = u.comps.iter().map(|c| self.forward(c)).collect();
        self.leray_spectra(&mut specs);
        VectorField { comps: specs.iter().map(|s| self.backward(s)).collect() }
    }

    /// Zeroes every mode with `|ξ| > cutoff`. Exactly idempotent on spectra.
    pub fn truncate_spectrum(&self, s: &mut Spectrum, cutoff: f64) {
        let c2 = cutoff * cutoff;
        for (c, k2) in s.coeffs.iter_mut().zip(&self.ksq) {
            if *k2 > c2 {
                *c = Complex::new(0.0, 0.0);
            }
        }
    }

    pub fn truncate(&self, f: &ScalarField, cutoff: f64) -> ScalarField {
        let mut s = self.forward(f);
        self.truncate_spectrum(&mut s, cutoff);
        self.backward(&s)
    }

    pub fn truncate_vec(&self, u: &VectorField, cutoff: f64) -> VectorField {
        VectorField { comps: u.comps.iter().map(|c| self.truncate(c, cutoff)).collect() }
    }

    /// 2/3 rule: zeroes modes with any `|ξ_a| > n/3`.
    pub fn dealias_spectrum(&self, s: &mut Spectrum) {
        for (c, keep) in s.coeffs.iter_mut().zip(&self.dealias_keep) {
            if !keep {
                *c = Complex::new(0.0, 0.0);
            }
        }
    }

    pub fn dealias(&self, f: &ScalarField) -> ScalarField {
        let mut s = self.forward(f);
        self.dealias_spectrum(&mut s);
        self.backward(&s)
    }

    pub fn is_dealias_kept(&self, idx: usize) -> bool {
        self.dealias_keep[idx]
    }

    /// Grid `L²` inner product `h^d Σ f g`.
    pub fn inner(&self, f: &ScalarField, g: &ScalarField) -> f64 {
        let s: f64 = f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum();
        s * self.cell_volume()
    }

    pub fn inner_vec(&self, u: &VectorField, w: &VectorField) -> f64 {
        u.comps.iter().zip(&w.comps).map(|(a, b)| self.inner(a, b)).sum()
    }

    pub fn inner_mat(&self, a: &MatrixField, b: &MatrixField) -> f64 {
        a.entries.iter().zip(&b.entries).map(|(x, y)| self.inner(x, y)).sum()
    }

    /// `‖f‖²_{L²}` from the spectrum (Parseval).
    pub fn spectral_l2_sq(&self, s: &Spectrum) -> f64 {
        let sum: f64 = s.coeffs.iter().map(|c| c.norm_sqr()).sum();
        self.volume() * sum / (self.len() as f64).powi(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2(n: usize) -> TorusGrid {
        TorusGrid::new(2, n).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TorusGrid::new(4, 16).is_err());
        assert!(TorusGrid::new(2, 6).is_err());
        assert!(TorusGrid::new(2, 15).is_err());
        assert!(TorusGrid::new(3, 8).is_ok());
    }

    #[test]
    fn spacing_is_exact() {
        let g = grid2(64);
        assert_eq!(g.spacing(), 2.0 * PI / 64.0);
        assert_eq!(g.point(65), [g.spacing(), g.spacing(), 0.0]);
    }

    #[test]
    fn derivative_of_sine() {
        let g = grid2(64);
        let f = g.sample(|x| x[0].sin());
        let d = g.derivative(&f, &[1, 0]).unwrap();
        let exact = g.sample(|x| x[0].cos());
        assert!((&d - &exact).max_abs() <= 1e-12);
    }

    #[test]
    fn mixed_derivative() {
        let g = grid2(64);
        let f = g.sample(|x| x[0].sin() * x[1].sin());
        let d = g.derivative(&f, &[1, 1]).unwrap();
        let exact = g.sample(|x| x[0].cos() * x[1].cos());
        assert!((&d - &exact).max_abs() <= 1e-12);
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let g = grid2(32);
        let f = ScalarField::constant(g.len(), 3.0);
        for m in [[1, 0], [0, 2], [3, 1]] {
            assert!(g.derivative(&f, &m).unwrap().max_abs() <= 1e-13);
        }
        assert!(matches!(g.derivative(&f, &[1]), Err(Error::MultiIndex { .. })));
    }

    #[test]
    fn laplacian_pair() {
        let g = grid2(32);
        let s = g.sample(|x| x[0].sin());
        let lap = g.laplacian(&s);
        assert!((&lap + &s).max_abs() <= 1e-12);
        let inv = g.inverse_laplacian_zero_mean(&s.scaled(-1.0)).unwrap();
        assert!((&inv - &s).max_abs() <= 1e-12);
        let shifted = g.sample(|x| 1.0 + x[0].sin());
        assert!(matches!(g.inverse_laplacian_zero_mean(&shifted), Err(Error::NonzeroMean { .. })));
    }

    #[test]
    fn leray_examples() {
        let g = grid2(32);
        let grad = VectorField { comps: vec![g.sample(|x| -x[0].sin()), g.zeros()] };
        assert!(g.leray_project(&grad).max_abs() <= 1e-12);
        let shear = VectorField { comps: vec![g.sample(|x| x[1].sin()), g.zeros()] };
        assert!(g.leray_project(&shear).sub(&shear).max_abs() <= 1e-12);
        let sx = VectorField { comps: vec![g.sample(|x| x[0].sin()), g.zeros()] };
        assert!(g.leray_project(&sx).max_abs() <= 1e-12);
    }

    #[test]
    fn truncation_examples() {
        let g = grid2(32);
        let f = g.sample(|x| (3.0 * x[0]).sin());
        assert!(g.truncate(&f, 2.0).max_abs() <= 1e-13);
        let f = g.sample(|x| x[0].sin() + (3.0 * x[0]).sin());
        let t = g.truncate(&f, 2.0);
        assert!((&t - &g.sample(|x| x[0].sin())).max_abs() <= 1e-13);
        let mut s = g.forward(&f);
        g.truncate_spectrum(&mut s, 2.0);
        let once = s.clone();
        g.truncate_spectrum(&mut s, 2.0);
        assert_eq!(once, s);
    }

    #[test]
    fn dealias_examples() {
        let n = 32;
        let g = grid2(n);
        let f = g.sample(|x| (10.0 * x[0]).cos() + (3.0 * x[1]).sin());
        assert!((&g.dealias(&f) - &f).max_abs() <= 1e-13);
        let hi = g.sample(|x| ((n / 2 - 1) as f64 * x[0]).sin());
        assert!(g.dealias(&hi).max_abs() <= 1e-13);
        let k = 5.0;
        let s = g.sample(|x| (k * x[0]).sin());
        let prod = g.dealias(&s.mul(&s));
        let exact = g.sample(|x| 0.5 * (1.0 - (2.0 * k * x[0]).cos()));
        assert!((&prod - &exact).max_abs() <= 1e-13);
    }

    #[test]
    fn three_dimensional_round_trip() {
        let g = TorusGrid::new(3, 8).unwrap();
        let f = g.sample(|x| (x[0] + 2.0 * x[1]).sin() * x[2].cos() + 0.25);
        let back = g.backward(&g.forward(&f));
        assert!((&back - &f).max_abs() <= 1e-14);
        let d = g.derivative(&f, &[0, 0, 1]).unwrap();
        let exact = g.sample(|x| -(x[0] + 2.0 * x[1]).sin() * x[2].sin());
        assert!((&d - &exact).max_abs() <= 1e-12);
    }
}
