#![allow(dead_code)]

use magel::fields::renormalize_m;
use magel::harness::initial::band_limited_field;
use magel::spectral::{MatrixField, ScalarField, TorusGrid, VectorField};

pub fn grid2(n: usize) -> TorusGrid {
    TorusGrid::new(2, n).unwrap()
}

pub fn random_scalar(grid: &TorusGrid, band: usize, seed: u64, stream: u64) -> ScalarField {
    band_limited_field(grid, band, seed, stream)
}

pub fn random_vector(grid: &TorusGrid, ncomp: usize, band: usize, seed: u64) -> VectorField {
    VectorField { comps: (0..ncomp).map(|c| band_limited_field(grid, band, seed, 500 + c as u64)).collect() }
}

pub fn random_div_free(grid: &TorusGrid, band: usize, seed: u64) -> VectorField {
    grid.leray_project(&random_vector(grid, grid.dim(), band, seed))
}

pub fn random_matrix(grid: &TorusGrid, band: usize, seed: u64, scale: f64) -> MatrixField {
    let d = grid.dim();
    let mut f = MatrixField::identity(d, grid.len());
    for (e, entry) in f.entries.iter_mut().enumerate() {
        entry.axpy(scale, &band_limited_field(grid, band, seed, 700 + e as u64));
    }
    f
}

/// Unit field `normalize(e_z + a·m)` for a random smooth `m`.
pub fn random_unit_m(grid: &TorusGrid, band: usize, a: f64, seed: u64) -> VectorField {
    let mut m = random_vector(grid, 3, band, seed ^ 0x9e37);
    let scale = a / m.max_abs();
    for c in &mut m.comps {
        c.scale(scale);
    }
    m.comps[2].values.iter_mut().for_each(|x| *x += 1.0);
    renormalize_m(&m).unwrap()
}

pub fn max_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    (a - b).max_abs()
}
