//! Snapshot files: one JSON header line, then raw little-endian `f64` arrays
//! in header order.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{StateA, StateB};
use crate::spectral::{MatrixField, ScalarField, TorusGrid, VectorField};

use super::config::Formulation;
use super::SimState;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldHeader {
    pub name: String,
    pub components: usize,
    pub dtype: String,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotHeader {
    pub format_version: u32,
    pub dim: usize,
    pub n: usize,
    pub t: f64,
    pub formulation: Formulation,
    pub fields: Vec<FieldHeader>,
}

fn layout(formulation: Formulation, d: usize) -> [(&'static str, usize); 3] {
    match formulation {
        Formulation::A => [("v", d), ("F", d * d), ("M", 3)],
        Formulation::B => [("v", d), ("psi", d), ("M", 3)],
    }
}

fn components(state: &SimState) -> Vec<&ScalarField> {
    match state {
        SimState::A(s) => s.v.comps.iter().chain(&s.f.entries).chain(&s.m.comps).collect(),
        SimState::B(s) => s.v.comps.iter().chain(&s.psi.comps).chain(&s.m.comps).collect(),
    }
}

pub fn header_for(grid: &TorusGrid, state: &SimState) -> SnapshotHeader {
    let formulation = state.formulation();
    SnapshotHeader {
        format_version: FORMAT_VERSION,
        dim: grid.dim(),
        n: grid.n(),
        t: state.time(),
        formulation,
        fields: layout(formulation, grid.dim())
            .iter()
            .map(|&(name, c)| FieldHeader { name: name.into(), components: c, dtype: "f64-le".into(), count: c * grid.len() })
            .collect(),
    }
}

/// Serializes to bytes.
pub fn encode_snapshot(grid: &TorusGrid, state: &SimState) -> Result<Vec<u8>> {
    state.check(grid)?;
    if !state.time().is_finite() {
        return Err(Error::Snapshot("time is not finite".into()));
    }
    // the reader rejects NaN, so never write one
    if components(state).iter().any(|c| c.values.iter().any(|v| v.is_nan())) {
        return Err(Error::Snapshot("state contains NaN".into()));
    }
    let header = header_for(grid, state);
    let mut out = serde_json::to_vec(&header)?;
    out.push(b'\n');
    for c in components(state) {
        for v in &c.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn write_snapshot(path: &Path, grid: &TorusGrid, state: &SimState) -> Result<()> {
    let bytes = encode_snapshot(grid, state)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

/// Parses bytes produced by [`encode_snapshot`].
pub fn decode_snapshot(bytes: &[u8]) -> Result<(TorusGrid, SimState)> {
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| Error::Snapshot("missing header line".into()))?;
    let header: SnapshotHeader =
        serde_json::from_slice(&bytes[..nl]).map_err(|e| Error::Snapshot(format!("bad header: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::Snapshot(format!(
            "format_version {} is not supported (expected {FORMAT_VERSION})",
            header.format_version
        )));
    }
    if !(header.dim == 2 || header.dim == 3) {
        return Err(Error::Snapshot(format!("dim must be 2 or 3, got {}", header.dim)));
    }
    let grid = TorusGrid::new(header.dim, header.n).map_err(|e| Error::Snapshot(e.to_string()))?;
    if !header.t.is_finite() {
        return Err(Error::Snapshot("time is not finite".into()));
    }
    let expected = layout(header.formulation, header.dim);
    if header.fields.len() != expected.len() {
        return Err(Error::Snapshot(format!("expected {} fields, found {}", expected.len(), header.fields.len())));
    }
    let len = grid.len();
    let mut payload = &bytes[nl + 1..];
    let mut groups: Vec<Vec<ScalarField>> = Vec::new();
    for (fh, &(name, comps)) in header.fields.iter().zip(&expected) {
        if fh.name != name || fh.components != comps || fh.dtype != "f64-le" || fh.count != comps * len {
            return Err(Error::Snapshot(format!(
                "field {:?} does not match the expected layout ({name}, {comps} components, f64-le, count {})",
                fh.name,
                comps * len
            )));
        }
        let nbytes = fh.count * 8;
        if payload.len() < nbytes {
            return Err(Error::Snapshot(format!(
                "truncated payload: field {name} needs {nbytes} bytes, {} remain",
                payload.len()
            )));
        }
        let (chunk, rest) = payload.split_at(nbytes);
        payload = rest;
        let values: Vec<f64> = chunk.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Snapshot(format!("field {name} contains NaN")));
        }
        groups.push(values.chunks(len).map(|c| ScalarField { values: c.to_vec() }).collect());
    }
    if !payload.is_empty() {
        return Err(Error::Snapshot(format!("{} trailing bytes after the last field", payload.len())));
    }
    let mut it = groups.into_iter();
    let (g0, g1, g2) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
    let t = header.t;
    let state = match header.formulation {
        Formulation::A => SimState::A(StateA {
            t,
            v: VectorField { comps: g0 },
            f: MatrixField { dim: header.dim, entries: g1 },
            m: VectorField { comps: g2 },
        }),
        Formulation::B => SimState::B(StateB { t, v: VectorField { comps: g0 }, psi: VectorField { comps: g1 }, m: VectorField { comps: g2 } }),
    };
    Ok((grid, state))
}

pub fn load_snapshot(path: &Path) -> Result<(TorusGrid, SimState)> {
    let bytes = std::fs::read(path)?;
    decode_snapshot(&bytes)
}
