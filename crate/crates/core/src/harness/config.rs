use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::energetics::{delta_default, multiindex_count, DiagnosticSettings, MAX_SOBOLEV_ORDER};
use crate::error::{Error, Result};
use crate::fields::{ExternalField, PhysParams};
use crate::schemes::DeformationStage;
use crate::spectral::TorusGrid;
use crate::timestepper::{IntegratorConfig, Scheme};

use super::initial::{InitialDataSpec, InitialKind};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Formulation {
    /// `(v, F, M)`
    #[default]
    A,
    /// `(v, ψ, M)`
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

/// `"auto"` or a positive number.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaSpec {
    Auto(AutoTag),
    Value(f64),
}

/// Flat JSON run configuration. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub dim: usize,
    pub n: usize,
    pub nu: f64,
    pub kappa: f64,
    pub h_ext: ExternalField,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub renormalize_m: bool,
    pub cfl_guard: f64,
    pub snapshot_every: usize,
    pub diag_every: usize,
    pub dealias: bool,
    pub formulation: Formulation,
    pub initial_data: InitialKind,
    pub amplitude: f64,
    pub band: usize,
    pub snapshot_path: Option<PathBuf>,
    pub sobolev_s: usize,
    pub delta: DeltaSpec,
    pub c0_hat: f64,
    pub out_dir: PathBuf,
    pub csv_name: String,
    pub seed: u64,
    /// Mollifier study cutoffs.
    pub cutoffs: Vec<f64>,
    /// Picard study horizon and iterate count.
    pub picard_t: f64,
    pub picard_iterates: usize,
    pub picard_deformation: DeformationStage,
    pub stokes_trials: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            n: 64,
            nu: 1.0,
            kappa: 0.0,
            h_ext: ExternalField::Zero,
            dt: 1e-3,
            t_end: 1.0,
            scheme: Scheme::Imex2,
            renormalize_m: false,
            cfl_guard: 0.5,
            snapshot_every: 0,
            diag_every: 1,
            dealias: true,
            formulation: Formulation::A,
            initial_data: InitialKind::RandomSmall,
            amplitude: 1e-2,
            band: 2,
            snapshot_path: None,
            sobolev_s: 2,
            delta: DeltaSpec::Auto(AutoTag::Auto),
            c0_hat: 1.0,
            out_dir: PathBuf::from("out"),
            csv_name: "diagnostics.csv".into(),
            seed: 0,
            cutoffs: vec![4.0, 8.0, 16.0],
            picard_t: 0.1,
            picard_iterates: 8,
            picard_deformation: DeformationStage::Frozen,
            stokes_trials: 100,
        }
    }
}

impl SimulationConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        self.params().validate()?;
        self.integrator().validate()?;
        if self.sobolev_s > MAX_SOBOLEV_ORDER {
            return Err(Error::Config(format!("sobolev_s must be <= {MAX_SOBOLEV_ORDER}")));
        }
        if self.sobolev_s < 2 {
            return Err(Error::Config("sobolev_s must be >= 2".into()));
        }
        if !(self.c0_hat > 0.0 && self.c0_hat.is_finite()) {
            return Err(Error::Config("c0_hat must be > 0".into()));
        }
        if let DeltaSpec::Value(d) = self.delta {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Config(format!("delta must be > 0, got {d}")));
            }
        }
        if self.formulation == Formulation::B && !self.h_ext.is_zero() {
            return Err(Error::Config("formulation B requires h_ext = zero".into()));
        }
        if self.csv_name.is_empty() || self.csv_name.contains('/') {
            return Err(Error::Config("csv_name must be a plain file name".into()));
        }
        if self.cutoffs.iter().any(|&k| !(k > 0.0 && k.is_finite())) || self.cutoffs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("cutoffs must be positive and increasing".into()));
        }
        if !(self.picard_t > 0.0 && self.picard_t.is_finite()) {
            return Err(Error::Config("picard_t must be > 0".into()));
        }
        self.initial_spec().validate(&grid)
    }

    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.dim, self.n).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn params(&self) -> PhysParams {
        PhysParams { nu: self.nu, kappa: self.kappa, h_ext: self.h_ext.clone() }
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            dt: self.dt,
            t_end: self.t_end,
            scheme: self.scheme,
            renormalize_m: self.renormalize_m,
            cfl_guard: self.cfl_guard,
            snapshot_every: self.snapshot_every,
            diag_every: self.diag_every,
            dealias: self.dealias,
        }
    }

    /// Resolved `δ`.
    pub fn delta_value(&self) -> f64 {
        match self.delta {
            DeltaSpec::Value(d) => d,
            DeltaSpec::Auto(_) => delta_default(self.nu, self.c0_hat, multiindex_count(self.dim, self.sobolev_s)),
        }
    }

    pub fn diagnostics(&self) -> DiagnosticSettings {
        DiagnosticSettings { s: self.sobolev_s, delta: self.delta_value(), dealias: self.dealias }
    }

    pub fn initial_spec(&self) -> InitialDataSpec {
        InitialDataSpec {
            kind: self.initial_data,
            amplitude: self.amplitude,
            band: self.band,
            snapshot_path: self.snapshot_path.clone(),
        }
    }

    pub fn csv_path(&self) -> PathBuf {
        self.out_dir.join(&self.csv_name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        SimulationConfig::default().validate().unwrap();
    }

    #[test]
    fn unknown_key_rejected() {
        let e = SimulationConfig::from_json_str(r#"{"n": 32, "colour": 1}"#).unwrap_err();
        assert!(e.to_string().contains("colour"));
    }

    #[test]
    fn delta_forms() {
        let c = SimulationConfig::from_json_str(r#"{"delta": "auto", "sobolev_s": 3}"#).unwrap();
        assert!((c.delta_value() - 1.0 / 1600.0).abs() < 1e-18);
        let c = SimulationConfig::from_json_str(r#"{"delta": 0.01}"#).unwrap();
        assert_eq!(c.delta_value(), 0.01);
        assert!(SimulationConfig::from_json_str(r#"{"delta": "often"}"#).is_err());
        assert!(SimulationConfig::from_json_str(r#"{"delta": -1.0}"#).is_err());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(SimulationConfig::from_json_str(r#"{"n": 30}"#).is_ok());
        assert!(SimulationConfig::from_json_str(r#"{"n": 7}"#).is_err());
        assert!(SimulationConfig::from_json_str(r#"{"dim": 4}"#).is_err());
        assert!(SimulationConfig::from_json_str(r#"{"dt": 0}"#).is_err());
        assert!(SimulationConfig::from_json_str(r#"{"formulation": "B", "h_ext": {"uniform": [0, 0, 1]}}"#).is_err());
        assert!(SimulationConfig::from_json_str(r#"{"initial_data": "from_snapshot"}"#).is_err());
    }
}
