//! TOML run configuration: sections [eos], [grid], [scaling], [run],
//! [output]. Every key has a default, so a partial file (or none at all)
//! gives a runnable setup; unknown keys are rejected rather than ignored.

use crate::equilibrium::ForcePotentials;
use crate::error::{Error, Result};
use crate::scaling::EpsilonScaling;
use crate::spectral::SpectralGrid;
use crate::thermo::{PKind, ThermoModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;
use std::sync::Arc;

use super::initdata::Amplitudes;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub eos: EosSection,
    pub grid: GridSection,
    pub scaling: ScalingSection,
    pub run: RunSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct EosSection {
    pub a: f64,
    pub theta_bar: f64,
    pub mu_bar: f64,
    pub eta_bar: f64,
    pub kappa_bar: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    /// Horizontal points per direction (the box is nx x nx x nz).
    pub nx: usize,
    pub nz: usize,
    /// Horizontal period is 2 pi ell; the vertical period is fixed at 2.
    pub ell: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingSection {
    pub m: f64,
    /// Sweep values, any order; runs are reported with eps decreasing.
    pub eps: Vec<f64>,
    pub centrifugal: bool,
    pub gravity: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub t_end: f64,
    pub seed: u64,
    /// Highest mode index of the generated data, per axis.
    pub band: usize,
    pub amp_density: f64,
    pub amp_temperature: f64,
    pub amp_velocity: f64,
    pub sample_every: f64,
    /// Time offset delta of the wave modulus-of-continuity study.
    pub gamma_delta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    pub svg: bool,
}

impl Default for EosSection {
    fn default() -> Self {
        let m = ThermoModel::default();
        Self {
            a: m.a,
            theta_bar: m.theta_bar,
            mu_bar: m.mu_bar,
            eta_bar: m.eta_bar,
            kappa_bar: m.kappa_bar,
        }
    }
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            nx: 32,
            nz: 8,
            ell: 1.0,
        }
    }
}

impl Default for ScalingSection {
    fn default() -> Self {
        Self {
            m: 1.0,
            eps: vec![0.4, 0.2, 0.1, 0.05],
            centrifugal: false,
            gravity: true,
        }
    }
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            t_end: 0.5,
            seed: 7,
            band: 2,
            amp_density: 0.1,
            amp_temperature: 0.1,
            amp_velocity: 0.3,
            sample_every: 0.05,
            gamma_delta: 5e-3,
        }
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            svg: true,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            eos: EosSection::default(),
            grid: GridSection::default(),
            scaling: ScalingSection::default(),
            run: RunSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("reading {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scaling.eps.is_empty() {
            return Err(Error::Config("scaling.eps must list at least one value".into()));
        }
        for &e in &self.scaling.eps {
            if !(e > 0.0 && e <= 1.0) {
                return Err(Error::Config(format!(
                    "eps values must lie in (0, 1], got {e}"
                )));
            }
        }
        if !(self.scaling.m >= 1.0) {
            return Err(Error::Config(format!(
                "scaling.m must be >= 1, got {}",
                self.scaling.m
            )));
        }
        if !(self.run.t_end > 0.0) || !(self.run.sample_every > 0.0) {
            return Err(Error::Config("run.t_end and run.sample_every must be positive".into()));
        }
        if self.run.sample_every > self.run.t_end + 1e-12 {
            return Err(Error::Config(
                "run.sample_every must not exceed run.t_end".into(),
            ));
        }
        if self.run.band == 0 {
            return Err(Error::Config("run.band must be at least 1".into()));
        }
        if !(self.run.gamma_delta > 0.0) {
            return Err(Error::Config("run.gamma_delta must be positive".into()));
        }
        self.model().validate()
    }

    pub fn model(&self) -> ThermoModel {
        ThermoModel {
            p_kind: PKind::Default,
            a: self.eos.a,
            theta_bar: self.eos.theta_bar,
            mu_bar: self.eos.mu_bar,
            eta_bar: self.eos.eta_bar,
            kappa_bar: self.eos.kappa_bar,
        }
    }

    pub fn make_grid(&self) -> Result<Arc<SpectralGrid>> {
        SpectralGrid::reflected_slab(self.grid.nx, self.grid.nz, self.grid.ell)
    }

    pub fn forces(&self, grid: &SpectralGrid) -> ForcePotentials {
        ForcePotentials {
            centrifugal_on: self.scaling.centrifugal,
            gravity_on: self.scaling.gravity,
            center: grid.horizontal_center(),
        }
    }

    pub fn amplitudes(&self) -> Amplitudes {
        Amplitudes {
            density: self.run.amp_density,
            temperature: self.run.amp_temperature,
            velocity: self.run.amp_velocity,
        }
    }

    pub fn scalings(&self) -> Result<Vec<EpsilonScaling>> {
        self.scaling
            .eps
            .iter()
            .map(|&e| EpsilonScaling::new(e, self.scaling.m))
            .collect()
    }

    /// Hex digest of the canonical TOML serialization; stamped onto every
    /// sweep record so rows can be traced back to their configuration.
    pub fn config_hash(&self) -> Result<String> {
        let text = toml::to_string(self)
            .map_err(|e| Error::Config(format!("config serialize: {e}")))?;
        let digest = Sha256::digest(text.as_bytes());
        let mut hex = String::with_capacity(16);
        for b in &digest[..8] {
            hex.push_str(&format!("{b:02x}"));
        }
        Ok(hex)
    }
}
