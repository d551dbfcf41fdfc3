//! TOML configuration shared by the CLI subcommands.
//!
//! ```toml
//! dispersion = { kind = "sine" }
//! kernel = { kind = "uniform" }
//! gamma_therm = 1.0
//! temperature = 1.0
//! n_k = 64
//! delta_seq = [1e-2, 1e-3, 1e-4]
//! snapshot_times = [0.25, 0.5]
//!
//! [sim]
//! eps = 0.1
//! domain_half_width = 4.0
//! n_y = 400
//! n_k = 64
//! t_end = 0.5
//!
//! [initial]
//! background = 0.0
//! pieces = [{ lo = 1.0, hi = 2.0, value = 2.0 }]
//! ```
//!
//! `gamma_therm`, `temperature` and `n_k` may be given at the top level or
//! under `[sim]`; the top-level value wins.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dispersion::{DispersionModel, DispersionSpec, WavenumberGrid};
use crate::error::{Error, Result};
use crate::interface::{CoefficientPath, NuOptions};
use crate::kinetic::{PiecewiseProfile, SimConfig};
use crate::scattering::{KernelSpec, ScatteringKernel};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub dispersion: DispersionSpec,
    #[serde(default)]
    pub kernel: KernelSpec,
    #[serde(default)]
    pub coefficient_path: CoefficientPath,
    pub gamma_therm: Option<f64>,
    pub temperature: Option<f64>,
    pub n_k: Option<usize>,
    pub delta_seq: Option<Vec<f64>>,
    pub nu_tol: Option<f64>,
    pub snapshot_times: Option<Vec<f64>>,
    /// ε values for `converge`.
    pub eps: Option<Vec<f64>>,
    /// Also run the particle solver in `converge`.
    #[serde(default)]
    pub mc: bool,
    pub sim: Option<SimConfig>,
    pub initial: Option<PiecewiseProfile>,
}

impl Config {
    /// The headline experiment at the given ε.
    pub fn headline(eps: f64) -> Self {
        Self {
            sim: Some(SimConfig::headline(eps)),
            initial: Some(PiecewiseProfile::headline()),
            snapshot_times: Some(vec![0.25, 0.5]),
            eps: Some(vec![0.4, 0.2, 0.1]),
            ..Default::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn gamma_therm(&self) -> f64 {
        self.gamma_therm
            .or(self.sim.as_ref().map(|s| s.gamma_therm))
            .unwrap_or(1.0)
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
            .or(self.sim.as_ref().map(|s| s.temperature))
            .unwrap_or(0.0)
    }

    pub fn n_k(&self) -> usize {
        self.n_k.or(self.sim.as_ref().map(|s| s.n_k)).unwrap_or(64)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_therm() > 0.0 && self.gamma_therm().is_finite()) {
            return Err(Error::Config(format!(
                "gamma_therm must be positive, got {}",
                self.gamma_therm()
            )));
        }
        if !(self.temperature() >= 0.0 && self.temperature().is_finite()) {
            return Err(Error::Config(format!(
                "temperature must be >= 0, got {}",
                self.temperature()
            )));
        }
        if self.n_k() == 0 || self.n_k() % 2 != 0 {
            return Err(Error::Config(format!(
                "n_k must be even and positive, got {}",
                self.n_k()
            )));
        }
        if self.sim.is_some() {
            self.sim_config()?;
        }
        if let Some(init) = &self.initial {
            init.validate()?;
        }
        if let Some(eps) = &self.eps {
            if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
                return Err(Error::Config("eps values must lie in (0, 1]".into()));
            }
        }
        Ok(())
    }

    pub fn model(&self) -> Result<DispersionModel> {
        self.dispersion.build()
    }

    pub fn kernel(&self) -> Result<ScatteringKernel> {
        self.kernel.build()
    }

    pub fn grid(&self) -> Result<WavenumberGrid> {
        WavenumberGrid::new(self.n_k())
    }

    pub fn nu_options(&self) -> NuOptions {
        let mut o = NuOptions::default();
        if let Some(d) = &self.delta_seq {
            o.deltas = d.clone();
        }
        if let Some(t) = self.nu_tol {
            o.tol = t;
        }
        o
    }

    /// `[sim]` with the top-level overrides applied.
    pub fn sim_config(&self) -> Result<SimConfig> {
        let mut s = self
            .sim
            .clone()
            .ok_or_else(|| Error::Config("missing [sim] section".into()))?;
        s.gamma_therm = self.gamma_therm();
        s.temperature = self.temperature();
        s.n_k = self.n_k();
        s.validate()?;
        Ok(s)
    }

    /// `[initial]`, or W₀ ≡ T when absent.
    pub fn initial_profile(&self) -> Result<PiecewiseProfile> {
        match &self.initial {
            Some(p) => Ok(p.clone()),
            None => Ok(PiecewiseProfile::constant(self.temperature())),
        }
    }

    /// Snapshot times, defaulting to t_end.
    pub fn snapshot_times(&self) -> Result<Vec<f64>> {
        match &self.snapshot_times {
            Some(t) if !t.is_empty() => Ok(t.clone()),
            _ => Ok(vec![self.sim_config()?.t_end]),
        }
    }
}
