use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::certificate::{derive_linear_certificate, example2_certificate, KrasovskiiCertificate, LinearCertificate};
use crate::error::{Error, Result};
use crate::system::{DelaySystem, Example2Params, LinearDelaySystem};
use crate::trigger::TriggerParams;
use crate::tuner::{linear_feasibility_sides, linear_lipschitz_constants, LipschitzConstants};
use crate::window::HistoryWindow;

/// Experiment description, read from TOML:
///
/// ```toml
/// initial = [[1.0, 1.0], [-2.0, 3.0]]
/// horizons = [10000]
///
/// [system]
/// kind = "linear"            # or "example2" with scalar entries
/// A1 = [[0.95, 0.0], [0.01, 1.05]]
/// A2 = [[0.0, -0.01], [-0.01, 0.0]]
/// B = [[3.0, 0.2], [0.5, 1.0]]
/// K = [[-0.1621, 0.0324], [0.0810, -0.4862]]
/// tau = 1
///
/// [trigger]
/// sigma = 0.1
/// a = 16.0
/// b = 0.01
/// mode = "full"              # "state_only" | "time_only"
///
/// [certificate]              # optional override
/// eps = 0.1
/// mu = 0.5                   # optional
///
/// [outputs]                  # optional
/// trace_csv = "traces/run.csv"
/// summary_json = "summary.json"
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateOverride>,
    pub trigger: TriggerParams,
    /// Constant initial functions, one run per entry.
    pub initial: Vec<Vec<f64>>,
    pub horizons: Vec<usize>,
    #[serde(default)]
    pub outputs: OutputConfig,
    /// Run linear plants even when the feasibility inequality fails.
    #[serde(default)]
    pub allow_infeasible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    Linear {
        #[serde(rename = "A1")]
        a1: Vec<Vec<f64>>,
        #[serde(rename = "A2")]
        a2: Vec<Vec<f64>>,
        #[serde(rename = "B")]
        b: Vec<Vec<f64>>,
        #[serde(rename = "K")]
        k: Vec<Vec<f64>>,
        #[serde(default = "unit_delay")]
        tau: usize,
    },
    Example2 {
        #[serde(rename = "A1")]
        a1: f64,
        #[serde(rename = "A2")]
        a2: f64,
        #[serde(rename = "B")]
        b: f64,
        #[serde(rename = "K")]
        k: f64,
        #[serde(default = "unit_delay")]
        tau: usize,
    },
}

fn unit_delay() -> usize {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateOverride {
    pub eps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Per-run traces are written next to this path with `_phi{i}_h{horizon}` appended.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary_json: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    pub fn validate(&self) -> Result<()> {
        if self.initial.is_empty() {
            return Err(Error::config("initial", "at least one initial function is required"));
        }
        if self.horizons.is_empty() {
            return Err(Error::config("horizons", "at least one horizon is required"));
        }
        if let Some(i) = self.horizons.iter().position(|&h| h == 0) {
            return Err(Error::config(format!("horizons[{i}]"), "horizon must be at least 1"));
        }
        self.trigger
            .validate()
            .map_err(|e| Error::config("trigger", e.to_string()))?;
        let plant = self.plant()?;
        for (i, phi) in self.initial.iter().enumerate() {
            if phi.len() != plant.state_dim() {
                return Err(Error::config(
                    format!("initial[{i}]"),
                    format!("expected {} entries, found {}", plant.state_dim(), phi.len()),
                ));
            }
            if phi.iter().any(|v| !v.is_finite()) {
                return Err(Error::config(format!("initial[{i}]"), "entries must be finite"));
            }
        }
        if let Some(o) = &self.certificate {
            if !(o.eps.is_finite() && o.eps >= 0.0) {
                return Err(Error::config("certificate.eps", "must be finite and nonnegative"));
            }
            if let Some(mu) = o.mu {
                if !(0.0..1.0).contains(&mu) {
                    return Err(Error::config("certificate.mu", "must lie in [0, 1)"));
                }
            }
        }
        Ok(())
    }

    pub fn plant(&self) -> Result<Plant> {
        match &self.system {
            SystemConfig::Linear { a1, a2, b, k, tau } => LinearDelaySystem::from_rows(a1, a2, b, k, *tau)
                .map(Plant::Linear)
                .map_err(|e| match e {
                    Error::Config { .. } => e,
                    other => Error::config("system", other.to_string()),
                }),
            SystemConfig::Example2 { a1, a2, b, k, tau } => {
                if *tau != 1 {
                    return Err(Error::config("system.tau", "the scalar benchmark has a unit delay"));
                }
                let p = Example2Params { a1: *a1, a2: *a2, b: *b, k: *k };
                if [p.a1, p.a2, p.b, p.k].iter().any(|v| !v.is_finite()) {
                    return Err(Error::config("system", "coefficients must be finite"));
                }
                Ok(Plant::Example2(p))
            }
        }
    }

    /// Constant initial function for entry `i`.
    pub fn initial_window(&self, i: usize, tau: usize) -> Result<HistoryWindow> {
        let phi = self
            .initial
            .get(i)
            .ok_or_else(|| Error::config(format!("initial[{i}]"), "missing"))?;
        HistoryWindow::constant(tau, DVector::from_row_slice(phi))
    }
}

/// A configured plant.
#[derive(Clone, Debug, PartialEq)]
pub enum Plant {
    Linear(LinearDelaySystem),
    Example2(Example2Params),
}

/// `eps` of the scalar benchmark's certificate when none is given.
pub const EXAMPLE2_DEFAULT_EPS: f64 = 0.1;

impl Plant {
    pub fn as_system(&self) -> &dyn DelaySystem {
        match self {
            Plant::Linear(s) => s,
            Plant::Example2(p) => p,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.as_system().state_dim()
    }

    pub fn tau(&self) -> usize {
        self.as_system().tau()
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Plant::Linear(_) => "linear",
            Plant::Example2(_) => "example2",
        }
    }

    pub fn certificate(&self, overrides: Option<&CertificateOverride>) -> Result<KrasovskiiCertificate> {
        match (self, overrides) {
            (Plant::Linear(sys), None) => Ok(derive_linear_certificate(sys)?.cert),
            (Plant::Linear(sys), Some(o)) => {
                let mu = match o.mu {
                    Some(mu) => mu,
                    None => derive_linear_certificate(sys)?.cert.mu,
                };
                Ok(LinearCertificate::with_override(sys, o.eps, mu)?.cert)
            }
            (Plant::Example2(p), o) => {
                let eps = o.map_or(EXAMPLE2_DEFAULT_EPS, |o| o.eps);
                let cert = example2_certificate(p, eps)?;
                Ok(match o.and_then(|o| o.mu) {
                    Some(mu) => KrasovskiiCertificate::linear_form(mu, eps, cert.chi_lipschitz)?,
                    None => cert,
                })
            }
        }
    }

    pub fn lipschitz(&self) -> LipschitzConstants {
        match self {
            Plant::Linear(sys) => linear_lipschitz_constants(sys),
            Plant::Example2(p) => {
                let (l11, l12, l2) = p.residual_lipschitz();
                LipschitzConstants { l11, l12, l2, chi: l2, alpha1_inv: 1.0 }
            }
        }
    }

    /// Both sides of the linear feasibility inequality; `None` for the scalar benchmark.
    pub fn linear_feasibility(&self) -> Option<(f64, f64)> {
        match self {
            Plant::Linear(sys) => Some(linear_feasibility_sides(sys)),
            Plant::Example2(_) => None,
        }
    }
}
