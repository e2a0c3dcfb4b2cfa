//! Run configuration: a single JSON document with strict keys, merged with
//! command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Deserialize;

use searchmkt::prior::Prior;
use searchmkt::profile::PayoffProfile;

use crate::CliError;

/// Output encoding of the main artifact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Quality distribution selector.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    /// One of `uniform01`, `beta`, `tabulated`.
    pub family: String,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    /// Sorted `(theta, F(theta))` pairs for `tabulated`.
    pub points: Option<Vec<(f64, f64)>>,
}

impl PriorSpec {
    pub fn build(&self) -> Result<Prior, CliError> {
        match self.family.as_str() {
            "uniform01" => Ok(Prior::uniform()),
            "beta" => {
                let (Some(a), Some(b)) = (self.alpha, self.beta) else {
                    return Err(CliError::usage("beta prior needs alpha and beta"));
                };
                Ok(Prior::beta(a, b)?)
            }
            "tabulated" => {
                let Some(points) = self.points.clone() else {
                    return Err(CliError::usage("tabulated prior needs points"));
                };
                Ok(Prior::tabulated(points)?)
            }
            other => Err(CliError::usage(format!(
                "unknown prior family {other:?}; expected uniform01, beta, or tabulated"
            ))),
        }
    }
}

/// A payoff split, brokers then agent.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub brokers: Vec<f64>,
    pub agent: f64,
}

impl ProfileSpec {
    pub fn build(&self) -> PayoffProfile {
        PayoffProfile::new(self.brokers.clone(), self.agent)
    }
}

/// Strategy automaton selector for `verify`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    /// `competitive` or `monopoly_triangle`.
    pub kind: String,
    /// Broker guarantee, `monopoly_triangle` only.
    pub nu: Option<f64>,
}

/// Inclusive cost grid for `sweep`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl KGrid {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        if self.points < 2 || !(self.start < self.stop) {
            return Err(CliError::usage("k_grid needs start < stop and at least two points"));
        }
        Ok((0..self.points)
            .map(|i| self.start + (self.stop - self.start) * i as f64 / (self.points - 1) as f64)
            .collect())
    }
}

/// Payoff grid resolution for `aps`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
}

/// The complete run configuration. Field applicability is per command;
/// unknown keys are rejected everywhere.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub prior: PriorSpec,
    pub k: Option<f64>,
    pub k_grid: Option<KGrid>,
    pub n: Option<usize>,
    pub y: Option<ProfileSpec>,
    pub mode: Option<ModeSpec>,
    /// Collar width override for `payoff-set`.
    pub eps: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    /// Acceptance tolerance for solver-backed commands; at most 1e-4.
    pub tolerance: Option<f64>,
    /// Guarantee grid resolution for `minimax`.
    pub scan_points: Option<usize>,
    pub grid: Option<GridSpec>,
    pub max_rounds: Option<usize>,
    /// Episodes recorded in the trace sidecar.
    pub trace_episodes: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub trace: Option<bool>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
    }

    pub fn require_k(&self) -> Result<f64, CliError> {
        self.k.ok_or_else(|| CliError::usage("this command needs \"k\" in the config"))
    }

    pub fn require_y(&self) -> Result<PayoffProfile, CliError> {
        self.y
            .as_ref()
            .map(ProfileSpec::build)
            .ok_or_else(|| CliError::usage("this command needs \"y\" in the config"))
    }

    pub fn require_n(&self) -> Result<usize, CliError> {
        self.n.ok_or_else(|| CliError::usage("this command needs \"n\" in the config"))
    }

    /// Tolerance with the documented floor: requests looser than 1e-4 are
    /// refused rather than silently tightened.
    pub fn tolerance_or(&self, default: f64) -> Result<f64, CliError> {
        let tol = self.tolerance.unwrap_or(default);
        if !(tol > 0.0) {
            return Err(CliError::usage(format!("tolerance must be positive, got {tol}")));
        }
        if tol > 1e-4 {
            return Err(CliError::usage(format!(
                "tolerance {tol} is looser than the supported floor 1e-4"
            )));
        }
        Ok(tol)
    }
}
