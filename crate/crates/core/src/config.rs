//! Run configuration.
//!
//! A config is one TOML file with a top-level `seed` and one section per
//! subcommand. Every field has a default, unknown keys are rejected, and the
//! effective config (after command-line overrides) is echoed into outputs
//! together with its SHA-256 digest.
//!
//! ```toml
//! seed = 7
//!
//! [process]
//! p = 1
//! m = 0
//! coeffs = [[[1.0]]]
//! innovation = { law = "rademacher" }
//!
//! [rate]
//! ns = [64, 128, 256]
//! replicates_x = 10000
//! replicates_y = 10000
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::batch::RemainderPolicy;
use crate::distance::FamilyConfig;
use crate::error::{Error, Result};
use crate::params::MomentParams;
use crate::procgen::{ProcessSpec, ProcessSpecRepr};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    /// Worker threads. Never echoed: outputs must not depend on it.
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub process: Option<ProcessSpecRepr>,
    /// Rectangle family; dimension-dependent defaults when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyConfig>,
    pub simulate: SimulateConfig,
    pub params: ParamsConfig,
    pub bound: BoundConfig,
    pub block: BlockConfig,
    pub estimate: EstimateConfig,
    pub audit: AuditConfig,
    pub rate: RateConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub n: usize,
    pub replicates: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { n: 64, replicates: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsConfig {
    pub n: usize,
    /// Declared dependence order; `max(process.m, 1)` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub n_mc: usize,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self { n: 64, m: None, n_mc: 100_000 }
    }
}

/// Assumption constants given by hand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitParams {
    pub sigma_min: f64,
    pub sigma_lower: f64,
    pub sigma_upper: f64,
    pub nu1: f64,
    pub nu3: f64,
}

impl ExplicitParams {
    pub fn to_moment_params(&self, n: usize, m: usize) -> MomentParams {
        MomentParams {
            sigma_min: self.sigma_min,
            sigma_lower: self.sigma_lower,
            sigma_upper: self.sigma_upper,
            nu1: self.nu1,
            nu3: self.nu3,
            ..MomentParams::unit(n, m)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundConfig {
    pub n: usize,
    pub m: usize,
    /// Dimension; taken from the process when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    pub c: f64,
    pub n_mc: usize,
    /// Use these constants instead of extracting them from the process.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<ExplicitParams>,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self { n: 64, m: 1, p: None, c: 1.0, n_mc: 100_000, params: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlockConfig {
    /// Batch container to block; a fresh `simulate` batch when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    pub m: usize,
    pub policy: RemainderPolicy,
    /// Lag used by the post-blocking dependence check.
    pub check_lag: usize,
}

impl Default for BlockConfig {
    fn default() -> Self {
        Self { input: None, m: 2, policy: RemainderPolicy::Absorb, check_lag: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateConfig {
    pub n: usize,
    pub replicates_x: usize,
    pub replicates_y: usize,
    /// Band half-widths for the anti-concentration estimates.
    pub deltas: Vec<f64>,
    /// Bootstrap resamples; 0 disables the bootstrap.
    pub bootstrap: usize,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self { n: 64, replicates_x: 10_000, replicates_y: 10_000, deltas: vec![0.05, 0.1, 0.3], bootstrap: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub n: usize,
    /// Indices to audit; every `i` in `1..=n` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<usize>>,
    pub replicates: usize,
    pub delta: f64,
    pub eps: f64,
    pub delta_const: f64,
    pub c: f64,
    pub n_mc: usize,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self { n: 64, grid: None, replicates: 10_000, delta: 0.5, eps: 1.0, delta_const: 1.0, c: 1.0, n_mc: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateConfig {
    pub ns: Vec<usize>,
    pub replicates_x: usize,
    pub replicates_y: usize,
    /// Constant for the reported bound column.
    pub c: f64,
    pub n_mc: usize,
    /// Also block the same data with this block length.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_m: Option<usize>,
    pub svg: bool,
}

impl Default for RateConfig {
    fn default() -> Self {
        Self {
            ns: vec![64, 128, 256, 512, 1024, 2048, 4096],
            replicates_x: 10_000,
            replicates_y: 10_000,
            c: 1.0,
            n_mc: 100_000,
            block_m: None,
            svg: false,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Canonical TOML of the effective config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of [`Config::to_toml`].
    pub fn digest(&self) -> String {
        let d: [u8; 32] = Sha256::digest(self.to_toml().as_bytes()).into();
        d.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn process_spec(&self) -> Result<ProcessSpec> {
        let repr = self.process.as_ref().ok_or_else(|| Error::Config("missing [process] section".into()))?;
        ProcessSpec::from_repr(repr)
    }

    pub fn family_for(&self, p: usize) -> FamilyConfig {
        self.family.clone().unwrap_or_else(|| FamilyConfig::for_dim(p))
    }
}
