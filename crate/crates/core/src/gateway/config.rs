//! Gateway configuration file.
//!
//! ```json
//! {
//!   "bind": "127.0.0.1:8080",
//!   "default_backend": "cpu",
//!   "balancer": { "retry": true },
//!   "backends": [
//!     { "name": "cpu", "workers": 4, "profile": { "kind": "LocalCpu", "cold_factor": 1.26 } }
//!   ]
//! }
//! ```
//!
//! `MCAAS_BIND` overrides `bind`; `MCAAS_ACCEL_ENDPOINT` overrides the
//! endpoint of every `RemoteAccel` backend.

use std::net::SocketAddr;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::backend::{BackendKind, BackendProfile};

pub const ENV_BIND: &str = "MCAAS_BIND";
pub const ENV_ACCEL_ENDPOINT: &str = "MCAAS_ACCEL_ENDPOINT";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub name: String,
    #[serde(default = "default_workers")]
    pub workers: usize,
    pub profile: BackendProfile,
}

fn default_workers() -> usize {
    2
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalancerConfig {
    /// Retry a failed sub-batch once on the next worker.
    #[serde(default = "default_true")]
    pub retry: bool,
}

impl Default for BalancerConfig {
    fn default() -> Self {
        Self { retry: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatewayConfig {
    pub bind: SocketAddr,
    pub default_backend: String,
    #[serde(default)]
    pub balancer: BalancerConfig,
    pub backends: Vec<BackendConfig>,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            default_backend: "cpu".into(),
            balancer: BalancerConfig::default(),
            backends: vec![BackendConfig {
                name: "cpu".into(),
                workers: 4,
                profile: BackendProfile::local_cpu(),
            }],
        }
    }
}

impl GatewayConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: GatewayConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Applies environment overrides from `lookup` (normally `std::env::var`).
    pub fn apply_env(
        &mut self,
        lookup: impl Fn(&str) -> Option<String>,
    ) -> Result<(), ConfigError> {
        if let Some(bind) = lookup(ENV_BIND) {
            self.bind = bind
                .parse()
                .map_err(|e| ConfigError::Invalid(format!("{ENV_BIND}={bind}: {e}")))?;
        }
        if let Some(endpoint) = lookup(ENV_ACCEL_ENDPOINT) {
            for b in &mut self.backends {
                if b.profile.kind == BackendKind::RemoteAccel {
                    b.profile.endpoint = Some(endpoint.clone());
                }
            }
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.backends.is_empty() {
            return Err(ConfigError::Invalid("no backends configured".into()));
        }
        let mut names = std::collections::HashSet::new();
        for b in &self.backends {
            if !names.insert(b.name.as_str()) {
                return Err(ConfigError::Invalid(format!("duplicate backend {:?}", b.name)));
            }
            if b.workers == 0 {
                return Err(ConfigError::Invalid(format!("backend {:?}: workers must be >= 1", b.name)));
            }
            b.profile
                .validate()
                .map_err(|e| ConfigError::Invalid(format!("backend {:?}: {e}", b.name)))?;
        }
        if !names.contains(self.default_backend.as_str()) {
            return Err(ConfigError::Invalid(format!(
                "default_backend {:?} is not configured",
                self.default_backend
            )));
        }
        Ok(())
    }
}
