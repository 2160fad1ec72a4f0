//! Service and CLI configuration: one TOML file plus environment overrides.

use std::path::{Path, PathBuf};
use std::time::Duration;

use cep_core::align::AlignmentParams;
use cep_core::bitext::{SplitRatios, StatusFilter};
use cep_core::bleu::BleuConfig;
use cep_core::engine::Policy;
use cep_core::FilterRule;
use serde::{Deserialize, Serialize};

pub const CONFIG_ENV: &str = "CEP_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub listen: String,
    pub store: PathBuf,
    /// Write a snapshot every this many events; 0 disables snapshots.
    pub snapshot_every: u64,
    /// Bearer token for the admin endpoints. Without one they always answer 401.
    pub admin_token: Option<String>,
    pub translator: TranslatorConfig,
    pub policy: Policy,
    pub filter: FilterRule,
    pub alignment: AlignmentParams,
    pub bleu: BleuConfig,
    pub export: ExportConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            listen: "127.0.0.1:8080".to_string(),
            store: PathBuf::from("cep-store"),
            snapshot_every: 100,
            admin_token: None,
            translator: TranslatorConfig::default(),
            policy: Policy::default(),
            filter: FilterRule::default(),
            alignment: AlignmentParams::default(),
            bleu: BleuConfig::default(),
            export: ExportConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TranslatorConfig {
    /// Endpoint taking `POST {text, direction}` and answering `{translation}`.
    pub endpoint: Option<String>,
    pub timeout_ms: u64,
}

impl Default for TranslatorConfig {
    fn default() -> Self {
        TranslatorConfig {
            endpoint: None,
            timeout_ms: 10_000,
        }
    }
}

impl TranslatorConfig {
    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportConfig {
    pub seed: u64,
    pub ratios: SplitRatios,
    pub status: StatusFilter,
}

impl Default for ExportConfig {
    fn default() -> Self {
        ExportConfig {
            seed: 42,
            ratios: SplitRatios::default(),
            status: StatusFilter::Verified,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid value for {var}: {message}")]
    Env { var: &'static str, message: String },
    #[error("invalid config: {0}")]
    Invalid(#[from] cep_core::Error),
}

impl Config {
    pub fn from_toml(text: &str, path: &Path) -> Result<Config, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Reads `path` (or built-in defaults when `None`), then applies
    /// environment overrides from `env`.
    pub fn load(path: Option<&Path>, env: impl Fn(&str) -> Option<String>) -> Result<Config, ConfigError> {
        let mut config = match path {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
                    path: path.to_path_buf(),
                    source,
                })?;
                Config::from_toml(&text, path)?
            }
            None => Config::default(),
        };
        config.apply_env(env)?;
        config.validate()?;
        Ok(config)
    }

    fn apply_env(&mut self, env: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(v) = env("CEP_LISTEN") {
            self.listen = v;
        }
        if let Some(v) = env("CEP_STORE") {
            self.store = PathBuf::from(v);
        }
        if let Some(v) = env("CEP_ADMIN_TOKEN") {
            self.admin_token = Some(v);
        }
        if let Some(v) = env("CEP_TRANSLATOR_URL") {
            self.translator.endpoint = (!v.is_empty()).then_some(v);
        }
        if let Some(v) = env("CEP_TRANSLATOR_TIMEOUT_MS") {
            self.translator.timeout_ms = v.parse().map_err(|_| ConfigError::Env {
                var: "CEP_TRANSLATOR_TIMEOUT_MS",
                message: format!("{v:?} is not a whole number of milliseconds"),
            })?;
        }
        if let Some(v) = env("CEP_QUORUM") {
            self.policy.quorum = v.parse().map_err(|_| ConfigError::Env {
                var: "CEP_QUORUM",
                message: format!("{v:?} is not a count"),
            })?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), cep_core::Error> {
        self.policy.validate()?;
        self.filter.validate()?;
        self.alignment.validate()?;
        self.bleu.validate()?;
        self.export.ratios.validate()
    }
}
