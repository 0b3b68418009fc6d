use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::monitors::MonitorConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Topics {
    pub state: String,
    pub action: String,
}

impl Default for Topics {
    fn default() -> Self {
        Topics { state: "tessla".into(), action: "action".into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum P2Engine {
    /// Native implementation.
    #[default]
    Direct,
    /// The shipped stream program.
    Dsl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwinConfig {
    /// `memory` for the in-process bus, otherwise `mqtt://host:port`.
    pub broker_url: String,
    pub client_id: String,
    pub topics: Topics,
    pub payload_format: String,
    pub qos: u8,
    pub monitor: MonitorConfig,
    pub p2_engine: P2Engine,
    pub log_path: Option<PathBuf>,
    /// `host:port` for the plain-text counters page.
    pub status_addr: Option<String>,
}

impl Default for TwinConfig {
    fn default() -> Self {
        TwinConfig {
            broker_url: "memory".into(),
            client_id: "rvtwin-twin".into(),
            topics: Topics::default(),
            payload_format: "json".into(),
            qos: 1,
            monitor: MonitorConfig::default(),
            p2_engine: P2Engine::Direct,
            log_path: None,
            status_addr: None,
        }
    }
}

impl TwinConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: TwinConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.topics.state.is_empty() || self.topics.action.is_empty() {
            return bad("topics must be non-empty");
        }
        if self.topics.state == self.topics.action {
            return bad("state and action topics must differ");
        }
        if self.qos > 1 {
            return bad("qos must be 0 or 1");
        }
        if self.payload_format != "json" {
            return bad("payload_format must be json");
        }
        if self.broker_url != "memory" {
            super::transport::parse_broker_url(&self.broker_url).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        self.monitor.validate().map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}
