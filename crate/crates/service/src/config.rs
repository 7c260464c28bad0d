use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ServiceError;

pub const ENV_LISTEN: &str = "GAI_LISTEN";
pub const ENV_DATA_DIR: &str = "GAI_DATA_DIR";
pub const ENV_EVOI_WORKERS: &str = "GAI_EVOI_WORKERS";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServiceConfig {
    pub listen: String,
    pub data_dir: PathBuf,
    /// Threads for EVOI evaluation; 0 picks the number of cores.
    pub evoi_workers: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig { listen: "127.0.0.1:8080".into(), data_dir: PathBuf::from("gai-data"), evoi_workers: 0 }
    }
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, ServiceError> {
        toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))
    }

    /// Reads `path` if given, then applies environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self, ServiceError> {
        let base = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| ServiceError::Config(format!("{}: {e}", p.display())))?;
                Self::from_toml(&text)?
            }
            None => Self::default(),
        };
        base.with_overrides(|k| std::env::var(k).ok())
    }

    pub fn with_overrides(mut self, var: impl Fn(&str) -> Option<String>) -> Result<Self, ServiceError> {
        if let Some(v) = var(ENV_LISTEN) {
            self.listen = v;
        }
        if let Some(v) = var(ENV_DATA_DIR) {
            self.data_dir = PathBuf::from(v);
        }
        if let Some(v) = var(ENV_EVOI_WORKERS) {
            self.evoi_workers = v
                .trim()
                .parse()
                .map_err(|_| ServiceError::Config(format!("{ENV_EVOI_WORKERS}={v:?} is not a worker count")))?;
        }
        Ok(self)
    }
}
