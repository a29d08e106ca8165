use std::fs;
use std::path::{Path, PathBuf};

use prospector::pipeline::ProspectorParams;
use prospector::select::HyperGrid;
use serde::Deserialize;

use crate::Failure;

/// Run settings read from `--config` (TOML, or JSON by extension).
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub thresholds: Option<Vec<f64>>,
    #[serde(default)]
    pub prospector: ProspectorParams,
    pub grid: Option<HyperGrid>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
        let config: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), Failure> {
        for path in [&self.train, &self.test].into_iter().flatten() {
            if !path.exists() {
                return Err(Failure::Data(format!("configured path {} does not exist", path.display())));
            }
        }
        if self.workers == Some(0) {
            return Err(Failure::Data("workers must be at least 1".into()));
        }
        Ok(())
    }
}
