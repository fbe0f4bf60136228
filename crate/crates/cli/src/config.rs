//! TOML experiment files. Every key is optional; command-line flags take
//! precedence over the file, and the file over built-in defaults.
//!
//! ```toml
//! seed = 7
//! rate = 0.5
//! n = 3000
//! qber = [0.16, 0.18, 0.20]
//! frames = 5000
//! error_stop = 100
//!
//! [decoder]
//! max_iterations = 100
//!
//! [mcde]
//! node_count = 20000
//! ```

use std::path::{Path, PathBuf};

use nbrecon_core::{DeConfig, DecoderConfig, McdeConfig};
use serde::Deserialize;

use crate::args::OutputFormat;
use crate::error::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub q: Option<usize>,
    pub rate: Option<f64>,
    pub ensemble: Option<String>,
    pub lambda: Option<String>,
    pub code: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub n: Option<usize>,
    pub qber: Option<Vec<f64>>,
    pub frames: Option<usize>,
    pub error_stop: Option<usize>,
    pub batch: Option<usize>,
    pub target_fer: Option<f64>,
    pub search_steps: Option<usize>,
    pub timing: Option<bool>,
    pub output: Option<PathBuf>,
    pub audit: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub decoder: Option<DecoderConfig>,
    pub mcde: Option<McdeConfig>,
    pub de: Option<DeConfig>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

/// `flag`, else `file`.
pub fn pick<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_tables_keep_defaults_for_missing_keys() {
        let cfg: FileConfig = toml::from_str(
            "seed = 3\nqber = [0.1, 0.2]\nformat = \"json\"\n[decoder]\nmax_iterations = 7\n[mcde]\nsearch = { bisect = { steps = 5 } }\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(3));
        assert_eq!(cfg.format, Some(OutputFormat::Json));
        let dec = cfg.decoder.unwrap();
        assert_eq!(dec.max_iterations, 7);
        assert_eq!(dec.llr_saturation, DecoderConfig::default().llr_saturation);
        assert_eq!(cfg.mcde.unwrap().node_count, McdeConfig::default().node_count);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("frams = 10").is_err());
    }
}
