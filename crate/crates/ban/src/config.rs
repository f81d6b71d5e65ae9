//! Layered settings: built-in defaults, then a TOML file, then flags.

use std::path::{Path, PathBuf};

use ban_core::source_model::CharLmConfig;
use ban_core::synthetic::SyntheticConfig;
use ban_core::training::ExperimentConfig;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};
use crate::io::read_text;

/// Environment variable naming a default config file.
pub const CONFIG_ENV: &str = "BAN_CONFIG";

/// Source-model training knobs. Everything else (learning rate, batch
/// size, dropout, annealing, scheme) comes from the experiment section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceSettings {
    pub seed: u64,
    pub epochs: usize,
    pub hidden: usize,
    /// Width of the random static table used when no embedding file is given.
    pub static_dim: usize,
}

impl Default for SourceSettings {
    fn default() -> Self {
        Self {
            seed: 1,
            epochs: 10,
            hidden: 16,
            static_dim: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub experiment: ExperimentConfig,
    pub source: SourceSettings,
    pub charlm: CharLmConfig,
    pub synthetic: SyntheticConfig,
}

impl Settings {
    pub fn from_toml(path: &Path, text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| AppError::Parse {
            path: path.to_path_buf(),
            line: e.span().map_or(0, |s| text[..s.start].matches('\n').count() + 1),
            message: e.message().to_string(),
        })
    }

    /// Defaults overlaid with `explicit`, or with the file named by
    /// [`CONFIG_ENV`] when no path is given.
    pub fn load(explicit: Option<&Path>) -> Result<Self> {
        let path = explicit
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from));
        match path {
            Some(p) => Self::from_toml(&p, &read_text(&p)?),
            None => Ok(Self::default()),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("settings always serialize")
    }

    /// The experiment config used to train the source tagger.
    pub fn source_experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            epochs: self.source.epochs,
            hidden: self.source.hidden,
            transfer: false,
            embedding_only: false,
            ..self.experiment.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.experiment
            .validate()
            .map_err(|e| AppError::Usage(format!("invalid experiment settings: {e}")))?;
        if self.source.hidden == 0 || self.source.static_dim == 0 || self.charlm.hidden == 0 {
            return Err(AppError::Usage("hidden sizes and the static dimension must be positive".into()));
        }
        if self.synthetic.attention_noise.is_empty() {
            return Err(AppError::Usage("synthetic attention_noise needs at least one layer".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ban_core::attention::AttentionMode;

    #[test]
    fn defaults_round_trip_through_toml() {
        let s = Settings::default();
        assert_eq!(Settings::from_toml(Path::new("x"), &s.to_toml()).unwrap(), s);
    }

    #[test]
    fn file_overrides_defaults() {
        let text = "[experiment]\nepochs = 7\nattention = \"2\"\n[synthetic]\nidentical_layers = true\n";
        let s = Settings::from_toml(Path::new("x"), text).unwrap();
        assert_eq!(s.experiment.epochs, 7);
        assert_eq!(s.experiment.attention, AttentionMode::Layer(2));
        assert!(s.synthetic.identical_layers);
        assert_eq!(s.experiment.learning_rate, 0.1);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = Settings::from_toml(Path::new("x"), "[experiment]\nepoch = 7\n").unwrap_err();
        assert!(matches!(err, AppError::Parse { line: 2, .. }), "{err}");
        assert!(Settings::from_toml(Path::new("x"), "[extra]\n").is_err());
    }
}
