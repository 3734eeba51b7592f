use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use threatsent_core::alignment::DEFAULT_DISAGREEMENT_THRESHOLD;
use threatsent_core::gateway::ProviderConfig;
use threatsent_core::synthesis::{build_schedule, default_positions, GenerationSchedule, DEFAULT_PER_POSITION};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    #[default]
    Mock,
    Http,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderSection {
    pub kind: ProviderKind,
    #[serde(flatten)]
    pub settings: ProviderConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleSection {
    pub positions: Vec<f64>,
    pub per_position: u32,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self {
            positions: default_positions(),
            per_position: DEFAULT_PER_POSITION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    pub scores: Option<PathBuf>,
}

/// Settings for one run: a JSON file, then command-line overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub provider: ProviderSection,
    pub seed: u64,
    pub paths: Paths,
    pub schedule: ScheduleSection,
    pub disagreement_threshold: f64,
    pub annotation_port: u16,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            provider: ProviderSection::default(),
            seed: 0,
            paths: Paths::default(),
            schedule: ScheduleSection::default(),
            disagreement_threshold: DEFAULT_DISAGREEMENT_THRESHOLD,
            annotation_port: 8737,
        }
    }
}

/// Flags shared by every subcommand. Each one that is set wins over the
/// config file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// JSON experiment config
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub provider: Option<ProviderKind>,
    #[arg(long = "base-url", global = true)]
    pub base_url: Option<String>,
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Requests per minute
    #[arg(long, global = true)]
    pub rate: Option<u32>,
    /// Disagreement threshold for `align`
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    #[arg(long, global = true)]
    pub port: Option<u16>,
    #[arg(long = "in", global = true)]
    pub input: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub gold: Option<PathBuf>,
    #[arg(long, global = true)]
    pub scores: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(overrides: &Overrides) -> Result<Self, CliError> {
        let mut config = match &overrides.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Data(format!("cannot read config {}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Data(format!("config {}: {e}", path.display())))?
            }
            None => ExperimentConfig::default(),
        };
        config.apply(overrides);
        config.validate()?;
        Ok(config)
    }

    fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.provider {
            self.provider.kind = v;
        }
        if let Some(v) = &o.base_url {
            self.provider.settings.base_url = v.clone();
        }
        if let Some(v) = &o.model {
            self.provider.settings.model_name = v.clone();
        }
        if let Some(v) = o.rate {
            self.provider.settings.requests_per_minute = v;
        }
        if let Some(v) = o.threshold {
            self.disagreement_threshold = v;
        }
        if let Some(v) = o.port {
            self.annotation_port = v;
        }
        for (slot, flag) in [
            (&mut self.paths.input, &o.input),
            (&mut self.paths.output, &o.out),
            (&mut self.paths.gold, &o.gold),
            (&mut self.paths.scores, &o.scores),
        ] {
            if flag.is_some() {
                *slot = flag.clone();
            }
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        self.provider
            .settings
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        self.schedule()?;
        let t = self.disagreement_threshold;
        if !(t > 0.0 && t <= 1.0) {
            return Err(CliError::Usage(format!("threshold {t} must be in (0, 1]")));
        }
        Ok(())
    }

    pub fn schedule(&self) -> Result<GenerationSchedule, CliError> {
        build_schedule(&self.schedule.positions, self.schedule.per_position)
            .map_err(|e| CliError::Usage(format!("schedule: {e}")))
    }

    /// Short SHA-256 over everything that shapes results. File locations and
    /// the port are left out so relocated runs hash alike.
    pub fn hash(&self) -> String {
        let mut shaped = self.clone();
        shaped.paths = Paths::default();
        shaped.annotation_port = 0;
        let json = serde_json::to_vec(&shaped).expect("config serializes");
        format!("{:x}", Sha256::digest(&json))[..16].to_string()
    }

    pub fn input(&self) -> Result<&Path, CliError> {
        existing(self.paths.input.as_deref(), "--in")
    }

    pub fn gold(&self) -> Result<&Path, CliError> {
        existing(self.paths.gold.as_deref(), "--gold")
    }

    pub fn scores(&self) -> Result<&Path, CliError> {
        existing(self.paths.scores.as_deref(), "--scores")
    }
}

fn existing<'a>(path: Option<&'a Path>, flag: &str) -> Result<&'a Path, CliError> {
    let path = path.ok_or_else(|| CliError::Usage(format!("{flag} is required")))?;
    if !path.exists() {
        return Err(CliError::Data(format!("{flag} {} does not exist", path.display())));
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(
            &path,
            r#"{"seed": 3, "provider": {"kind": "http", "model_name": "m1", "requests_per_minute": 10},
                "schedule": {"positions": [0.2, 0.8], "per_position": 2}}"#,
        )
        .unwrap();
        let mut o = Overrides {
            config: Some(path.clone()),
            ..Default::default()
        };
        let c = ExperimentConfig::load(&o).unwrap();
        assert_eq!((c.seed, c.provider.kind), (3, ProviderKind::Http));
        assert_eq!(c.provider.settings.model_name, "m1");
        assert_eq!(c.schedule().unwrap().total(), 4);
        assert_eq!(c.disagreement_threshold, 0.5);

        o.seed = Some(9);
        o.rate = Some(99);
        o.provider = Some(ProviderKind::Mock);
        let c = ExperimentConfig::load(&o).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.provider.settings.requests_per_minute, 99);
        assert_eq!(c.provider.kind, ProviderKind::Mock);
    }

    #[test]
    fn hash_ignores_paths_only() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.paths.output = Some("elsewhere.csv".into());
        b.annotation_port = 1;
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn bad_values_are_usage_errors() {
        let o = Overrides {
            threshold: Some(0.0),
            ..Default::default()
        };
        assert!(matches!(ExperimentConfig::load(&o), Err(CliError::Usage(_))));
        let o = Overrides {
            rate: Some(0),
            ..Default::default()
        };
        assert!(matches!(ExperimentConfig::load(&o), Err(CliError::Usage(_))));
    }
}
