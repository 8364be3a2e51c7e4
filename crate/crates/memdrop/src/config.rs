//! Experiment configuration: the flat `key = value` file format and its
//! validation. Every field is required in the file so no default is hidden
//! from a reader of the config. Lines starting with `#` and blank lines are
//! ignored.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    Greedy,
    MemoryDropout,
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Policy::Greedy => "greedy",
            Policy::MemoryDropout => "memory_dropout",
        })
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(Policy::Greedy),
            "memory_dropout" => Ok(Policy::MemoryDropout),
            other => Err(Error::Config(format!(
                "unknown policy '{other}', expected 'greedy' or 'memory_dropout'"
            ))),
        }
    }
}

/// Synthetic stream shape: `n_clusters` unit centroids in `dim` dimensions,
/// `steps` draws with Gaussian noise `noise_sigma`, all under one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamConfig {
    pub n_clusters: usize,
    pub dim: usize,
    pub noise_sigma: f64,
    pub steps: usize,
    pub seed: u64,
}

impl StreamConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_clusters < 1 {
            return Err(Error::Config("n_clusters must be at least 1".into()));
        }
        if self.dim < 2 {
            return Err(Error::Config(
                "dim must be at least 2 (key correlation needs two coordinates)".into(),
            ));
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(Error::Config(format!(
                "noise_sigma must be finite and non-negative, got {}",
                self.noise_sigma
            )));
        }
        if self.steps < 1 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub policy: Policy,
    pub memory_slots: usize,
    pub neighborhood: usize,
    pub epsilon: f64,
    pub record_every: usize,
    pub stream: StreamConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.stream.validate()?;
        if self.memory_slots < 2 {
            return Err(Error::Config(
                "memory_slots must be at least 2 (key correlation needs two rows)".into(),
            ));
        }
        if self.neighborhood < 1 {
            return Err(Error::Config("neighborhood must be at least 1".into()));
        }
        if !self.epsilon.is_finite() || !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!(
                "epsilon must lie in [0, 1], got {}",
                self.epsilon
            )));
        }
        if self.record_every < 1 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Parse the flat `key = value` format. Unknown, duplicate, or missing
    /// keys are errors naming the key.
    pub fn parse(text: &str) -> Result<Self> {
        const KEYS: [&str; 10] = [
            "policy",
            "memory_slots",
            "neighborhood",
            "epsilon",
            "record_every",
            "n_clusters",
            "dim",
            "noise_sigma",
            "steps",
            "seed",
        ];
        let mut raw: Vec<Option<String>> = vec![None; KEYS.len()];
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", idx + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let slot = KEYS
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| Error::Config(format!("unknown key '{key}'")))?;
            if raw[slot].is_some() {
                return Err(Error::Config(format!("duplicate key '{key}'")));
            }
            raw[slot] = Some(value.to_string());
        }
        let take = |name: &str| -> Result<String> {
            let slot = KEYS.iter().position(|k| *k == name).expect("known key");
            raw[slot]
                .clone()
                .ok_or_else(|| Error::Config(format!("missing key '{name}'")))
        };
        fn parsed<T: FromStr>(name: &str, value: String) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("invalid value '{value}' for key '{name}'")))
        }
        let config = ExperimentConfig {
            policy: take("policy")?.parse()?,
            memory_slots: parsed("memory_slots", take("memory_slots")?)?,
            neighborhood: parsed("neighborhood", take("neighborhood")?)?,
            epsilon: parsed("epsilon", take("epsilon")?)?,
            record_every: parsed("record_every", take("record_every")?)?,
            stream: StreamConfig {
                n_clusters: parsed("n_clusters", take("n_clusters")?)?,
                dim: parsed("dim", take("dim")?)?,
                noise_sigma: parsed("noise_sigma", take("noise_sigma")?)?,
                steps: parsed("steps", take("steps")?)?,
                seed: parsed("seed", take("seed")?)?,
            },
        };
        config.validate()?;
        Ok(config)
    }
}
