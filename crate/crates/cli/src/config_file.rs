//! Flat `key = value` experiment configuration.
//!
//! One key per line; `#` starts a comment. Keys cover the experiment itself
//! (`agent`, `steps`, `eval_interval`, `seeds`, `out`), every environment
//! parameter except `rng_seed` (each campaign seed replaces it), and every
//! learning hyperparameter. Omitted keys keep their defaults. When
//! `frames_per_second` is set without `slot_duration`, the slot length is
//! derived as `1 / frames_per_second`.

use std::path::{Path, PathBuf};

use vrnoma_core::agents::{check_action_space, AgentConfig, AgentError, AgentKind};
use vrnoma_core::env::{EnvConfig, EnvError};

use crate::HarnessError;

/// Experiment-level keys handled by [`ExperimentSpec`] itself.
pub const EXPERIMENT_KEYS: &[&str] = &["agent", "steps", "eval_interval", "seeds", "out"];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub env: EnvConfig,
    pub agent_config: AgentConfig,
    pub agent: AgentKind,
    /// Environment steps of training per seed.
    pub steps: usize,
    pub eval_interval: usize,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
}

impl Default for ExperimentSpec {
    /// Desk-scale protocol: 3e4 steps, seeds 0 to 2, an eval point every
    /// 500 steps.
    fn default() -> Self {
        Self {
            env: EnvConfig::default(),
            agent_config: AgentConfig::default(),
            agent: AgentKind::Hrppo,
            steps: 30_000,
            eval_interval: 500,
            seeds: vec![0, 1, 2],
            out_dir: PathBuf::from("runs"),
        }
    }
}

impl ExperimentSpec {
    /// Full-length protocol: 2e5 steps, seeds 0 to 10, eval every 50 steps.
    pub fn paper_preset() -> Self {
        Self { steps: 200_000, eval_interval: 50, seeds: (0..=10).collect(), ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.seeds.is_empty() {
            return Err(HarnessError::invalid("seeds", "seed list is empty"));
        }
        if self.eval_interval == 0 {
            return Err(HarnessError::invalid("eval_interval", "must be at least 1"));
        }
        if self.steps < self.eval_interval {
            return Err(HarnessError::invalid(
                "steps",
                format!("steps ({}) must be >= eval_interval ({})", self.steps, self.eval_interval),
            ));
        }
        self.env.validate()?;
        self.agent_config.validate()?;
        check_action_space(self.env.action_space_size())?;
        Ok(())
    }

    /// Sets one key, whichever group it belongs to.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let v = value.trim();
        let bad = || HarnessError::InvalidValue { line: None, key: key.to_string(), value: value.to_string() };
        match key {
            "agent" => self.agent = v.parse().map_err(|_| bad())?,
            "steps" => self.steps = v.parse().map_err(|_| bad())?,
            "eval_interval" => self.eval_interval = v.parse().map_err(|_| bad())?,
            "seeds" => self.seeds = parse_seeds(v).map_err(|_| bad())?,
            "out" => self.out_dir = PathBuf::from(v),
            "rng_seed" => {
                return Err(HarnessError::UnknownKey {
                    line: None,
                    key: "rng_seed (set seeds instead)".into(),
                })
            }
            _ if EnvConfig::KEYS.contains(&key) => self.env.set(key, v).map_err(|e| match e {
                EnvError::InvalidValue { .. } => bad(),
                other => other.into(),
            })?,
            _ if AgentConfig::KEYS.contains(&key) => self.agent_config.set(key, v).map_err(|e| match e {
                AgentError::InvalidValue { .. } => bad(),
                other => other.into(),
            })?,
            _ => return Err(HarnessError::UnknownKey { line: None, key: key.to_string() }),
        }
        Ok(())
    }

    /// Every effective key and value, experiment keys first.
    pub fn entries(&self) -> Vec<(String, String)> {
        let seeds = self.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        let mut out = vec![
            ("agent".to_string(), self.agent.to_string()),
            ("steps".to_string(), self.steps.to_string()),
            ("eval_interval".to_string(), self.eval_interval.to_string()),
            ("seeds".to_string(), seeds),
            ("out".to_string(), self.out_dir.display().to_string()),
        ];
        out.extend(
            self.env
                .entries()
                .into_iter()
                .filter(|(k, _)| *k != "rng_seed")
                .map(|(k, v)| (k.to_string(), v)),
        );
        out.extend(self.agent_config.entries().into_iter().map(|(k, v)| (k.to_string(), v)));
        out
    }

    /// The effective configuration in the file format [`parse_config`] reads.
    pub fn to_config_text(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// Parses `A..B` (inclusive), a single seed, or a comma-separated list.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, HarnessError> {
    let bad = || HarnessError::InvalidValue { line: None, key: "seeds".into(), value: text.to_string() };
    let text = text.trim();
    if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

/// Applies `text` on top of `base`.
pub fn parse_config(text: &str, base: ExperimentSpec) -> Result<ExperimentSpec, HarnessError> {
    let mut spec = base;
    let mut fps_set = false;
    let mut slot_set = false;
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(HarnessError::Syntax { line, text: raw.to_string() });
        };
        let key = key.trim();
        spec.set(key, value).map_err(|e| e.at_line(line))?;
        fps_set |= key == "frames_per_second";
        slot_set |= key == "slot_duration";
    }
    if fps_set && !slot_set && spec.env.frames_per_second > 0 {
        spec.env.slot_duration = 1.0 / spec.env.frames_per_second as f64;
    }
    Ok(spec)
}

pub fn load_config(path: &Path, base: ExperimentSpec) -> Result<ExperimentSpec, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
    parse_config(&text, base)
}
