//! Run manifest written next to every command's outputs.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

/// Warning-producing events; every key is always present in a manifest.
pub const WARNING_KINDS: [&str; 6] = [
    "min_phase_rejection",
    "spectral_null_rejection",
    "pole_clamp",
    "pole_perturbation",
    "ridge_fallback",
    "weights_derived_in_process",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    /// SHA-256 of the resolved configuration rendered as TOML.
    pub config_hash: String,
    pub seed: u64,
    pub started_unix_s: u64,
    pub wall_clock_s: f64,
    pub stages: Vec<StageTiming>,
    /// Event counts keyed by [`WARNING_KINDS`].
    pub warnings: BTreeMap<String, usize>,
    pub notes: Vec<String>,
    pub outputs: Vec<String>,
    pub config: ExperimentConfig,
}

impl RunManifest {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        let started_unix_s = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config.hash(),
            seed: config.sweep.seed,
            started_unix_s,
            wall_clock_s: 0.0,
            stages: Vec::new(),
            warnings: WARNING_KINDS.iter().map(|k| (k.to_string(), 0)).collect(),
            notes: Vec::new(),
            outputs: Vec::new(),
            config: config.clone(),
        }
    }

    pub fn warn(&mut self, kind: &str, count: usize) {
        *self.warnings.entry(kind.to_string()).or_insert(0) += count;
    }

    pub fn warning(&self, kind: &str) -> usize {
        self.warnings.get(kind).copied().unwrap_or(0)
    }

    pub fn note(&mut self, text: impl Into<String>) {
        let text = text.into();
        log::warn!("{text}");
        self.notes.push(text);
    }

    /// Runs `f`, recording its duration under `stage`.
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.stages.push(StageTiming { stage: stage.to_string(), seconds: start.elapsed().as_secs_f64() });
        out
    }

    /// Adds another manifest's stages and warning counts, prefixing its stage names.
    pub fn absorb(&mut self, other: &RunManifest) {
        for s in &other.stages {
            self.stages.push(StageTiming { stage: format!("{}/{}", other.command, s.stage), seconds: s.seconds });
        }
        for (k, v) in &other.warnings {
            self.warn(k, *v);
        }
        self.notes.extend(other.notes.iter().cloned());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_warning_kind_is_present() {
        let mut m = RunManifest::new("test", &ExperimentConfig::default());
        for k in WARNING_KINDS {
            assert_eq!(m.warning(k), 0);
        }
        m.warn("pole_clamp", 3);
        m.warn("pole_clamp", 2);
        assert_eq!(m.warning("pole_clamp"), 5);
        let value: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(value["warnings"].as_object().unwrap().len(), WARNING_KINDS.len());
    }

    #[test]
    fn timing_and_absorb() {
        let mut inner = RunManifest::new("derive-weights", &ExperimentConfig::default());
        let v = inner.time("fit", || 7);
        assert_eq!(v, 7);
        inner.warn("ridge_fallback", 1);
        let mut outer = RunManifest::new("run-ser", &ExperimentConfig::default());
        outer.absorb(&inner);
        assert_eq!(outer.stages[0].stage, "derive-weights/fit");
        assert_eq!(outer.warning("ridge_fallback"), 1);
    }
}
