use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::ideation::TraceMode;
use crate::semgraph::SubstrateSpec;
use crate::social::Protocol;

/// Every knob of the four experiments. Loaded from TOML; missing fields
/// take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    /// Vocabulary size `|V|`.
    pub n: usize,
    /// Ring-lattice degree.
    pub k: usize,
    /// Rewiring probabilities for the modularity-vs-p experiment.
    pub p_grid: Vec<f64>,
    pub graphs_per_p: usize,
    /// Range `p_i` is drawn from for the agent population.
    pub p_range: [f64; 2],
    pub population_size: usize,
    pub walk_length: usize,
    /// Prompts per agent for breadth estimates (`S`).
    pub prompts: usize,
    /// Walk replicates per prompt (`R`).
    pub replicates: usize,
    /// Walk iterations averaged per exposure.
    pub iterations: usize,
    /// Walk iterations averaged per matched redundancy instance.
    pub redundancy_iterations: usize,
    pub ordered_pairs: usize,
    pub prompts_per_pair: usize,
    pub matched_instances: usize,
    pub source_quantile: f64,
    pub recipient_quantile: f64,
    pub bootstrap_iters: usize,
    pub bins: usize,
    pub trace_mode: TraceMode,
    /// Set to false to make trace incorporation a no-op.
    pub inspiration: bool,
    pub output_dir: PathBuf,
}

/// `count` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            master_seed: 42,
            n: 100,
            k: 4,
            p_grid: linspace(0.0, 1.0, 15),
            graphs_per_p: 15,
            p_range: [0.01, 0.5],
            population_size: 500,
            walk_length: 20,
            prompts: 20,
            replicates: 30,
            iterations: 10,
            redundancy_iterations: 50,
            ordered_pairs: 500,
            prompts_per_pair: 10,
            matched_instances: 5_000,
            source_quantile: 0.2,
            recipient_quantile: 0.2,
            bootstrap_iters: 1_000,
            bins: 100,
            trace_mode: TraceMode::Traversed,
            inspiration: true,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn substrate(&self) -> SubstrateSpec {
        SubstrateSpec {
            n: self.n,
            k: self.k,
        }
    }

    pub fn exposure_protocol(&self) -> Protocol {
        Protocol {
            walk_length: self.walk_length,
            iterations: self.iterations,
            trace_mode: self.trace_mode,
            inspiration: self.inspiration,
        }
    }

    pub fn redundancy_protocol(&self) -> Protocol {
        Protocol {
            iterations: self.redundancy_iterations,
            ..self.exposure_protocol()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.substrate().validate()?;
        let counts = [
            ("graphs_per_p", self.graphs_per_p),
            ("population_size", self.population_size),
            ("prompts", self.prompts),
            ("replicates", self.replicates),
            ("iterations", self.iterations),
            ("redundancy_iterations", self.redundancy_iterations),
            ("ordered_pairs", self.ordered_pairs),
            ("prompts_per_pair", self.prompts_per_pair),
            ("matched_instances", self.matched_instances),
            ("bins", self.bins),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(param(format!("{name} must be >= 1")));
            }
        }
        if self.bootstrap_iters < 100 {
            return Err(param("bootstrap_iters must be >= 100"));
        }
        if self.p_grid.is_empty() {
            return Err(param("p_grid must not be empty"));
        }
        let unit = 0.0..=1.0;
        if self
            .p_grid
            .iter()
            .chain(&self.p_range)
            .any(|p| !unit.contains(p))
        {
            return Err(param("rewiring probabilities must lie in [0, 1]"));
        }
        if self.p_range[0] > self.p_range[1] {
            return Err(param("p_range must be [low, high] with low <= high"));
        }
        for (name, q) in [
            ("source_quantile", self.source_quantile),
            ("recipient_quantile", self.recipient_quantile),
        ] {
            if !(q > 0.0 && q <= 0.5) {
                return Err(param(format!("{name} must lie in (0, 0.5]")));
            }
        }
        if self.prompts_per_pair > self.n {
            return Err(param("prompts_per_pair cannot exceed the vocabulary size"));
        }
        Ok(())
    }

    /// Multiplies the population and design sizes by `factor` (floored,
    /// never below 10).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(param(format!(
                "scale factor must be positive, got {factor}"
            )));
        }
        let scale = |v: usize| ((v as f64 * factor).floor() as usize).max(10);
        Ok(Self {
            population_size: scale(self.population_size),
            ordered_pairs: scale(self.ordered_pairs),
            matched_instances: scale(self.matched_instances),
            ..self.clone()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!(c.p_grid.len(), 15);
        assert_eq!(c.p_grid[0], 0.0);
        assert_eq!(c.p_grid[14], 1.0);
        let back = ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_toml_uses_defaults() {
        let c = ExperimentConfig::from_toml_str("n = 300\nk = 10\nwalk_length = 30\n").unwrap();
        assert_eq!((c.n, c.k, c.walk_length), (300, 10, 30));
        assert_eq!(c.population_size, 500);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ExperimentConfig::from_toml_str("k = 3").is_err());
        assert!(ExperimentConfig::from_toml_str("source_quantile = 0.7").is_err());
        assert!(ExperimentConfig::from_toml_str("p_range = [0.6, 0.2]").is_err());
        assert!(ExperimentConfig::from_toml_str("iterations = 0").is_err());
        assert!(ExperimentConfig::from_toml_str("bogus = 1").is_err());
        assert!(ExperimentConfig::from_toml_str("bootstrap_iters = 10").is_err());
    }

    #[test]
    fn scaling() {
        let c = ExperimentConfig::default().scaled(0.1).unwrap();
        assert_eq!(
            (c.population_size, c.ordered_pairs, c.matched_instances),
            (50, 50, 500)
        );
        let tiny = ExperimentConfig::default().scaled(0.001).unwrap();
        assert_eq!(tiny.population_size, 10);
        assert!(ExperimentConfig::default().scaled(0.0).is_err());
    }
}
