//! Robustness sweeps over walk length, substrate size and seed.

use serde::{Deserialize, Serialize};

use super::experiments::{
    experiment1_modularity_vs_p, experiment2_breadth_vs_modularity, experiment3_stimulation,
    experiment4_redundancy, Exp1Report,
};
use super::population::{build_population, AgentPopulation, Layout};
use super::ExperimentConfig;
use crate::error::{param, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Modularity,
    Breadth,
    Stimulation,
    Redundancy,
}

impl Experiment {
    pub const ALL: [Experiment; 4] = [
        Experiment::Modularity,
        Experiment::Breadth,
        Experiment::Stimulation,
        Experiment::Redundancy,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxes {
    pub walk_lengths: Vec<usize>,
    /// `(n, k)` substrate sizes.
    pub sizes: Vec<(usize, usize)>,
    pub seeds: Vec<u64>,
}

/// Headline statistics of one sweep cell; experiments not run are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub walk_length: usize,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    /// Spearman ρ(p, Q).
    pub rho: Option<f64>,
    /// Pearson r(Q, B̂).
    pub r: Option<f64>,
    /// Two-way FE slope of gain on overlap.
    pub beta: Option<f64>,
    /// Mean triad − control redundancy.
    pub delta: Option<f64>,
    /// Clustered t of the redundancy difference.
    pub t: Option<f64>,
}

impl SweepCell {
    /// Every computed headline has the expected sign.
    pub fn signs_hold(&self) -> bool {
        self.rho.is_none_or(|v| v < 0.0)
            && self.r.is_none_or(|v| v < 0.0)
            && self.beta.is_none_or(|v| v < 0.0)
            && self.delta.is_none_or(|v| v > 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub experiments: Vec<Experiment>,
    pub cells: Vec<SweepCell>,
    pub signs_consistent: bool,
}

/// Reruns the selected experiments for every `(T, (n, k), seed)` cell.
/// Populations and the modularity experiment do not depend on `T`, so they
/// are built once per `(n, k, seed)`.
pub fn run_sweep(
    base: &ExperimentConfig,
    axes: &SweepAxes,
    experiments: &[Experiment],
) -> Result<SweepReport> {
    if axes.walk_lengths.is_empty()
        || axes.sizes.is_empty()
        || axes.seeds.is_empty()
        || experiments.is_empty()
    {
        return Err(param("sweep axes and experiment list must be nonempty"));
    }
    let wants = |e: Experiment| experiments.contains(&e);
    let needs_population = wants(Experiment::Breadth)
        || wants(Experiment::Stimulation)
        || wants(Experiment::Redundancy);

    let mut cells = Vec::new();
    for &(n, k) in &axes.sizes {
        for &seed in &axes.seeds {
            let shared = ExperimentConfig {
                n,
                k,
                master_seed: seed,
                ..base.clone()
            };
            shared.validate()?;
            let exp1: Option<Exp1Report> = wants(Experiment::Modularity)
                .then(|| experiment1_modularity_vs_p(&shared))
                .transpose()?;
            let population: Option<AgentPopulation> = needs_population
                .then(|| build_population(&shared, &Layout::population(&shared)))
                .transpose()?;
            for &walk_length in &axes.walk_lengths {
                let config = ExperimentConfig {
                    walk_length,
                    ..shared.clone()
                };
                let mut cell = SweepCell {
                    walk_length,
                    n,
                    k,
                    seed,
                    rho: exp1.as_ref().map(|r| r.spearman.estimate),
                    r: None,
                    beta: None,
                    delta: None,
                    t: None,
                };
                if let Some(pop) = &population {
                    if wants(Experiment::Breadth) {
                        cell.r = Some(
                            experiment2_breadth_vs_modularity(&config, pop)?
                                .pearson
                                .estimate,
                        );
                    }
                    if wants(Experiment::Stimulation) {
                        cell.beta = Some(
                            experiment3_stimulation(&config, pop)?
                                .fixed_effects
                                .coefficients[0],
                        );
                    }
                    if wants(Experiment::Redundancy) {
                        let rep = experiment4_redundancy(&config, pop)?;
                        cell.delta = Some(rep.difference.coefficients[0]);
                        cell.t = Some(rep.difference.t_stats[0]);
                    }
                }
                cells.push(cell);
            }
        }
    }
    let mut experiments = experiments.to_vec();
    experiments.sort();
    experiments.dedup();
    Ok(SweepReport {
        signs_consistent: cells.iter().all(SweepCell::signs_hold),
        experiments,
        cells,
    })
}
