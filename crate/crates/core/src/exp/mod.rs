//! Experiment orchestration: populations, the four experiments, sweeps,
//! and their persisted tables.
//!
//! Every stochastic work unit owns a stream derived from the master seed
//! and its own key (agent id, pair and prompt slot, instance id), and
//! results are gathered in key order. Outputs are therefore byte-identical
//! across reruns and thread counts.

mod config;
mod experiments;
mod output;
mod population;
mod sweep;

pub use config::{linspace, ExperimentConfig};
pub use experiments::{
    experiment1_modularity_vs_p, experiment2_breadth_vs_modularity, experiment3_stimulation,
    experiment4_redundancy, BinRow, ConditionMean, Exp1Report, Exp1Row, Exp2Report, Exp2Row,
    Exp3Report, Exp4Report, GridPoint,
};
pub use output::{csv_bytes, Artifacts, Summary};
pub use population::{build_population, Agent, AgentPopulation, Layout};
pub use sweep::{run_sweep, Experiment, SweepAxes, SweepCell, SweepReport};

use crate::error::Result;

/// Runs the selected experiments (sharing one population) and returns the
/// summary together with every table to be written.
pub fn run_experiments(
    config: &ExperimentConfig,
    selection: &[Experiment],
) -> Result<(Summary, Artifacts)> {
    config.validate()?;
    let mut summary = Summary::new(config);
    let mut artifacts = Artifacts::default();
    if selection.contains(&Experiment::Modularity) {
        let report = experiment1_modularity_vs_p(config)?;
        artifacts.push("exp1_modularity.csv", output::exp1_csv(&report)?);
        summary.exp1 = Some(report);
    }
    let needs_population = selection.iter().any(|e| *e != Experiment::Modularity);
    if needs_population {
        let population = build_population(config, &Layout::population(config))?;
        if selection.contains(&Experiment::Breadth) {
            let report = experiment2_breadth_vs_modularity(config, &population)?;
            artifacts.push("exp2_breadth.csv", output::exp2_csv(&report)?);
            summary.exp2 = Some(report);
        }
        if selection.contains(&Experiment::Stimulation) {
            let report = experiment3_stimulation(config, &population)?;
            artifacts.push("exp3_exposures.csv", output::exp3_csv(&report)?);
            artifacts.push("exp3_binned.csv", output::exp3_binned_csv(&report)?);
            summary.exp3 = Some(report);
        }
        if selection.contains(&Experiment::Redundancy) {
            let report = experiment4_redundancy(config, &population)?;
            artifacts.push("exp4_redundancy.csv", output::exp4_csv(&report)?);
            summary.exp4 = Some(report);
        }
    }
    artifacts.push("summary.json", summary.to_json()?);
    Ok((summary, artifacts))
}

/// Sweep with its table and summary.
pub fn run_sweep_artifacts(
    config: &ExperimentConfig,
    axes: &SweepAxes,
    selection: &[Experiment],
) -> Result<(SweepReport, Artifacts)> {
    let report = run_sweep(config, axes, selection)?;
    let mut artifacts = Artifacts::default();
    artifacts.push("sweep.csv", csv_bytes(&report.cells)?);
    let mut summary = Summary::new(config);
    summary.sweep = Some(report.clone());
    artifacts.push("summary.json", summary.to_json()?);
    Ok((report, artifacts))
}
