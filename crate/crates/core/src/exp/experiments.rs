//! The four population experiments.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::population::{build_population, AgentPopulation, Layout};
use super::ExperimentConfig;
use crate::error::{param, Result};
use crate::ideation::{expected_breadth, Prompt};
use crate::rng::{derive_stream, tags, Stream};
use crate::social::{
    run_exposure, run_redundancy_instance, ExposurePair, ExposureRecord, RedundancyGraphs,
    RedundancyInstance, RedundancyRoles,
};
use crate::stats::{
    bootstrap_ci, clustered_mean_test, cohens_dz, kendall, mean, ols, pearson,
    quantile_bin_partial, residualize, spearman, theil_sen, two_way_fe, CorrelationResult,
    PanelObservation, RegressionResult,
};

/// Draw budget for resampling degenerate role assignments.
const RETRY_BUDGET: usize = 100;

const MIN_GRID_POINTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exp1Row {
    pub p: f64,
    pub replicate: usize,
    #[serde(rename = "Q")]
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub p: f64,
    pub mean_q: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exp1Report {
    #[serde(skip)]
    pub rows: Vec<Exp1Row>,
    pub grid: Vec<GridPoint>,
    pub spearman: CorrelationResult,
    pub kendall: CorrelationResult,
    pub linear: RegressionResult,
    pub quadratic: RegressionResult,
    pub quadratic_preferred: bool,
}

fn squares(values: &[f64]) -> Vec<f64> {
    values.iter().map(|v| v * v).collect()
}

/// Modularity of `graphs_per_p` rewired graphs at every grid value.
pub fn experiment1_modularity_vs_p(config: &ExperimentConfig) -> Result<Exp1Report> {
    if config.p_grid.len() < MIN_GRID_POINTS {
        return Err(param(format!(
            "experiment 1 needs at least {MIN_GRID_POINTS} grid values"
        )));
    }
    let population = build_population(config, &Layout::grid(config))?;
    let per_p = config.graphs_per_p;
    let rows: Vec<Exp1Row> = population
        .agents
        .iter()
        .map(|a| Exp1Row {
            p: a.spec.p,
            replicate: a.spec.agent_id % per_p,
            q: a.q,
        })
        .collect();

    let grid = config
        .p_grid
        .iter()
        .enumerate()
        .map(|(g, &p)| {
            let qs: Vec<f64> = rows[g * per_p..(g + 1) * per_p]
                .iter()
                .map(|r| r.q)
                .collect();
            let (ci_low, ci_high) = if qs.len() >= 2 {
                let mut rng =
                    derive_stream(config.master_seed, &[tags::EXP1, tags::BOOTSTRAP, g as u64]);
                bootstrap_ci(&qs, mean, config.bootstrap_iters, &mut rng)?
            } else {
                (qs[0], qs[0])
            };
            Ok(GridPoint {
                p,
                mean_q: mean(&qs),
                ci_low,
                ci_high,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let p: Vec<f64> = rows.iter().map(|r| r.p).collect();
    let q: Vec<f64> = rows.iter().map(|r| r.q).collect();
    let linear = ols(&q, std::slice::from_ref(&p), None)?;
    let quadratic = ols(&q, &[p.clone(), squares(&p)], None)?;
    Ok(Exp1Report {
        spearman: spearman(&p, &q)?,
        kendall: kendall(&p, &q)?,
        quadratic_preferred: quadratic.aic < linear.aic,
        linear,
        quadratic,
        grid,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exp2Row {
    pub agent_id: usize,
    pub p: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "B_hat")]
    pub b_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exp2Report {
    #[serde(skip)]
    pub rows: Vec<Exp2Row>,
    pub pearson: CorrelationResult,
    pub spearman: CorrelationResult,
    pub kendall: CorrelationResult,
    pub linear: RegressionResult,
    pub quadratic: RegressionResult,
    pub theil_sen: RegressionResult,
    pub quadratic_preferred: bool,
}

/// Expected breadth of every agent against its modularity.
pub fn experiment2_breadth_vs_modularity(
    config: &ExperimentConfig,
    population: &AgentPopulation,
) -> Result<Exp2Report> {
    let rows = population
        .agents
        .par_iter()
        .map(|agent| {
            let id = agent.spec.agent_id;
            let mut rng = derive_stream(config.master_seed, &[tags::EXP2, id as u64]);
            let est = expected_breadth(
                &agent.graph,
                config.walk_length,
                config.prompts,
                config.replicates,
                &mut rng,
                config.bootstrap_iters,
            )?;
            Ok(Exp2Row {
                agent_id: id,
                p: agent.spec.p,
                q: agent.q,
                b_hat: est.mean,
                ci_low: est.ci_low,
                ci_high: est.ci_high,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let q: Vec<f64> = rows.iter().map(|r| r.q).collect();
    let b: Vec<f64> = rows.iter().map(|r| r.b_hat).collect();
    let linear = ols(&b, std::slice::from_ref(&q), None)?;
    let quadratic = ols(&b, &[q.clone(), squares(&q)], None)?;
    let mut rng = derive_stream(config.master_seed, &[tags::EXP2, tags::BOOTSTRAP]);
    Ok(Exp2Report {
        pearson: pearson(&q, &b)?,
        spearman: spearman(&q, &b)?,
        kendall: kendall(&q, &b)?,
        theil_sen: theil_sen(&q, &b, config.bootstrap_iters, &mut rng)?,
        quadratic_preferred: quadratic.aic < linear.aic,
        linear,
        quadratic,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinRow {
    pub bin: usize,
    pub mean_resid_overlap: f64,
    pub mean_resid_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exp3Report {
    #[serde(skip)]
    pub exposures: Vec<ExposureRecord>,
    #[serde(skip)]
    pub binned: Vec<BinRow>,
    pub fixed_effects: RegressionResult,
    /// Slope of the unbinned residualized scatter; equals the FE slope.
    pub residual_slope: f64,
    /// Fewer newly accessed concepts per +0.10 of overlap (`−0.1 β`).
    pub fewer_concepts_per_tenth_overlap: f64,
    pub ordered_pairs: usize,
    pub exposures_count: usize,
    pub inspiration: bool,
}

/// `count` distinct values from `0..n` by partial Fisher–Yates.
fn sample_distinct<R: Rng + ?Sized>(n: usize, count: usize, rng: &mut R) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..count {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool
}

fn sample_ordered_pairs(config: &ExperimentConfig, agents: usize) -> Result<Vec<(usize, usize)>> {
    let available = agents.saturating_mul(agents.saturating_sub(1));
    if available < config.ordered_pairs {
        return Err(param(format!(
            "{} ordered pairs requested but {agents} agents only form {available}",
            config.ordered_pairs
        )));
    }
    let mut rng = derive_stream(config.master_seed, &[tags::EXP3, tags::SAMPLE]);
    let mut seen = std::collections::BTreeSet::new();
    let mut pairs = Vec::with_capacity(config.ordered_pairs);
    while pairs.len() < config.ordered_pairs {
        let i = rng.random_range(0..agents);
        let j = rng.random_range(0..agents);
        if i != j && seen.insert((i, j)) {
            pairs.push((i, j));
        }
    }
    Ok(pairs)
}

/// Dyadic exposures with two-way (pair, prompt) fixed effects.
pub fn experiment3_stimulation(
    config: &ExperimentConfig,
    population: &AgentPopulation,
) -> Result<Exp3Report> {
    let pairs = sample_ordered_pairs(config, population.len())?;
    let protocol = config.exposure_protocol();
    let jobs: Vec<(usize, usize, usize, Prompt)> = pairs
        .iter()
        .enumerate()
        .flat_map(|(pair_id, &(source, recipient))| {
            let mut rng = derive_stream(
                config.master_seed,
                &[tags::EXP3, tags::PROMPTS, pair_id as u64],
            );
            sample_distinct(config.n, config.prompts_per_pair, &mut rng)
                .into_iter()
                .map(move |s| (pair_id, source, recipient, s as Prompt))
        })
        .collect();
    let exposures = jobs
        .par_iter()
        .enumerate()
        .map(|(idx, &(pair_id, source_id, recipient_id, prompt))| {
            let slot = idx % config.prompts_per_pair;
            let mut rng = derive_stream(
                config.master_seed,
                &[tags::EXP3, tags::WALK, pair_id as u64, slot as u64],
            );
            run_exposure(
                ExposurePair {
                    pair_id,
                    source_id,
                    recipient_id,
                },
                &population.agents[source_id].graph,
                &population.agents[recipient_id].graph,
                prompt,
                &protocol,
                &mut rng,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let panel: Vec<PanelObservation> = exposures
        .iter()
        .map(|e| PanelObservation {
            y: e.gain_mean,
            x: e.overlap_mean,
            group_a: e.pair_id,
            group_b: e.prompt as usize,
            cluster: e.pair_id,
        })
        .collect();
    let fixed_effects = two_way_fe(&panel)?;
    let res = residualize(&panel)?;
    let sxy: f64 = res.x.iter().zip(&res.y).map(|(a, b)| a * b).sum();
    let sxx: f64 = res.x.iter().map(|a| a * a).sum();
    let bins = config.bins.min(panel.len());
    let binned = quantile_bin_partial(&panel, bins)?
        .into_iter()
        .enumerate()
        .map(|(bin, (x, y))| BinRow {
            bin,
            mean_resid_overlap: x,
            mean_resid_gain: y,
        })
        .collect();
    Ok(Exp3Report {
        residual_slope: sxy / sxx,
        fewer_concepts_per_tenth_overlap: -0.1 * fixed_effects.coefficients[0],
        fixed_effects,
        ordered_pairs: pairs.len(),
        exposures_count: exposures.len(),
        inspiration: config.inspiration,
        exposures,
        binned,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionMean {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exp4Report {
    #[serde(skip)]
    pub instances: Vec<RedundancyInstance>,
    /// Mean paired difference, clustered by the shared source.
    pub difference: RegressionResult,
    pub cohens_dz: f64,
    pub triad: ConditionMean,
    pub control: ConditionMean,
    pub source_pool: usize,
    pub recipient_pool: usize,
}

fn distinct_pair<R: Rng + ?Sized>(pool: &[usize], rng: &mut R) -> Result<(usize, usize)> {
    let first = pool[rng.random_range(0..pool.len())];
    for _ in 0..RETRY_BUDGET {
        let second = pool[rng.random_range(0..pool.len())];
        if second != first {
            return Ok((first, second));
        }
    }
    Err(param(
        "could not draw two distinct agents within the retry budget",
    ))
}

fn pool_size(quantile: f64, agents: usize) -> usize {
    ((quantile * agents as f64).floor() as usize).max(2)
}

/// Matched shared-source vs independent-source redundancy. Sources come
/// from the least modular agents, recipients from the most modular.
pub fn experiment4_redundancy(
    config: &ExperimentConfig,
    population: &AgentPopulation,
) -> Result<Exp4Report> {
    let order = population.ids_by_modularity();
    let n_sources = pool_size(config.source_quantile, order.len());
    let n_recipients = pool_size(config.recipient_quantile, order.len());
    if n_sources + n_recipients > order.len() {
        return Err(param(
            "population too small for disjoint source and recipient pools",
        ));
    }
    let sources = &order[..n_sources];
    let recipients = &order[order.len() - n_recipients..];
    let protocol = config.redundancy_protocol();

    let instances = (0..config.matched_instances)
        .into_par_iter()
        .map(|instance_id| {
            let mut rng: Stream =
                derive_stream(config.master_seed, &[tags::EXP4, instance_id as u64]);
            let (h1, h2) = distinct_pair(sources, &mut rng)?;
            let (a, b) = distinct_pair(recipients, &mut rng)?;
            let prompt = rng.random_range(0..config.n) as Prompt;
            let graph = |id: usize| &population.agents[id].graph;
            run_redundancy_instance(
                RedundancyRoles {
                    instance_id,
                    source1_id: h1,
                    source2_id: h2,
                    recipient_a_id: a,
                    recipient_b_id: b,
                },
                RedundancyGraphs {
                    source1: graph(h1),
                    source2: graph(h2),
                    recipient_a: graph(a),
                    recipient_b: graph(b),
                },
                prompt,
                &protocol,
                &mut rng,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let clusters: Vec<usize> = instances.iter().map(|i| i.source1_id).collect();
    let column = |f: fn(&RedundancyInstance) -> f64| instances.iter().map(f).collect::<Vec<f64>>();
    let deltas = column(|i| i.delta);
    let condition = |values: Vec<f64>| -> Result<ConditionMean> {
        let fit = clustered_mean_test(&values, &clusters)?;
        Ok(ConditionMean {
            mean: fit.coefficients[0],
            ci_low: fit.ci_low[0],
            ci_high: fit.ci_high[0],
        })
    };
    Ok(Exp4Report {
        difference: clustered_mean_test(&deltas, &clusters)?,
        cohens_dz: cohens_dz(&deltas)?,
        triad: condition(column(|i| i.r_triad))?,
        control: condition(column(|i| i.r_control))?,
        source_pool: n_sources,
        recipient_pool: n_recipients,
        instances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exp::linspace;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            graphs_per_p: 4,
            population_size: 60,
            prompts: 5,
            replicates: 5,
            iterations: 4,
            redundancy_iterations: 4,
            ordered_pairs: 40,
            prompts_per_pair: 5,
            matched_instances: 200,
            bootstrap_iters: 200,
            bins: 20,
            ..Default::default()
        }
    }

    fn population(c: &ExperimentConfig) -> AgentPopulation {
        build_population(c, &Layout::population(c)).unwrap()
    }

    #[test]
    fn exp1_layout_and_grid_requirement() {
        let c = tiny();
        let rep = experiment1_modularity_vs_p(&c).unwrap();
        assert_eq!(rep.rows.len(), 15 * 4);
        assert_eq!(rep.grid.len(), 15);
        for (g, point) in rep.grid.iter().enumerate() {
            assert_eq!(point.p, c.p_grid[g]);
            assert!(point.ci_low <= point.mean_q && point.mean_q <= point.ci_high);
        }
        // every p = 0 replicate is the lattice itself
        assert!(rep.rows[..4].iter().all(|r| r.q == rep.rows[0].q));
        assert_eq!(rep.grid[0].ci_low, rep.grid[0].ci_high);

        let short = ExperimentConfig {
            p_grid: linspace(0.0, 1.0, 9),
            ..tiny()
        };
        assert!(experiment1_modularity_vs_p(&short).is_err());
    }

    #[test]
    fn exp2_rows_follow_population() {
        let c = tiny();
        let pop = population(&c);
        let rep = experiment2_breadth_vs_modularity(&c, &pop).unwrap();
        assert_eq!(rep.rows.len(), 60);
        for (row, agent) in rep.rows.iter().zip(&pop.agents) {
            assert_eq!(
                (row.agent_id, row.p, row.q),
                (agent.spec.agent_id, agent.spec.p, agent.q)
            );
            assert!(row.b_hat >= 1.0 && row.b_hat <= 21.0);
            assert!(row.ci_low <= row.b_hat && row.b_hat <= row.ci_high);
        }
        assert_eq!(rep.theil_sen.n_obs, 60);
    }

    #[test]
    fn exp3_design_and_internal_consistency() {
        let c = tiny();
        let pop = population(&c);
        let rep = experiment3_stimulation(&c, &pop).unwrap();
        assert_eq!(rep.exposures.len(), 40 * 5);
        assert_eq!(rep.binned.len(), 20);
        assert_eq!(rep.fixed_effects.n_clusters, Some(40));
        let beta = rep.fixed_effects.coefficients[0];
        assert!((rep.residual_slope - beta).abs() <= 1e-9 * beta.abs().max(1.0));
        assert!((rep.fewer_concepts_per_tenth_overlap + 0.1 * beta).abs() < 1e-12);

        let mut pairs: Vec<(usize, usize)> = rep
            .exposures
            .iter()
            .map(|e| (e.source_id, e.recipient_id))
            .collect();
        assert!(pairs.iter().all(|(s, r)| s != r));
        pairs.dedup();
        assert_eq!(pairs.len(), 40);
        let mut sorted = pairs.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(
            sorted.len(),
            40,
            "ordered pairs are drawn without replacement"
        );
        for chunk in rep.exposures.chunks(5) {
            let mut prompts: Vec<_> = chunk.iter().map(|e| e.prompt).collect();
            prompts.sort();
            prompts.dedup();
            assert_eq!(prompts.len(), 5);
        }
    }

    #[test]
    fn exp3_rejects_impossible_pair_count() {
        let c = ExperimentConfig {
            population_size: 5,
            ordered_pairs: 21,
            ..tiny()
        };
        let pop = population(&c);
        assert!(matches!(
            experiment3_stimulation(&c, &pop),
            Err(crate::Error::Parameter(_))
        ));
        let ok = ExperimentConfig {
            ordered_pairs: 20,
            ..c
        };
        assert_eq!(
            experiment3_stimulation(&ok, &pop).unwrap().ordered_pairs,
            20
        );
    }

    #[test]
    fn exp4_roles_come_from_the_right_pools() {
        let c = tiny();
        let pop = population(&c);
        let rep = experiment4_redundancy(&c, &pop).unwrap();
        assert_eq!((rep.source_pool, rep.recipient_pool), (12, 12));
        assert_eq!(rep.instances.len(), 200);
        let order = pop.ids_by_modularity();
        let (low, high) = (&order[..12], &order[48..]);
        for i in &rep.instances {
            assert_ne!(i.source1_id, i.source2_id);
            assert_ne!(i.recipient_a_id, i.recipient_b_id);
            assert!(low.contains(&i.source1_id) && low.contains(&i.source2_id));
            assert!(high.contains(&i.recipient_a_id) && high.contains(&i.recipient_b_id));
            assert!((-1.0..=1.0).contains(&i.delta));
        }
        let mean_delta = mean(&rep.instances.iter().map(|i| i.delta).collect::<Vec<_>>());
        assert!((rep.difference.coefficients[0] - mean_delta).abs() < 1e-12);
        assert!((rep.triad.mean - rep.control.mean - mean_delta).abs() < 1e-12);
    }

    #[test]
    fn exp4_needs_room_for_both_pools() {
        let c = ExperimentConfig {
            population_size: 3,
            ..tiny()
        };
        let pop = population(&c);
        assert!(experiment4_redundancy(&c, &pop).is_err());
    }

    #[test]
    fn distinct_pair_gives_up() {
        let mut rng = derive_stream(1, &[1]);
        assert!(distinct_pair(&[7, 7], &mut rng).is_err());
        let (a, b) = distinct_pair(&[1, 2], &mut rng).unwrap();
        assert_ne!(a, b);
    }
}
