use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::ExperimentConfig;
use crate::error::Result;
use crate::rng::{derive_stream, tags};
use crate::semgraph::{agent_modularity, generate_substrate, rewire, AgentSpec, ConceptGraph};

/// How rewiring probabilities are assigned to agents.
#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    /// `p_i ~ Uniform(p_range)`, one draw per agent.
    Range { low: f64, high: f64, agents: usize },
    /// Every grid value repeated `per_p` times; agent `g·per_p + r` gets
    /// grid value `g`.
    Grid { p_grid: Vec<f64>, per_p: usize },
}

impl Layout {
    pub fn population(config: &ExperimentConfig) -> Self {
        Layout::Range {
            low: config.p_range[0],
            high: config.p_range[1],
            agents: config.population_size,
        }
    }

    pub fn grid(config: &ExperimentConfig) -> Self {
        Layout::Grid {
            p_grid: config.p_grid.clone(),
            per_p: config.graphs_per_p,
        }
    }

    fn tag(&self) -> u64 {
        match self {
            Layout::Range { .. } => tags::POPULATION,
            Layout::Grid { .. } => tags::EXP1,
        }
    }

    fn len(&self) -> usize {
        match self {
            Layout::Range { agents, .. } => *agents,
            Layout::Grid { p_grid, per_p } => p_grid.len() * per_p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Agent {
    pub spec: AgentSpec,
    #[serde(skip)]
    pub graph: ConceptGraph,
    /// Modularity of the detected partition.
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentPopulation {
    pub substrate: ConceptGraph,
    pub agents: Vec<Agent>,
}

impl AgentPopulation {
    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    /// Agent ids ordered by `(Q, id)` ascending.
    pub fn ids_by_modularity(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.agents.len()).collect();
        ids.sort_by(|&a, &b| {
            self.agents[a]
                .q
                .total_cmp(&self.agents[b].q)
                .then(a.cmp(&b))
        });
        ids
    }
}

/// Builds the shared substrate and one rewired graph per agent. Agent `i`
/// draws its `p` and its rewiring from streams keyed by `i` alone, so the
/// population is identical however the work is scheduled.
pub fn build_population(config: &ExperimentConfig, layout: &Layout) -> Result<AgentPopulation> {
    config.validate()?;
    let substrate = generate_substrate(config.substrate())?;
    let tag = layout.tag();
    let agents = (0..layout.len())
        .into_par_iter()
        .map(|agent_id| {
            let p = match layout {
                Layout::Range { low, high, .. } => {
                    let u: f64 =
                        derive_stream(config.master_seed, &[tag, tags::SAMPLE, agent_id as u64])
                            .random();
                    low + (high - low) * u
                }
                Layout::Grid { p_grid, per_p } => p_grid[agent_id / per_p],
            };
            let stream = vec![tags::AGENT, tag, agent_id as u64];
            let graph = rewire(
                &substrate,
                p,
                &mut derive_stream(config.master_seed, &stream),
            )?;
            let q = agent_modularity(&graph)?;
            Ok(Agent {
                spec: AgentSpec {
                    agent_id,
                    p,
                    stream,
                },
                graph,
                q,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AgentPopulation { substrate, agents })
}
