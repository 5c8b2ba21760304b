//! Walk-based ideation: a length-`T` unbiased random walk from a prompt,
//! the breadth of what it reaches, and per-agent breadth estimates.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::semgraph::{edge, ConceptGraph, Edge, Neighborhood, NodeId};
use crate::stats::percentile;

/// Prompt concept shared by all agents.
pub type Prompt = NodeId;

/// Which edges of a walk are handed to other agents.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceMode {
    /// Only edges the walk actually traversed.
    #[default]
    Traversed,
    /// Every edge of the walker's graph between two visited nodes.
    Induced,
}

/// Record of one walk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdeationTrace {
    pub prompt: Prompt,
    /// `T + 1` nodes, starting at the prompt.
    pub sequence: Vec<NodeId>,
    /// Distinct visited nodes, sorted.
    pub visited: Vec<NodeId>,
    /// Distinct traversed edges, sorted.
    pub walk_edges: Vec<Edge>,
}

impl IdeationTrace {
    fn from_sequence(sequence: Vec<NodeId>) -> Self {
        let prompt = sequence[0];
        let mut visited = sequence.clone();
        visited.sort_unstable();
        visited.dedup();
        let mut walk_edges: Vec<Edge> = sequence
            .windows(2)
            .filter(|w| w[0] != w[1])
            .map(|w| edge(w[0], w[1]))
            .collect();
        walk_edges.sort_unstable();
        walk_edges.dedup();
        Self {
            prompt,
            sequence,
            visited,
            walk_edges,
        }
    }

    pub fn walk_length(&self) -> usize {
        self.sequence.len() - 1
    }

    /// Edges exchanged with other agents under `mode`. `graph` must be the
    /// graph the walk ran on.
    pub fn exchanged_edges(&self, graph: &ConceptGraph, mode: TraceMode) -> Vec<Edge> {
        match mode {
            TraceMode::Traversed => self.walk_edges.clone(),
            TraceMode::Induced => {
                let mut out = Vec::new();
                for (i, &a) in self.visited.iter().enumerate() {
                    for &b in &self.visited[i + 1..] {
                        if graph.has_edge(a, b) {
                            out.push((a, b));
                        }
                    }
                }
                out
            }
        }
    }
}

/// Debug record `s; n0,n1,...,nT`.
impl fmt::Display for IdeationTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};", self.prompt)?;
        for (i, node) in self.sequence.iter().enumerate() {
            let sep = if i == 0 { " " } else { "," };
            write!(f, "{sep}{node}")?;
        }
        Ok(())
    }
}

impl FromStr for IdeationTrace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad trace record {s:?}"));
        let (prompt, seq) = s.split_once(';').ok_or_else(bad)?;
        let prompt: NodeId = prompt.trim().parse().map_err(|_| bad())?;
        let sequence = seq
            .split(',')
            .map(|t| t.trim().parse::<NodeId>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        if sequence.first() != Some(&prompt) {
            return Err(bad());
        }
        Ok(Self::from_sequence(sequence))
    }
}

/// Simple random walk of `steps` moves from `start`. A node without
/// neighbours holds the walk in place.
pub fn random_walk<G: Neighborhood + ?Sized, R: Rng + ?Sized>(
    graph: &G,
    start: Prompt,
    steps: usize,
    rng: &mut R,
) -> IdeationTrace {
    assert!(
        (start as usize) < graph.node_count(),
        "prompt {start} not in graph"
    );
    let mut sequence = Vec::with_capacity(steps + 1);
    sequence.push(start);
    let mut current = start;
    for _ in 0..steps {
        let row = graph.neighbors(current);
        if row.is_empty() {
            break;
        }
        current = row[rng.random_range(0..row.len())];
        sequence.push(current);
    }
    sequence.resize(steps + 1, current);
    IdeationTrace::from_sequence(sequence)
}

/// Number of distinct concepts a walk reached.
pub fn breadth(trace: &IdeationTrace) -> usize {
    trace.visited.len()
}

/// Mean breadth over sampled prompts and walk replicates, with a bootstrap
/// interval over prompts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreadthEstimate {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub prompts_used: usize,
    pub replicates_per_prompt: usize,
    pub bootstrap_iters: usize,
}

/// Samples `prompts` prompts uniformly with replacement, averages the
/// breadth of `replicates` walks per prompt, and reports the 2.5/97.5
/// percentiles of the mean over prompt resamples.
pub fn expected_breadth<R: Rng + ?Sized>(
    graph: &ConceptGraph,
    steps: usize,
    prompts: usize,
    replicates: usize,
    rng: &mut R,
    bootstrap_iters: usize,
) -> Result<BreadthEstimate> {
    if prompts == 0 || replicates == 0 {
        return Err(param("need at least one prompt and one replicate"));
    }
    if bootstrap_iters < 100 {
        return Err(param(format!(
            "bootstrap_iters must be >= 100, got {bootstrap_iters}"
        )));
    }
    let n = graph.node_count();
    if n == 0 {
        return Err(param("graph has no nodes"));
    }
    let sampled: Vec<Prompt> = (0..prompts)
        .map(|_| rng.random_range(0..n) as Prompt)
        .collect();
    let per_prompt: Vec<f64> = sampled
        .iter()
        .map(|&s| {
            let total: usize = (0..replicates)
                .map(|_| breadth(&random_walk(graph, s, steps, rng)))
                .sum();
            total as f64 / replicates as f64
        })
        .collect();
    let mean = per_prompt.iter().sum::<f64>() / prompts as f64;

    let mut resampled = Vec::with_capacity(bootstrap_iters);
    for _ in 0..bootstrap_iters {
        let total: f64 = (0..prompts)
            .map(|_| per_prompt[rng.random_range(0..prompts)])
            .sum();
        resampled.push(total / prompts as f64);
    }
    resampled.sort_by(f64::total_cmp);
    // Percentiles of a skewed resample distribution can sit on one side of
    // the point estimate; the interval is widened to include it.
    let ci_low = percentile(&resampled, 2.5).min(mean);
    let ci_high = percentile(&resampled, 97.5).max(mean);
    Ok(BreadthEstimate {
        mean,
        ci_low,
        ci_high,
        prompts_used: prompts,
        replicates_per_prompt: replicates,
        bootstrap_iters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;
    use crate::semgraph::{generate_substrate, rewire, SubstrateSpec};
    use proptest::prelude::*;

    fn complete(n: u32) -> ConceptGraph {
        let edges = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b)));
        ConceptGraph::from_edges(n as usize, edges).unwrap()
    }

    #[test]
    fn zero_steps() {
        let g = complete(5);
        let t = random_walk(&g, 3, 0, &mut derive_stream(0, &[0]));
        assert_eq!(t.sequence, vec![3]);
        assert_eq!(t.visited, vec![3]);
        assert!(t.walk_edges.is_empty());
        assert_eq!(breadth(&t), 1);
    }

    #[test]
    fn forced_alternation() {
        let g = ConceptGraph::from_edges(2, [(0, 1)]).unwrap();
        let t = random_walk(&g, 0, 5, &mut derive_stream(0, &[0]));
        assert_eq!(t.sequence, vec![0, 1, 0, 1, 0, 1]);
        assert_eq!(t.walk_edges, vec![(0, 1)]);
        assert_eq!(breadth(&t), 2);
    }

    #[test]
    fn isolated_prompt_stays_put() {
        let g = ConceptGraph::from_edges(3, [(0, 1)]).unwrap();
        let t = random_walk(&g, 2, 4, &mut derive_stream(0, &[0]));
        assert_eq!(t.sequence, vec![2; 5]);
        assert_eq!(breadth(&t), 1);
    }

    #[test]
    fn triangle_bound() {
        let g = complete(3);
        let t = random_walk(&g, 0, 10, &mut derive_stream(4, &[0]));
        assert!(breadth(&t) <= 3);
    }

    #[test]
    fn single_edge_breadth_is_exact() {
        let g = ConceptGraph::from_edges(2, [(0, 1)]).unwrap();
        let est = expected_breadth(&g, 3, 20, 5, &mut derive_stream(1, &[1]), 200).unwrap();
        assert_eq!(est.mean, 2.0);
        assert_eq!((est.ci_low, est.ci_high), (2.0, 2.0));
    }

    #[test]
    fn complete_graph_breadth_below_cap_and_grows_with_t() {
        let g = complete(30);
        let mut rng = derive_stream(2, &[2]);
        let mut last = 0.0;
        for t in [2, 5, 10, 40, 200] {
            let est = expected_breadth(&g, t, 10, 10, &mut rng, 100).unwrap();
            assert!(est.mean <= (t + 1).min(30) as f64);
            assert!(est.mean >= last);
            last = est.mean;
        }
        assert!(last > 29.0);
    }

    #[test]
    fn parameter_errors() {
        let g = complete(4);
        let mut rng = derive_stream(0, &[0]);
        assert!(expected_breadth(&g, 5, 0, 1, &mut rng, 100).is_err());
        assert!(expected_breadth(&g, 5, 1, 0, &mut rng, 100).is_err());
        assert!(expected_breadth(&g, 5, 1, 1, &mut rng, 99).is_err());
    }

    #[test]
    fn estimates_are_deterministic() {
        let g0 = generate_substrate(SubstrateSpec::new(100, 4).unwrap()).unwrap();
        let g = rewire(&g0, 0.2, &mut derive_stream(1, &[0])).unwrap();
        let a = expected_breadth(&g, 20, 20, 30, &mut derive_stream(8, &[3]), 1000).unwrap();
        let b = expected_breadth(&g, 20, 20, 30, &mut derive_stream(8, &[3]), 1000).unwrap();
        assert_eq!(a, b);
        assert!(a.ci_low <= a.mean && a.mean <= a.ci_high);
    }

    #[test]
    fn trace_record_round_trip() {
        let g0 = generate_substrate(SubstrateSpec::new(20, 4).unwrap()).unwrap();
        let t = random_walk(&g0, 7, 6, &mut derive_stream(0, &[5]));
        let text = t.to_string();
        assert!(text.starts_with("7; 7,"));
        assert_eq!(text.parse::<IdeationTrace>().unwrap(), t);
        assert!("3; 4,5".parse::<IdeationTrace>().is_err());
        assert!("x; 1".parse::<IdeationTrace>().is_err());
    }

    #[test]
    fn induced_edges_superset_of_traversed() {
        let g = complete(6);
        let t = random_walk(&g, 0, 4, &mut derive_stream(1, &[9]));
        let induced = t.exchanged_edges(&g, TraceMode::Induced);
        let v = t.visited.len();
        assert_eq!(induced.len(), v * (v - 1) / 2);
        assert!(t.walk_edges.iter().all(|e| induced.contains(e)));
    }

    proptest! {
        #[test]
        fn trace_invariants(n in 5usize..40, p in 0.0f64..1.0, steps in 0usize..60, seed: u64) {
            let g0 = generate_substrate(SubstrateSpec::new(n, 4.min(n - 1) & !1).unwrap()).unwrap();
            let g = rewire(&g0, p, &mut derive_stream(seed, &[0])).unwrap();
            let start = (seed % n as u64) as Prompt;
            let t = random_walk(&g, start, steps, &mut derive_stream(seed, &[1]));
            prop_assert_eq!(t.sequence.len(), steps + 1);
            prop_assert_eq!(t.sequence[0], start);
            for w in t.sequence.windows(2) {
                prop_assert!(g.has_edge(w[0], w[1]));
            }
            prop_assert!(t.walk_edges.len() <= steps);
            prop_assert!(t.walk_edges.iter().all(|&(a, b)| g.has_edge(a, b)));
            let component = g.component_of(start).len();
            prop_assert!(breadth(&t) <= (steps + 1).min(component));
        }
    }
}
