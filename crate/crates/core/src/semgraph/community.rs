//! Newman–Girvan modularity and Clauset–Newman–Moore greedy agglomeration.

use std::collections::BTreeMap;

use super::{require_edges, ConceptGraph, NodeId};
use crate::error::{param, Result};

/// Assignment of every node to exactly one community `0..community_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunityPartition {
    assignment: Vec<usize>,
    community_count: usize,
}

impl CommunityPartition {
    /// Validates that labels are dense (`0..count` with no gaps).
    pub fn new(assignment: Vec<usize>) -> Result<Self> {
        let community_count = assignment.iter().max().map_or(0, |&c| c + 1);
        let mut used = vec![false; community_count];
        for &c in &assignment {
            used[c] = true;
        }
        if used.iter().any(|&u| !u) {
            return Err(param("community ids must be dense"));
        }
        Ok(Self {
            assignment,
            community_count,
        })
    }

    /// Relabels arbitrary labels densely in order of first appearance.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut map = BTreeMap::new();
        let assignment = labels
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Self {
            assignment,
            community_count: map.len(),
        }
    }

    pub fn single(n: usize) -> Self {
        Self {
            assignment: vec![0; n],
            community_count: usize::from(n > 0),
        }
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            assignment: (0..n).collect(),
            community_count: n,
        }
    }

    pub fn community_of(&self, node: NodeId) -> usize {
        self.assignment[node as usize]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn community_count(&self) -> usize {
        self.community_count
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }
}

/// `Q = Σ_c [ L_c/m − (d_c / 2m)² ]`.
pub fn modularity(graph: &ConceptGraph, partition: &CommunityPartition) -> Result<f64> {
    let m = require_edges(graph)?;
    if partition.len() != graph.node_count() {
        return Err(param(format!(
            "partition covers {} nodes, graph has {}",
            partition.len(),
            graph.node_count()
        )));
    }
    let mut internal = vec![0usize; partition.community_count()];
    let mut degree = vec![0usize; partition.community_count()];
    for u in 0..graph.node_count() as NodeId {
        degree[partition.community_of(u)] += graph.degree(u);
    }
    for (u, v) in graph.edges() {
        let c = partition.community_of(u);
        if c == partition.community_of(v) {
            internal[c] += 1;
        }
    }
    let m = m as f64;
    Ok(internal
        .iter()
        .zip(&degree)
        .map(|(&l, &d)| l as f64 / m - (d as f64 / (2.0 * m)).powi(2))
        .sum())
}

/// Greedy agglomerative modularity maximisation.
///
/// Starts from singletons and repeatedly merges the connected pair with the
/// largest gain until no merge increases `Q`. The gain of merging `i` and `j`
/// is proportional to `2m·l_ij − d_i·d_j` (with `l_ij` the number of edges
/// between them), which is evaluated in exact integer arithmetic so ties
/// are real ties; they go to the lexicographically smallest `(i, j)`.
/// Communities keep the id of their smallest node, and the final labels are
/// assigned in order of smallest member.
pub fn detect_communities(graph: &ConceptGraph) -> Result<CommunityPartition> {
    let m = require_edges(graph)? as i128;
    let n = graph.node_count();

    // links[i][j] = edges between communities i and j (i != j).
    let mut links: Vec<BTreeMap<usize, i128>> = (0..n)
        .map(|u| {
            graph
                .neighbors(u as NodeId)
                .iter()
                .map(|&v| (v as usize, 1))
                .collect()
        })
        .collect();
    let mut degree: Vec<i128> = (0..n).map(|u| graph.degree(u as NodeId) as i128).collect();
    let mut parent: Vec<usize> = (0..n).collect();

    loop {
        let mut best: Option<(i128, usize, usize)> = None;
        for (i, row) in links.iter().enumerate() {
            for (&j, &l) in row.range(i + 1..) {
                let gain = 2 * m * l - degree[i] * degree[j];
                if best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, i, j));
                }
            }
        }
        let Some((gain, keep, absorb)) = best else {
            break;
        };
        if gain <= 0 {
            break;
        }

        let absorbed = std::mem::take(&mut links[absorb]);
        for (t, l) in absorbed {
            if t == keep {
                continue;
            }
            *links[keep].entry(t).or_insert(0) += l;
            let row = &mut links[t];
            row.remove(&absorb);
            *row.entry(keep).or_insert(0) += l;
        }
        links[keep].remove(&absorb);
        degree[keep] += degree[absorb];
        degree[absorb] = 0;
        parent[absorb] = keep;
    }

    // Survivors have the smallest node id of their community, so resolving
    // roots in node order yields labels ordered by smallest member.
    let root = |mut u: usize| {
        while parent[u] != u {
            u = parent[u];
        }
        u
    };
    let roots: Vec<usize> = (0..n).map(root).collect();
    Ok(CommunityPartition::from_labels(&roots))
}

/// `Q` of the greedily detected partition: the modularity of an agent.
pub fn agent_modularity(graph: &ConceptGraph) -> Result<f64> {
    let partition = detect_communities(graph)?;
    modularity(graph, &partition)
}
