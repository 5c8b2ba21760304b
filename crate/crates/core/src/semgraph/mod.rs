//! Semantic networks: the shared ring-lattice substrate, Watts–Strogatz
//! rewiring, and the modularity measurements taken on the result.

mod community;
mod io;

pub use community::{agent_modularity, detect_communities, modularity, CommunityPartition};
pub use io::{read_edge_list, write_edge_list, EdgeListHeader};

use std::collections::VecDeque;

use rand::Rng;

use crate::error::{degenerate, param, Result};

/// Node identifier in the shared vocabulary `0..n`.
pub type NodeId = u32;

/// Undirected edge stored with `u < v`.
pub type Edge = (NodeId, NodeId);

/// Canonical form of an undirected pair.
#[inline]
pub fn edge(a: NodeId, b: NodeId) -> Edge {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Read access to sorted adjacency rows, enough to run a walk.
pub trait Neighborhood {
    fn node_count(&self) -> usize;
    fn neighbors(&self, node: NodeId) -> &[NodeId];
}

impl Neighborhood for ConceptGraph {
    #[inline]
    fn node_count(&self) -> usize {
        ConceptGraph::node_count(self)
    }

    #[inline]
    fn neighbors(&self, node: NodeId) -> &[NodeId] {
        ConceptGraph::neighbors(self, node)
    }
}

/// Undirected simple graph on the fixed node set `0..n`.
///
/// The adjacency lists are kept sorted, so neighbour order (and therefore
/// every random walk) depends only on the edge set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptGraph {
    adjacency: Vec<Vec<NodeId>>,
    edge_count: usize,
}

impl ConceptGraph {
    /// Graph on `n` nodes with no edges.
    pub fn empty(n: usize) -> Self {
        Self {
            adjacency: vec![Vec::new(); n],
            edge_count: 0,
        }
    }

    /// Builds a graph from an edge list, rejecting self-loops, duplicates
    /// and out-of-range ids.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let mut graph = Self::empty(n);
        for (a, b) in edges {
            if a == b {
                return Err(param(format!("self-loop on node {a}")));
            }
            if a as usize >= n || b as usize >= n {
                return Err(param(format!("edge ({a}, {b}) outside 0..{n}")));
            }
            if !graph.insert_edge(a, b) {
                return Err(param(format!("duplicate edge ({a}, {b})")));
            }
        }
        Ok(graph)
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Sorted neighbours of `node`.
    #[inline]
    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.adjacency[node as usize]
    }

    #[inline]
    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency[node as usize].len()
    }

    #[inline]
    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.adjacency[a as usize].binary_search(&b).is_ok()
    }

    /// Adds `{a, b}`; returns false if it was already present.
    pub(crate) fn insert_edge(&mut self, a: NodeId, b: NodeId) -> bool {
        debug_assert_ne!(a, b);
        let row = &mut self.adjacency[a as usize];
        match row.binary_search(&b) {
            Ok(_) => false,
            Err(pos) => {
                row.insert(pos, b);
                let other = &mut self.adjacency[b as usize];
                let pos = other.binary_search(&a).unwrap_err();
                other.insert(pos, a);
                self.edge_count += 1;
                true
            }
        }
    }

    fn remove_edge(&mut self, a: NodeId, b: NodeId) -> bool {
        let Ok(pos) = self.adjacency[a as usize].binary_search(&b) else {
            return false;
        };
        self.adjacency[a as usize].remove(pos);
        let pos = self.adjacency[b as usize]
            .binary_search(&a)
            .expect("adjacency must be symmetric");
        self.adjacency[b as usize].remove(pos);
        self.edge_count -= 1;
        true
    }

    /// All edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, row)| {
            let u = u as NodeId;
            row.iter().filter(move |&&v| v > u).map(move |&v| (u, v))
        })
    }

    /// Local clustering coefficient of `node` (0 for degree below 2).
    pub fn local_clustering(&self, node: NodeId) -> f64 {
        let row = self.neighbors(node);
        let d = row.len();
        if d < 2 {
            return 0.0;
        }
        let mut links = 0usize;
        for (i, &a) in row.iter().enumerate() {
            for &b in &row[i + 1..] {
                if self.has_edge(a, b) {
                    links += 1;
                }
            }
        }
        links as f64 / (d * (d - 1) / 2) as f64
    }

    /// Nodes reachable from `start`, sorted.
    pub fn component_of(&self, start: NodeId) -> Vec<NodeId> {
        let mut seen = vec![false; self.node_count()];
        let mut out = self.bfs(start, &mut seen);
        out.sort_unstable();
        out
    }

    fn bfs(&self, start: NodeId, seen: &mut [bool]) -> Vec<NodeId> {
        let mut queue = VecDeque::from([start]);
        seen[start as usize] = true;
        let mut out = Vec::new();
        while let Some(u) = queue.pop_front() {
            out.push(u);
            for &v in self.neighbors(u) {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    queue.push_back(v);
                }
            }
        }
        out
    }

    /// Maximal connected components, each sorted, listed by smallest member.
    pub fn connected_components(&self) -> Vec<Vec<NodeId>> {
        let mut seen = vec![false; self.node_count()];
        let mut components = Vec::new();
        for start in 0..self.node_count() as NodeId {
            if !seen[start as usize] {
                let mut comp = self.bfs(start, &mut seen);
                comp.sort_unstable();
                components.push(comp);
            }
        }
        components
    }
}

/// Ring-lattice parameters: `n` nodes each joined to its `k` nearest
/// neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SubstrateSpec {
    pub n: usize,
    pub k: usize,
}

impl SubstrateSpec {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        let spec = Self { n, k };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(param(format!("substrate needs n >= 3, got {}", self.n)));
        }
        if self.k < 2 || !self.k.is_multiple_of(2) {
            return Err(param(format!("k must be even and >= 2, got {}", self.k)));
        }
        if self.k >= self.n {
            return Err(param(format!(
                "k = {} must be below n = {}",
                self.k, self.n
            )));
        }
        Ok(())
    }

    pub fn edge_count(&self) -> usize {
        self.n * self.k / 2
    }
}

/// One agent's construction recipe.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AgentSpec {
    pub agent_id: usize,
    pub p: f64,
    /// Labels of the random stream the agent's graph is rewired with.
    pub stream: Vec<u64>,
}

/// Ring lattice where node `i` is adjacent to `i ± 1, …, i ± k/2 (mod n)`.
pub fn generate_substrate(spec: SubstrateSpec) -> Result<ConceptGraph> {
    spec.validate()?;
    let n = spec.n;
    let mut graph = ConceptGraph::empty(n);
    for u in 0..n {
        for offset in 1..=spec.k / 2 {
            graph.insert_edge(u as NodeId, ((u + offset) % n) as NodeId);
        }
    }
    debug_assert_eq!(graph.edge_count(), spec.edge_count());
    Ok(graph)
}

/// Watts–Strogatz rewiring of a ring lattice.
///
/// Lattice edges are visited by near endpoint `u`, then offset `1..=k/2`.
/// With probability `p` the far endpoint is replaced by a uniform node,
/// redrawing on self-loops and duplicates up to `n` times before leaving the
/// edge in place. Each node keeps the `k/2` edges it is the near endpoint
/// of, so degrees never drop below `k/2`.
pub fn rewire<R: Rng + ?Sized>(
    substrate: &ConceptGraph,
    p: f64,
    rng: &mut R,
) -> Result<ConceptGraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(param(format!("rewiring probability {p} outside [0, 1]")));
    }
    let n = substrate.node_count();
    let k = if n == 0 { 0 } else { substrate.degree(0) };
    SubstrateSpec { n, k }.validate()?;
    let is_lattice = (0..n).all(|u| {
        substrate.degree(u as NodeId) == k
            && (1..=k / 2).all(|o| substrate.has_edge(u as NodeId, ((u + o) % n) as NodeId))
    });
    if !is_lattice {
        return Err(param("rewiring expects a ring-lattice substrate"));
    }
    let mut graph = substrate.clone();
    for u in 0..n {
        let u = u as NodeId;
        for offset in 1..=k / 2 {
            let far = ((u as usize + offset) % n) as NodeId;
            if rng.random::<f64>() >= p {
                continue;
            }
            for _ in 0..n {
                let target = rng.random_range(0..n) as NodeId;
                if target == u || graph.has_edge(u, target) {
                    continue;
                }
                if graph.remove_edge(u, far) {
                    graph.insert_edge(u, target);
                }
                break;
            }
        }
    }
    Ok(graph)
}

/// Rejects graphs without edges for measures normalised by `m`.
pub(crate) fn require_edges(graph: &ConceptGraph) -> Result<usize> {
    match graph.edge_count() {
        0 => Err(degenerate("graph has no edges")),
        m => Ok(m),
    }
}
