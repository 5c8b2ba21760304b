//! Social exchange of ideation traces: incorporation of a partner's trace,
//! dyadic exposures, and the matched shared-source / independent-source
//! comparison.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{degenerate, param, Result};
use crate::ideation::{random_walk, IdeationTrace, Prompt, TraceMode};
use crate::rng::Stream;
use crate::semgraph::{ConceptGraph, Edge, Neighborhood, NodeId};

/// `|a ∩ b| / |a ∪ b|` for sorted, deduplicated node lists.
pub fn jaccard(a: &[NodeId], b: &[NodeId]) -> Result<f64> {
    if a.is_empty() && b.is_empty() {
        return Err(degenerate("jaccard of two empty sets"));
    }
    let shared = intersection_size(a, b);
    Ok(shared as f64 / (a.len() + b.len() - shared) as f64)
}

fn intersection_size(a: &[NodeId], b: &[NodeId]) -> usize {
    let (mut i, mut j, mut shared) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                shared += 1;
                i += 1;
                j += 1;
            }
        }
    }
    shared
}

/// Number of elements of sorted `a` missing from sorted `b`.
fn difference_size(a: &[NodeId], b: &[NodeId]) -> usize {
    a.len() - intersection_size(a, b)
}

/// Recipient graph plus every trace edge it lacks. The node set is
/// unchanged and the input is left untouched.
pub fn incorporate_edges(recipient: &ConceptGraph, edges: &[Edge]) -> ConceptGraph {
    let mut out = recipient.clone();
    for &(a, b) in edges {
        out.insert_edge(a, b);
    }
    out
}

/// Recipient graph seen through a set of added edges, without copying it.
/// Rows are identical to those of [`incorporate_edges`], so walks on the
/// view and on the materialized graph agree draw for draw.
#[derive(Debug, Clone)]
pub struct InspiredView<'a> {
    base: &'a ConceptGraph,
    /// Merged rows of touched nodes, sorted by node.
    rows: Vec<(NodeId, Vec<NodeId>)>,
}

impl<'a> InspiredView<'a> {
    pub fn new(base: &'a ConceptGraph, edges: &[Edge]) -> Self {
        let mut added: Vec<(NodeId, NodeId)> = edges
            .iter()
            .filter(|&&(a, b)| a != b && !base.has_edge(a, b))
            .flat_map(|&(a, b)| [(a, b), (b, a)])
            .collect();
        added.sort_unstable();
        added.dedup();
        let mut rows: Vec<(NodeId, Vec<NodeId>)> = Vec::new();
        for (node, other) in added {
            if rows.last().map(|(last, _)| *last) != Some(node) {
                rows.push((node, base.neighbors(node).to_vec()));
            }
            let row = &mut rows.last_mut().expect("row for node").1;
            let pos = row.binary_search(&other).unwrap_err();
            row.insert(pos, other);
        }
        Self { base, rows }
    }

    pub fn unchanged(base: &'a ConceptGraph) -> Self {
        Self {
            base,
            rows: Vec::new(),
        }
    }

    pub fn materialize(&self) -> ConceptGraph {
        let mut out = self.base.clone();
        for (node, row) in &self.rows {
            for &other in row {
                if *node < other {
                    out.insert_edge(*node, other);
                }
            }
        }
        out
    }
}

impl Neighborhood for InspiredView<'_> {
    fn node_count(&self) -> usize {
        self.base.node_count()
    }

    fn neighbors(&self, node: NodeId) -> &[NodeId] {
        match self.rows.binary_search_by_key(&node, |(n, _)| *n) {
            Ok(i) => &self.rows[i].1,
            Err(_) => self.base.neighbors(node),
        }
    }
}

/// Incorporates the edges a walk traversed.
pub fn incorporate_trace(recipient: &ConceptGraph, source_trace: &IdeationTrace) -> ConceptGraph {
    incorporate_edges(recipient, &source_trace.walk_edges)
}

/// Walk settings shared by every social protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Protocol {
    pub walk_length: usize,
    /// Independent walk iterations averaged into one record.
    pub iterations: usize,
    pub trace_mode: TraceMode,
    /// When false, incorporation is a no-op (ablation).
    pub inspiration: bool,
}

impl Protocol {
    pub fn new(walk_length: usize, iterations: usize) -> Self {
        Self {
            walk_length,
            iterations,
            trace_mode: TraceMode::Traversed,
            inspiration: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(param("iterations must be >= 1"));
        }
        Ok(())
    }

    fn inspired<'g>(
        &self,
        recipient: &'g ConceptGraph,
        source: &ConceptGraph,
        trace: &IdeationTrace,
    ) -> InspiredView<'g> {
        if self.inspiration {
            InspiredView::new(recipient, &trace.exchanged_edges(source, self.trace_mode))
        } else {
            InspiredView::unchanged(recipient)
        }
    }
}

/// Identity of an ordered exposure `source → recipient`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExposurePair {
    pub pair_id: usize,
    pub source_id: usize,
    pub recipient_id: usize,
}

/// Iteration-averaged outcome of one `(source → recipient, prompt)` exposure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureRecord {
    pub pair_id: usize,
    pub source_id: usize,
    pub recipient_id: usize,
    pub prompt: Prompt,
    pub overlap_mean: f64,
    pub gain_mean: f64,
    #[serde(skip)]
    pub iterations: usize,
}

/// Per iteration: the source walks; the recipient walks independently;
/// overlap is the Jaccard similarity of the two visited sets; the recipient
/// incorporates the source trace and walks again; gain counts concepts in
/// the second walk that its own first walk missed.
pub fn run_exposure<R: Rng + ?Sized>(
    pair: ExposurePair,
    source: &ConceptGraph,
    recipient: &ConceptGraph,
    prompt: Prompt,
    protocol: &Protocol,
    rng: &mut R,
) -> Result<ExposureRecord> {
    protocol.validate()?;
    let steps = protocol.walk_length;
    let (mut overlap_sum, mut gain_sum) = (0.0, 0usize);
    for _ in 0..protocol.iterations {
        let source_trace = random_walk(source, prompt, steps, rng);
        let first = random_walk(recipient, prompt, steps, rng);
        overlap_sum += jaccard(&source_trace.visited, &first.visited)?;
        let inspired = protocol.inspired(recipient, source, &source_trace);
        let second = random_walk(&inspired, prompt, steps, rng);
        gain_sum += difference_size(&second.visited, &first.visited);
    }
    let iters = protocol.iterations as f64;
    Ok(ExposureRecord {
        pair_id: pair.pair_id,
        source_id: pair.source_id,
        recipient_id: pair.recipient_id,
        prompt,
        overlap_mean: overlap_sum / iters,
        gain_mean: gain_sum as f64 / iters,
        iterations: protocol.iterations,
    })
}

/// Agents taking part in one matched comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedundancyRoles {
    pub instance_id: usize,
    pub source1_id: usize,
    pub source2_id: usize,
    pub recipient_a_id: usize,
    pub recipient_b_id: usize,
}

/// Matched shared-source (triad) vs independent-source (control) outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedundancyInstance {
    pub instance_id: usize,
    pub source1_id: usize,
    pub source2_id: usize,
    pub recipient_a_id: usize,
    pub recipient_b_id: usize,
    pub prompt: Prompt,
    pub r_triad: f64,
    pub r_control: f64,
    pub delta: f64,
}

/// Graphs of the four agents in a redundancy instance.
#[derive(Debug, Clone, Copy)]
pub struct RedundancyGraphs<'a> {
    pub source1: &'a ConceptGraph,
    pub source2: &'a ConceptGraph,
    pub recipient_a: &'a ConceptGraph,
    pub recipient_b: &'a ConceptGraph,
}

/// Runs the matched comparison. Per iteration, source 1 walks once and its
/// trace goes to recipient `a` in both arms. In the triad arm `b` receives
/// the same trace; in the control arm `b` receives the trace of an
/// independent walk by source 2. Each recipient's second walk replays the
/// same random stream in both arms, so the arms differ only in `b`'s
/// inspiration source. Redundancy is the Jaccard similarity of the two
/// recipients' second-walk visited sets.
pub fn run_redundancy_instance<R: Rng + ?Sized>(
    roles: RedundancyRoles,
    graphs: RedundancyGraphs<'_>,
    prompt: Prompt,
    protocol: &Protocol,
    rng: &mut R,
) -> Result<RedundancyInstance> {
    protocol.validate()?;
    let steps = protocol.walk_length;
    let (mut triad_sum, mut control_sum) = (0.0, 0.0);
    for _ in 0..protocol.iterations {
        let tau1 = random_walk(graphs.source1, prompt, steps, rng);
        let tau2 = random_walk(graphs.source2, prompt, steps, rng);
        let walk_a = Stream::from_seed(rng.random());
        let walk_b = Stream::from_seed(rng.random());

        let a_inspired = protocol.inspired(graphs.recipient_a, graphs.source1, &tau1);
        let a_second = random_walk(&a_inspired, prompt, steps, &mut walk_a.clone());

        let b_triad = protocol.inspired(graphs.recipient_b, graphs.source1, &tau1);
        let b_triad_second = random_walk(&b_triad, prompt, steps, &mut walk_b.clone());
        let b_control = protocol.inspired(graphs.recipient_b, graphs.source2, &tau2);
        let b_control_second = random_walk(&b_control, prompt, steps, &mut walk_b.clone());

        triad_sum += jaccard(&a_second.visited, &b_triad_second.visited)?;
        control_sum += jaccard(&a_second.visited, &b_control_second.visited)?;
    }
    let iters = protocol.iterations as f64;
    let r_triad = triad_sum / iters;
    let r_control = control_sum / iters;
    Ok(RedundancyInstance {
        instance_id: roles.instance_id,
        source1_id: roles.source1_id,
        source2_id: roles.source2_id,
        recipient_a_id: roles.recipient_a_id,
        recipient_b_id: roles.recipient_b_id,
        prompt,
        r_triad,
        r_control,
        delta: r_triad - r_control,
    })
}
