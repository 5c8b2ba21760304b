//! Agent-based model of collective ideation on semantic networks.
//!
//! Agents share a vocabulary and a ring-lattice substrate; each agent's
//! network is a Watts–Strogatz rewiring of that substrate, so a single
//! probability `p` controls how modular the agent's memory is. Agents
//! ideate with fixed-length random walks and inspire each other by
//! exchanging walk traces. The [`exp`] module runs the population
//! experiments and writes their tables.

pub mod error;
pub mod exp;
pub mod ideation;
pub mod rng;
pub mod semgraph;
pub mod social;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use ideation::{
    breadth, expected_breadth, random_walk, BreadthEstimate, IdeationTrace, Prompt, TraceMode,
};
pub use semgraph::{
    agent_modularity, detect_communities, generate_substrate, modularity, rewire, AgentSpec,
    CommunityPartition, ConceptGraph, Neighborhood, NodeId, SubstrateSpec,
};
pub use social::{
    incorporate_edges, incorporate_trace, jaccard, run_exposure, run_redundancy_instance,
    ExposurePair, ExposureRecord, InspiredView, Protocol, RedundancyGraphs, RedundancyInstance,
    RedundancyRoles,
};
