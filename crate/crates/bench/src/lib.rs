//! Fixtures shared by the benchmarks.

use rand::Rng;
use semwalk_core::rng::derive_stream;
use semwalk_core::stats::PanelObservation;
use semwalk_core::{generate_substrate, rewire, ConceptGraph, SubstrateSpec};

/// Rewired lattice with 100 concepts and degree 4.
pub fn agent_graph(p: f64, seed: u64) -> ConceptGraph {
    let substrate =
        generate_substrate(SubstrateSpec::new(100, 4).expect("valid size")).expect("substrate");
    rewire(&substrate, p, &mut derive_stream(seed, &[1])).expect("rewire")
}

/// Noisy panel shaped like the exposure design: `pairs × prompts` cells.
pub fn exposure_panel(pairs: usize, prompts: usize, seed: u64) -> Vec<PanelObservation> {
    let mut rng = derive_stream(seed, &[2]);
    let mut out = Vec::with_capacity(pairs * prompts);
    for pair in 0..pairs {
        let shift: f64 = rng.random_range(-2.0..2.0);
        for _ in 0..prompts {
            let prompt = rng.random_range(0..100);
            let x: f64 = rng.random_range(0.0..0.6);
            out.push(PanelObservation {
                y: -5.8 * x + shift + 0.05 * prompt as f64 + rng.random_range(-1.0..1.0),
                x,
                group_a: pair,
                group_b: prompt,
                cluster: pair,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_have_expected_shape() {
        assert_eq!(agent_graph(0.2, 1).edge_count(), 200);
        let panel = exposure_panel(50, 10, 3);
        assert_eq!(panel.len(), 500);
        assert!(
            semwalk_core::stats::two_way_fe(&panel)
                .unwrap()
                .coefficients[0]
                < 0.0
        );
    }
}
