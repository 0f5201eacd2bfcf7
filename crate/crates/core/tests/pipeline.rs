//! End-to-end pipeline through the public API only: seed graph,
//! refinement, partition, boundary dynamics, conjugacy, parameter
//! cell. Guards against the pieces drifting apart or APIs going
//! private.

use num_complex::Complex64;
use sphere_markov::embedded_graph::builders;
use sphere_markov::invariant_graph::{refine_to_invariant, IterationConfig};
use sphere_markov::markov::{build_partition, entropy, usize_matrix};
use sphere_markov::numerics::RationalMap;
use sphere_markov::param_space::{cell_address, FamilySpec};
use sphere_markov::pullback::graph_preimage;
use sphere_markov::regularity::{boundary_interval_system, qs_conjugacy, qs_norm_estimate};

#[test]
fn seed_to_partition_to_boundary_dynamics() {
    let f = RationalMap::monic_plus_c(2, Complex64::new(0.0, 0.0)).unwrap();
    let seed = builders::ellipse(0.9, 1.1, 2, 64).unwrap();
    let refined = refine_to_invariant(&f, &seed, &IterationConfig::default())
        .unwrap()
        .graph;

    // One pullback of the refined graph still carries a partition.
    let pre = graph_preimage(&f, &refined).unwrap();
    assert!(pre.edges().len() >= refined.edges().len());

    let part = build_partition(&f, &refined).unwrap();
    assert_eq!(part.face_matrix.len(), 2);
    let h = entropy(&usize_matrix(&part.edge_matrix)).unwrap();
    assert!((h - 2.0f64.ln()).abs() < 1e-9, "entropy {h}");

    // Boundary dynamics conjugates to itself with unit distortion.
    let sys = boundary_interval_system(&f, &part).unwrap();
    let conj = qs_conjugacy(&sys, &sys).unwrap();
    assert!((qs_norm_estimate(&conj) - 1.0).abs() < 1e-9);
}

#[test]
fn quadratic_cell_address_of_the_base() {
    let fam = FamilySpec::quadratic(5e-3).unwrap();
    let cfg = IterationConfig {
        eps_invariant: 5e-3,
        sample_step: 5e-3,
        ..IterationConfig::default()
    };
    let desc = cell_address(&fam, Complex64::new(0.0, 0.0), 2, &cfg).unwrap();
    let text = desc.to_string();
    assert!(text.starts_with("F1"), "descriptor {text}");
    assert_eq!(text.matches('.').count(), 1, "two levels: {text}");
}
