mod common;

use graph_filterbank::filterbank::{verify_pr, FilterDesign, FilterLevel};
use graph_filterbank::fourier::{compute_basis, compute_basis_with_report, BasisOptions, ColumnKind};
use graph_filterbank::{generate, greedy_max_cut, laplacian, Edge, Graph, GraphKind, SamplingPattern};
use nalgebra::DVector;

fn basis_for(g: &Graph, p: &SamplingPattern) -> graph_filterbank::FourierBasis {
    compute_basis(&laplacian(g), p, &BasisOptions::default()).unwrap()
}

#[test]
fn c4_alternating_energies() {
    let g = generate(GraphKind::Ring { n: 4 }, 0).unwrap();
    let b = basis_for(&g, &SamplingPattern::alternating(4).unwrap());
    assert!(common::max_abs_diff(b.energies(), &[0.0, 2.0, 2.0, 4.0]) < 1e-10);
    assert!(b.folding_error() < 1e-12);
}

#[test]
fn path4_hand_computed_basis() {
    let g = generate(GraphKind::Path { n: 4 }, 0).unwrap();
    let p = greedy_max_cut(&laplacian(&g)).unwrap();
    assert_eq!(p.keep_low(), &[1, 3]);
    let b = basis_for(&g, &p);
    let expected = [
        [0.5, 0.5, 0.5, 0.5],
        [0.5, 0.5, -0.5, -0.5],
        [-0.5, 0.5, 0.5, -0.5],
        [-0.5, 0.5, -0.5, 0.5],
    ];
    for (k, col) in expected.iter().enumerate() {
        assert!((b.column(k) - DVector::from_row_slice(col)).amax() < 1e-10, "column {k}");
    }
    assert!(common::max_abs_diff(b.energies(), &[0.0, 1.0, 2.0, 3.0]) < 1e-10);
    assert_eq!((0..4).map(|i| b.phi().partner(i)).collect::<Vec<_>>(), vec![3, 2, 1, 0]);
    assert_eq!(b.origins()[3].kind, ColumnKind::Folded);
}

#[test]
fn even_rings_fold_onto_their_spectrum() {
    for n in [6, 10, 24] {
        let g = generate(GraphKind::Ring { n }, 0).unwrap();
        let b = basis_for(&g, &SamplingPattern::alternating(n).unwrap());
        assert!(common::max_abs_diff(b.energies(), &common::ring_spectrum(n)) < 1e-8, "n={n}");
    }
}

#[test]
fn unbalanced_partition_gives_signed_fixed_point() {
    // |V_H| > |V_L| leaves a subspace on which J = −I.
    let g = Graph::new(3, [Edge { i: 0, j: 1, w: 1.0 }, Edge { i: 1, j: 2, w: 2.0 }]).unwrap();
    let p = SamplingPattern::from_keep_low(3, vec![0]).unwrap();
    let (b, report) = compute_basis_with_report(&laplacian(&g), &p, &BasisOptions::default()).unwrap();
    assert_eq!(report.steps.len(), 1);
    assert_eq!(report.leftover_dim, 1);
    let fixed: Vec<usize> = b.phi().fixed_points().collect();
    assert_eq!(fixed.len(), 1);
    assert_eq!(b.phi().sign(fixed[0]), -1);
    assert!(b.folding_error() < 1e-10);
    for design in [FilterDesign::ConstantHStar(2.0), FilterDesign::ConstantHStar(0.0), FilterDesign::MinimaxHalfBand] {
        let level = FilterLevel::build(g.clone(), &p, &design, &BasisOptions::default()).unwrap();
        assert!(verify_pr(&level).passes(1e-10));
    }
}

#[test]
fn random_graph_basis_invariants() {
    for seed in 0..4 {
        let g = common::rgg(20, seed);
        let l = laplacian(&g);
        let p = greedy_max_cut(&l).unwrap();
        let (b, report) = compute_basis_with_report(&l, &p, &BasisOptions::default()).unwrap();
        assert!(b.orthonormality_error() < 1e-10);
        assert!(b.folding_error() < 1e-8);
        assert!(b.energies().windows(2).all(|w| w[0] <= w[1]));
        assert!(report.steps.iter().all(|s| s.certificate.passes()));
        for k in 0..g.n() {
            let u = b.column(k);
            assert!(((u.transpose() * l.matrix() * &u)[0] - b.energies()[k]).abs() < 1e-10);
        }
    }
}
