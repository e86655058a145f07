mod common;

use graph_filterbank::filterbank::{design_from_hstar, design_minimax, quartet, verify_pr, FilterLevel, FilterVector};
use graph_filterbank::fourier::{compute_basis_with_report, BasisOptions, ColumnKind};
use graph_filterbank::graph::dirichlet_energy;
use graph_filterbank::multires::{keep_top_k, kron_reduce, threshold_highpass, CoefficientTree, ThresholdRule};
use graph_filterbank::qecqp::{oracle_min, QecqpProblem};
use graph_filterbank::sampling::{cut_value, cut_value_quadratic, downsample, upsample, Channel};
use graph_filterbank::{greedy_max_cut, laplacian, parse_graph, write_edge_list, Edge, Graph, Signal};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

/// Random spanning tree plus extra edges, weights in [0.1, 3).
fn random_graph(n: usize, extra: f64, seed: u64) -> Graph {
    let mut rng = common::rng(seed);
    let mut edges = Vec::new();
    let mut present = vec![vec![false; n]; n];
    for v in 1..n {
        let u = rng.gen_range(0..v);
        present[u][v] = true;
        edges.push(Edge { i: u, j: v, w: rng.gen_range(0.1..3.0) });
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if !present[i][j] && rng.gen_bool(extra) {
                edges.push(Edge { i, j, w: rng.gen_range(0.1..3.0) });
            }
        }
    }
    Graph::new(n, edges).unwrap()
}

fn graphs(max_n: usize) -> impl Strategy<Value = Graph> {
    (3..=max_n, 0.0..0.6f64, any::<u64>()).prop_map(|(n, extra, seed)| random_graph(n, extra, seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn laplacian_rows_sum_to_zero(g in graphs(14)) {
        let l = laplacian(&g);
        let scale = l.matrix().amax();
        prop_assert!(l.max_row_sum_residual() <= 1e-12 * scale);
    }

    #[test]
    fn dirichlet_energy_matches_double_sum(g in graphs(12), seed in any::<u64>()) {
        let l = laplacian(&g);
        let mut rng = common::rng(seed);
        let w = g.adjacency();
        for _ in 0..20 {
            let f = common::random_signal(g.n(), &mut rng);
            let e = dirichlet_energy(&l, &f).unwrap();
            let v = f.values();
            let mut double = 0.0;
            for i in 0..g.n() {
                for j in 0..g.n() {
                    double += w[(i, j)] * (v[i] - v[j]).powi(2);
                }
            }
            prop_assert!(e >= 0.0);
            prop_assert!((e - 0.5 * double).abs() <= 1e-10 * (1.0 + e));
        }
        let constant = Signal::new(DVector::from_element(g.n(), 3.7));
        prop_assert!(dirichlet_energy(&l, &constant).unwrap().abs() <= 1e-12 * l.matrix().amax() * g.n() as f64 * 14.0);
    }

    #[test]
    fn edge_list_round_trip(g in graphs(12)) {
        let (back, signal) = parse_graph(&write_edge_list(&g, None)).unwrap();
        prop_assert!(signal.is_none());
        prop_assert_eq!(back.edges(), g.edges());
    }

    #[test]
    fn greedy_cut_equals_quadratic_form(g in graphs(14)) {
        let l = laplacian(&g);
        let p = greedy_max_cut(&l).unwrap();
        let a = cut_value(&g, &p).unwrap();
        let b = cut_value_quadratic(&l, &p).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
        prop_assert!(!p.keep_low().is_empty() && !p.keep_high().is_empty());
    }

    #[test]
    fn sampling_round_trip(g in graphs(12), seed in any::<u64>()) {
        let p = greedy_max_cut(&laplacian(&g)).unwrap();
        let f = common::random_signal(g.n(), &mut common::rng(seed));
        let lo = upsample(&downsample(&f, &p, Channel::Low).unwrap(), &p, Channel::Low).unwrap();
        let hi = upsample(&downsample(&f, &p, Channel::High).unwrap(), &p, Channel::High).unwrap();
        prop_assert_eq!(lo.into_vector() + hi.into_vector(), f.into_vector());
    }

    #[test]
    fn kron_reduction_is_a_laplacian(g in graphs(12), seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let n = g.n();
        let size = rng.gen_range(1..n);
        let mut keep: Vec<usize> = (0..n).collect();
        for i in 0..n {
            let j = rng.gen_range(i..n);
            keep.swap(i, j);
        }
        keep.truncate(size);
        let k = kron_reduce(&laplacian(&g), &keep).unwrap();
        let m = k.matrix();
        let scale = m.amax().max(1e-300);
        prop_assert!(k.max_row_sum_residual() <= 1e-10 * scale);
        for i in 0..size {
            for j in 0..size {
                if i != j {
                    prop_assert!(m[(i, j)] <= 1e-10);
                }
            }
        }
        let eig = graph_filterbank::linalg::sym_eigenvalues(m).unwrap();
        prop_assert!(eig[0] >= -1e-10 * scale);
        if size > 1 {
            prop_assert!(eig[1] > 1e-12 * scale, "reduced graph disconnected");
        }
    }

    #[test]
    fn top_k_and_threshold_properties(values in prop::collection::vec(-5.0..5.0f64, 3..30), split in 1usize..3) {
        let cut = (values.len() / (split + 1)).max(1);
        let t = CoefficientTree {
            lows: Signal::from(values[..cut].to_vec()),
            highs: vec![Signal::from(values[cut..].to_vec())],
        };
        prop_assert_eq!(threshold_highpass(&t, f64::INFINITY, ThresholdRule::ZeroAbove).unwrap(), t.clone());
        prop_assert_eq!(keep_top_k(&t, t.len()).unwrap(), t.clone());
        let mut prev = f64::INFINITY;
        for k in 1..=t.len() {
            let kept = keep_top_k(&t, k).unwrap();
            let nonzero = kept.lows.values().iter().chain(kept.highs[0].values()).filter(|v| **v != 0.0).count();
            prop_assert!(nonzero <= k);
            let residual: f64 = t.lows.values().iter().zip(kept.lows.values())
                .chain(t.highs[0].values().iter().zip(kept.highs[0].values()))
                .map(|(a, b)| (a - b).powi(2)).sum();
            prop_assert!(residual <= prev + 1e-12);
            prev = residual;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn basis_invariants(g in graphs(12)) {
        let l = laplacian(&g);
        let p = greedy_max_cut(&l).unwrap();
        let (b, report) = compute_basis_with_report(&l, &p, &BasisOptions::default()).unwrap();
        let n = g.n();
        prop_assert!(b.orthonormality_error() <= 1e-8);
        prop_assert!(b.folding_error() <= 1e-6);
        let phi = b.phi().to_matrix();
        prop_assert_eq!(&phi * &phi, DMatrix::identity(n, n));

        let sign = p.sign();
        for k in 0..n {
            let u = b.column(k);
            let ju = u.component_mul(sign);
            let origin = b.origins()[k];
            match origin.kind {
                ColumnKind::Optimized => {
                    prop_assert!(u.dot(&ju).abs() <= 1e-6);
                    let partner = (0..n).find(|&j| b.origins()[j].step == origin.step && b.origins()[j].kind == ColumnKind::Folded);
                    let partner = partner.expect("folded partner");
                    prop_assert!((b.column(partner) - &ju).amax() <= 1e-8);
                }
                ColumnKind::Leftover => {
                    let s = report.leftover_class.map(|c| if c == graph_filterbank::fourier::SubspaceClass::AllPlus { 1.0 } else { -1.0 }).unwrap();
                    prop_assert!((ju - u * s).amax() <= 1e-6);
                }
                ColumnKind::Folded => {}
            }
        }
        for w in report.steps.windows(2) {
            prop_assert_eq!(w[1].subspace_dim + 2, w[0].subspace_dim);
        }
        prop_assert!(report.steps.iter().all(|s| s.certificate.passes()));
    }

    #[test]
    fn filter_designs_satisfy_pr(g in graphs(10), seed in any::<u64>()) {
        let l = laplacian(&g);
        let p = greedy_max_cut(&l).unwrap();
        let level = FilterLevel::build(g.clone(), &p, &Default::default(), &BasisOptions::default()).unwrap();
        let phi = level.basis().phi().clone();
        let mut rng = common::rng(seed);
        let table: Vec<f64> = (0..g.n()).map(|_| rng.gen_range(0.0..=2.0)).collect();
        let h = design_from_hstar(&phi, |i, _| table[i]).unwrap();
        let folded = h.as_vector() + phi.apply_abs(h.as_vector());
        prop_assert!((folded - DVector::from_element(g.n(), 2.0)).amax() <= 1e-15);

        let q = quartet(&h, &phi).unwrap();
        let custom = FilterLevel::from_parts(g.clone(), level.basis().clone(), q, None).unwrap();
        let r = verify_pr(&custom);
        prop_assert!(r.reconstruction_residual <= 1e-10 && r.alias_residual <= 1e-10);
        prop_assert!(r.operator_residual <= 1e-8);

        let target = FilterVector::new(DVector::from_fn(g.n(), |_, _| rng.gen_range(-0.5..2.5))).unwrap();
        let fit = design_minimax(&phi, &target).unwrap();
        let hv = fit.h.as_vector();
        prop_assert!(hv.iter().all(|v| (0.0..=2.0).contains(v)));
        prop_assert!((hv + phi.apply_abs(hv) - DVector::from_element(g.n(), 2.0)).amax() <= 1e-15);
        // no feasible random design does better in the max norm when nothing was clamped
        if fit.max_clamp == 0.0 {
            let pairs: Vec<(usize, usize)> = phi.pairs().collect();
            let fixed_err = phi.fixed_points().map(|i| (1.0 - target.values()[i]).abs()).fold(0.0, f64::max);
            for _ in 0..50 {
                let mut cand = DVector::from_element(g.n(), 1.0);
                for &(i, j) in &pairs {
                    let t = rng.gen_range(0.0..=2.0);
                    cand[i] = t;
                    cand[j] = 2.0 - t;
                }
                let err = (&cand - target.as_vector()).amax().max(fixed_err);
                prop_assert!(fit.residual <= err + 1e-12);
            }
        }
    }

    #[test]
    fn first_column_beats_oracle_on_tiny_graphs(g in graphs(6)) {
        let l = laplacian(&g);
        let p = greedy_max_cut(&l).unwrap();
        let (b, _) = compute_basis_with_report(&l, &p, &BasisOptions::default()).unwrap();
        let first = (0..g.n()).find(|&k| b.origins()[k].step == 0 && b.origins()[k].kind == ColumnKind::Optimized).unwrap();
        let r = DMatrix::from_diagonal(&p.sign().map(|s| s + 1.0));
        let problem = QecqpProblem::new(l.matrix().clone(), r).unwrap();
        prop_assert!(b.energies()[first] <= oracle_min(&problem, 20_000, 1).unwrap() + 1e-5);
    }
}
