mod common;

use graph_filterbank::sampling::{cut_value, SamplingPattern};
use graph_filterbank::{greedy_max_cut, laplacian, Edge, Graph};
use rand::Rng;

fn random_connected(n: usize, seed: u64) -> Graph {
    let mut rng = common::rng(seed);
    loop {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen_bool(0.45) {
                    edges.push(Edge { i, j, w: rng.gen_range(0.2..2.0) });
                }
            }
        }
        if let Ok(g) = Graph::new(n, edges) {
            if graph_filterbank::linalg::sym_eigenvalues(laplacian(&g).matrix()).unwrap()[1] > 1e-9 {
                return g;
            }
        }
    }
}

#[test]
fn greedy_cut_beats_most_bipartitions() {
    for n in 3..=10 {
        for seed in 0..6u64 {
            let g = random_connected(n, 1000 * n as u64 + seed);
            let greedy = cut_value(&g, &greedy_max_cut(&laplacian(&g)).unwrap()).unwrap();
            // vertex n-1 is fixed to the high side, every other subset is one bipartition
            let total = 1usize << (n - 1);
            let mut below_or_equal = 0;
            for mask in 0..total {
                let keep_low: Vec<usize> = (0..n - 1).filter(|v| mask >> v & 1 == 1).collect();
                let value = if keep_low.is_empty() {
                    0.0
                } else {
                    cut_value(&g, &SamplingPattern::from_keep_low(n, keep_low).unwrap()).unwrap()
                };
                if value <= greedy + 1e-12 {
                    below_or_equal += 1;
                }
            }
            let fraction = below_or_equal as f64 / total as f64;
            assert!(fraction >= 0.9, "n={n} seed={seed}: greedy at {fraction:.3}");
        }
    }
}

#[test]
fn greedy_is_deterministic_and_bipartite_on_even_rings() {
    for n in (4..=20).step_by(2) {
        let g = graph_filterbank::generate(graph_filterbank::GraphKind::Ring { n }, 0).unwrap();
        let a = greedy_max_cut(&laplacian(&g)).unwrap();
        let b = greedy_max_cut(&laplacian(&g)).unwrap();
        assert_eq!(a, b);
        assert_eq!(cut_value(&g, &a).unwrap(), n as f64);
    }
}
