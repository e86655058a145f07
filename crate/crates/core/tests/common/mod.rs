#![allow(dead_code)]

use graph_filterbank::qecqp::QecqpProblem;
use graph_filterbank::{generate, Graph, GraphKind, Signal};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn random_signal(n: usize, rng: &mut ChaCha8Rng) -> Signal {
    Signal::new(DVector::from_fn(n, |_, _| rng.sample(StandardNormal)))
}

/// Random symmetric Q with R = O·diag(2,…,2,0,…,0)·Oᵀ for a random rotation O.
pub fn random_qecqp(dim: usize, rng: &mut ChaCha8Rng) -> QecqpProblem {
    let g = gaussian_matrix(dim, dim, rng);
    let q = (&g + g.transpose()) * 0.5;
    let o = gaussian_matrix(dim, dim, rng).qr().q();
    let twos = rng.gen_range(1..dim);
    let d = DVector::from_fn(dim, |i, _| if i < twos { 2.0 } else { 0.0 });
    let r = &o * DMatrix::from_diagonal(&d) * o.transpose();
    let r = (&r + r.transpose()) * 0.5;
    QecqpProblem::new(q, r).expect("valid instance")
}

/// Connected random geometric graph with a radius that keeps it sparse.
pub fn rgg(n: usize, seed: u64) -> Graph {
    let radius = (2.5 * (n as f64).ln() / n as f64).sqrt().min(0.9);
    generate(GraphKind::RandomGeometric { n, radius }, seed).expect("connected graph")
}

/// Sorted Laplacian spectrum of the unit-weight ring.
pub fn ring_spectrum(n: usize) -> Vec<f64> {
    let mut v: Vec<f64> =
        (0..n).map(|k| 2.0 - 2.0 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos()).collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
