//! Multilevel decomposition.
//!
//! Each level keeps its low channel vertices, Kron-reduces the Laplacian
//! onto them and, when the result is dense, sparsifies it by effective
//! resistance sampling before building the next filterbank.

use nalgebra::{Cholesky, DMatrix};
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::{analyze, synthesize, FilterDesign, FilterLevel};
use crate::fourier::BasisOptions;
use crate::graph::{laplacian, Edge, Graph, LaplacianMatrix, Signal, UnionFind};
use crate::linalg::{max_abs, symmetrized};
use crate::sampling::{greedy_max_cut, SamplingPattern};
use crate::seeds;

const EDGE_DROP: f64 = 1e-12;
const BRIDGE_LEVERAGE: f64 = 1.0 - 1e-9;

fn select(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |a, b| m[(rows[a], cols[b])])
}

/// Schur complement `L_KK − L_KC·L_CC⁻¹·L_CK` onto the vertex set `K`.
pub fn kron_reduce(l: &LaplacianMatrix, keep: &[usize]) -> Result<LaplacianMatrix> {
    let n = l.n();
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if let Some(&bad) = keep.iter().find(|&&k| k >= n) {
        return Err(Error::IndexOutOfRange { index: bad, n });
    }
    if keep.is_empty() || keep.len() == n {
        return Err(Error::InvalidParameter(format!("keep set of size {} is not a proper subset", keep.len())));
    }
    let mut kept = vec![false; n];
    keep.iter().for_each(|&k| kept[k] = true);
    let rest: Vec<usize> = (0..n).filter(|&v| !kept[v]).collect();
    let m = l.matrix();

    let chol = Cholesky::new(select(m, &rest, &rest)).ok_or(Error::SingularInterior)?;
    let lkc = select(m, &keep, &rest);
    let s = select(m, &keep, &keep) - &lkc * chol.solve(&lkc.transpose());
    let s = symmetrized(&s);

    // Clean rounding noise so the result is an exact Laplacian.
    let k = keep.len();
    let scale = max_abs(&s).max(f64::MIN_POSITIVE);
    let mut out = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in (i + 1)..k {
            let v = s[(i, j)];
            if v > 1e-10 * scale {
                return Err(Error::PositiveOffDiagonal { i, j, value: v });
            }
            let v = v.min(0.0);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    for i in 0..k {
        out[(i, i)] = -out.row(i).sum();
    }
    Ok(LaplacianMatrix::from_matrix_unchecked(out))
}

/// Graph with adjacency `diag(L) − L`, dropping weights below `1e-12·max|L|`.
pub fn graph_from_laplacian(l: &LaplacianMatrix) -> Result<Graph> {
    let m = l.matrix();
    let n = l.n();
    let drop = EDGE_DROP * max_abs(m);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = m[(i, j)];
            if v > drop {
                return Err(Error::PositiveOffDiagonal { i, j, value: v });
            }
            if -v > drop {
                edges.push(Edge { i, j, w: -v });
            }
        }
    }
    Graph::new(n, edges)
}

/// Moore–Penrose pseudoinverse of a connected graph's Laplacian.
pub fn laplacian_pinv(l: &LaplacianMatrix) -> Result<DMatrix<f64>> {
    let n = l.n();
    let ones = DMatrix::from_element(n, n, 1.0 / n as f64);
    let chol = Cholesky::new(l.matrix() + &ones).ok_or(Error::Disconnected { components: 0 })?;
    Ok(chol.inverse() - ones)
}

/// Effective resistance of every edge, in edge order.
pub fn effective_resistances(g: &Graph) -> Result<Vec<f64>> {
    let p = laplacian_pinv(&laplacian(g))?;
    Ok(g.edges().iter().map(|e| p[(e.i, e.i)] + p[(e.j, e.j)] - 2.0 * p[(e.i, e.j)]).collect())
}

/// Edge count above which a reduced graph is sparsified.
pub fn sparsify_threshold(n: usize, eps: f64) -> f64 {
    2.0 * n as f64 * (n as f64).ln() / (eps * eps)
}

/// Spectral sparsifier by effective resistance sampling.
///
/// Bridges (leverage `w·R = 1`) would be sampled with certainty in the
/// limit and are kept at their weight. The remaining edges are drawn
/// `⌈9·n·ln n / ε²⌉` times with probability proportional to leverage and
/// reweighted by `w / (q·p)`. If the sample disconnects the graph, the
/// highest-leverage crossing edges are restored at their original weight.
pub fn sparsify(g: &Graph, eps: f64, seed: u64) -> Result<Graph> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} outside (0, 1)")));
    }
    let n = g.n();
    let edges = g.edges();
    let leverage: Vec<f64> = effective_resistances(g)?
        .iter()
        .zip(edges)
        .map(|(r, e)| (r * e.w).clamp(0.0, 1.0))
        .collect();

    let mut weight = vec![0.0; edges.len()];
    let mut sampled = Vec::new();
    for (k, &lev) in leverage.iter().enumerate() {
        if lev >= BRIDGE_LEVERAGE {
            weight[k] = edges[k].w;
        } else {
            sampled.push(k);
        }
    }
    if !sampled.is_empty() {
        let total: f64 = sampled.iter().map(|&k| leverage[k]).sum();
        let q = (9.0 * n as f64 * (n as f64).ln() / (eps * eps)).ceil().max(1.0) as usize;
        let dist = WeightedIndex::new(sampled.iter().map(|&k| leverage[k]))
            .map_err(|e| Error::InvalidParameter(format!("sampling weights: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = vec![0usize; sampled.len()];
        for _ in 0..q {
            counts[dist.sample(&mut rng)] += 1;
        }
        for (s, &k) in sampled.iter().enumerate() {
            if counts[s] > 0 {
                let p = leverage[k] / total;
                weight[k] = counts[s] as f64 * edges[k].w / (q as f64 * p);
            }
        }
    }

    let mut uf = UnionFind::new(n);
    for (k, e) in edges.iter().enumerate() {
        if weight[k] > 0.0 {
            uf.union(e.i, e.j);
        }
    }
    if uf.components() > 1 {
        let mut order: Vec<usize> = (0..edges.len()).filter(|&k| weight[k] == 0.0).collect();
        order.sort_by(|&a, &b| leverage[b].total_cmp(&leverage[a]));
        for k in order {
            if uf.union(edges[k].i, edges[k].j) {
                weight[k] = edges[k].w;
            }
        }
    }

    let kept = edges
        .iter()
        .zip(&weight)
        .filter(|(_, &w)| w > 0.0)
        .map(|(e, &w)| Edge { i: e.i, j: e.j, w });
    let out = Graph::new(n, kept)?;
    match g.coords() {
        Some(c) => out.with_coords(c.to_vec()),
        None => Ok(out),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingRule {
    #[default]
    Greedy,
    Alternating,
}

impl SamplingRule {
    pub fn pattern(&self, g: &Graph) -> Result<SamplingPattern> {
        match self {
            SamplingRule::Greedy => greedy_max_cut(&laplacian(g)),
            SamplingRule::Alternating => SamplingPattern::alternating(g.n()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PyramidConfig {
    pub depth: usize,
    pub eps: f64,
    pub seed: u64,
    pub design: FilterDesign,
    pub sampling: SamplingRule,
    pub basis: BasisOptions,
}

impl Default for PyramidConfig {
    fn default() -> Self {
        PyramidConfig {
            depth: 1,
            eps: 0.3,
            seed: 0,
            design: FilterDesign::default(),
            sampling: SamplingRule::Greedy,
            basis: BasisOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Pyramid {
    levels: Vec<FilterLevel>,
    config: PyramidConfig,
    /// Whether the graph handed to level `i + 1` was sparsified.
    sparsified: Vec<bool>,
}

impl Pyramid {
    pub fn from_levels(levels: Vec<FilterLevel>, config: PyramidConfig, sparsified: Vec<bool>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidParameter("pyramid has no levels".into()));
        }
        for w in levels.windows(2) {
            let kept = w[0].pattern().keep_low().len();
            if w[1].n() != kept {
                return Err(Error::DimensionMismatch { expected: kept, actual: w[1].n() });
            }
        }
        Ok(Pyramid { levels, config, sparsified })
    }

    pub fn levels(&self) -> &[FilterLevel] {
        &self.levels
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn config(&self) -> &PyramidConfig {
        &self.config
    }

    pub fn sparsified(&self) -> &[bool] {
        &self.sparsified
    }

    pub fn n(&self) -> usize {
        self.levels[0].n()
    }
}

/// Builds up to `cfg.depth` levels, stopping early once a reduced graph has
/// fewer than two vertices.
pub fn build_pyramid(g: &Graph, cfg: &PyramidConfig) -> Result<Pyramid> {
    if cfg.depth == 0 {
        return Err(Error::InvalidParameter("depth must be at least 1".into()));
    }
    if !(cfg.eps > 0.0 && cfg.eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps = {} outside (0, 1)", cfg.eps)));
    }
    cfg.design.validate()?;
    if g.n() < 2 {
        return Err(Error::InvalidParameter(format!("graph with {} vertices cannot be split", g.n())));
    }
    let mut levels = Vec::new();
    let mut sparsified = Vec::new();
    let mut current = g.clone();
    for depth in 0..cfg.depth {
        let pattern = cfg.sampling.pattern(&current)?;
        let level = FilterLevel::build(current, &pattern, &cfg.design, &cfg.basis)?;
        let next = if depth + 1 < cfg.depth && pattern.keep_low().len() >= 2 {
            Some(reduce(&level, cfg, depth)?)
        } else {
            None
        };
        levels.push(level);
        match next {
            Some((graph, sparse)) => {
                sparsified.push(sparse);
                current = graph;
            }
            None => break,
        }
    }
    Pyramid::from_levels(levels, cfg.clone(), sparsified)
}

fn reduce(level: &FilterLevel, cfg: &PyramidConfig, depth: usize) -> Result<(Graph, bool)> {
    let keep = level.pattern().keep_low();
    let reduced = graph_from_laplacian(&kron_reduce(&laplacian(level.graph()), keep)?)?;
    let reduced = match level.graph().coords() {
        Some(c) => reduced.with_coords(keep.iter().map(|&k| c[k]).collect())?,
        None => reduced,
    };
    if (reduced.edges().len() as f64) <= sparsify_threshold(reduced.n(), cfg.eps) {
        return Ok((reduced, false));
    }
    Ok((sparsify(&reduced, cfg.eps, seeds::derive(cfg.seed, depth as u64))?, true))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTree {
    pub lows: Signal,
    /// Highpass coefficients per level, finest first.
    pub highs: Vec<Signal>,
}

impl CoefficientTree {
    pub fn len(&self) -> usize {
        self.lows.len() + self.highs.iter().map(Signal::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The same tree with every highpass vector zeroed.
    pub fn lowpass_only(&self) -> Self {
        CoefficientTree { lows: self.lows.clone(), highs: self.highs.iter().map(|h| Signal::zeros(h.len())).collect() }
    }
}

pub fn pyramid_analyze(p: &Pyramid, f: &Signal) -> Result<CoefficientTree> {
    f.check_len(p.n())?;
    let mut current = f.clone();
    let mut highs = Vec::with_capacity(p.depth());
    for level in &p.levels {
        let (lo, hi) = analyze(level, &current)?;
        highs.push(hi);
        current = lo;
    }
    Ok(CoefficientTree { lows: current, highs })
}

pub fn pyramid_synthesize(p: &Pyramid, t: &CoefficientTree) -> Result<Signal> {
    if t.highs.len() != p.depth() {
        return Err(Error::DimensionMismatch { expected: p.depth(), actual: t.highs.len() });
    }
    let mut current = t.lows.clone();
    for (level, hi) in p.levels.iter().zip(&t.highs).rev() {
        current = synthesize(level, &current, hi)?;
    }
    Ok(current)
}

/// Reconstruction from the lowpass output of layer `layer` alone (1-based),
/// with every finer highpass channel zeroed.
pub fn lowpass_reconstruction(p: &Pyramid, f: &Signal, layer: usize) -> Result<Signal> {
    if layer == 0 || layer > p.depth() {
        return Err(Error::InvalidParameter(format!("layer {layer} outside 1..={}", p.depth())));
    }
    f.check_len(p.n())?;
    let mut current = f.clone();
    for level in &p.levels[..layer] {
        current = analyze(level, &current)?.0;
    }
    for level in p.levels[..layer].iter().rev() {
        let zeros = Signal::zeros(level.pattern().keep_high().len());
        current = synthesize(level, &current, &zeros)?;
    }
    Ok(current)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    /// Zero highpass entries with `|c| > r`.
    #[default]
    ZeroAbove,
    /// Hard thresholding: zero highpass entries with `|c| ≤ r`.
    ZeroBelow,
}

pub fn threshold_highpass(t: &CoefficientTree, r: f64, rule: ThresholdRule) -> Result<CoefficientTree> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::InvalidParameter(format!("threshold {r} must be non-negative")));
    }
    let zero = |c: f64| match rule {
        ThresholdRule::ZeroAbove => c.abs() > r,
        ThresholdRule::ZeroBelow => c.abs() <= r,
    };
    let highs = t
        .highs
        .iter()
        .map(|h| Signal::from(h.values().iter().map(|&c| if zero(c) { 0.0 } else { c }).collect::<Vec<_>>()))
        .collect();
    Ok(CoefficientTree { lows: t.lows.clone(), highs })
}

/// Keeps `k` coefficients: lowpass entries first, then the largest
/// highpass magnitudes across all levels. Within a group, larger magnitude
/// wins and ties go to the earlier position.
pub fn keep_top_k(t: &CoefficientTree, k: usize) -> Result<CoefficientTree> {
    let total = t.len();
    if k == 0 || k > total {
        return Err(Error::InvalidParameter(format!("k = {k} outside 1..={total}")));
    }
    let rank = |entries: &mut Vec<(usize, usize, f64)>| {
        entries.sort_by(|a, b| b.2.abs().total_cmp(&a.2.abs()).then((a.0, a.1).cmp(&(b.0, b.1))));
    };
    let mut lows: Vec<(usize, usize, f64)> = t.lows.values().iter().enumerate().map(|(i, &c)| (0, i, c)).collect();
    let mut highs: Vec<(usize, usize, f64)> = t
        .highs
        .iter()
        .enumerate()
        .flat_map(|(l, h)| h.values().iter().enumerate().map(move |(i, &c)| (l, i, c)))
        .collect();
    rank(&mut lows);
    rank(&mut highs);

    let mut out = CoefficientTree {
        lows: Signal::zeros(t.lows.len()),
        highs: t.highs.iter().map(|h| Signal::zeros(h.len())).collect(),
    };
    let mut lo = out.lows.clone().into_vector();
    for &(_, i, c) in lows.iter().take(k) {
        lo[i] = c;
    }
    out.lows = Signal::new(lo);
    let mut hv: Vec<_> = out.highs.iter().map(|h| h.clone().into_vector()).collect();
    for &(l, i, c) in highs.iter().take(k.saturating_sub(lows.len())) {
        hv[l][i] = c;
    }
    out.highs = hv.into_iter().map(Signal::new).collect();
    Ok(out)
}
