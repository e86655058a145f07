//! Vertex partition for the two channels, the greedy max-cut heuristic
//! that chooses it, and the down/upsampling operators.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, LaplacianMatrix, Signal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Low,
    High,
}

/// Partition `{V_L, V_H}` of the vertices with its sign vector (the
/// diagonal of the sampling matrix `J`, `+1` on `V_L`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PatternDocument", into = "PatternDocument")]
pub struct SamplingPattern {
    n: usize,
    keep_low: Vec<usize>,
    keep_high: Vec<usize>,
    sign: DVector<f64>,
}

/// Serialized form: `{"n": .., "keep_low": [..]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct PatternDocument {
    n: usize,
    keep_low: Vec<usize>,
}

impl TryFrom<PatternDocument> for SamplingPattern {
    type Error = Error;
    fn try_from(doc: PatternDocument) -> Result<Self> {
        SamplingPattern::from_keep_low(doc.n, doc.keep_low)
    }
}

impl From<SamplingPattern> for PatternDocument {
    fn from(p: SamplingPattern) -> Self {
        PatternDocument { n: p.n, keep_low: p.keep_low }
    }
}

impl SamplingPattern {
    pub fn from_keep_low(n: usize, mut keep_low: Vec<usize>) -> Result<Self> {
        keep_low.sort_unstable();
        keep_low.dedup();
        if let Some(&bad) = keep_low.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index: bad, n });
        }
        if keep_low.is_empty() || keep_low.len() == n {
            return Err(Error::TrivialSampling);
        }
        let mut sign = DVector::from_element(n, -1.0);
        for &i in &keep_low {
            sign[i] = 1.0;
        }
        let keep_high = (0..n).filter(|&i| sign[i] < 0.0).collect();
        Ok(SamplingPattern { n, keep_low, keep_high, sign })
    }

    /// Even-indexed vertices low, odd-indexed high. On an even ring this is
    /// the bipartition.
    pub fn alternating(n: usize) -> Result<Self> {
        Self::from_keep_low(n, (0..n).step_by(2).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn keep_low(&self) -> &[usize] {
        &self.keep_low
    }

    pub fn keep_high(&self) -> &[usize] {
        &self.keep_high
    }

    pub fn indices(&self, channel: Channel) -> &[usize] {
        match channel {
            Channel::Low => &self.keep_low,
            Channel::High => &self.keep_high,
        }
    }

    /// Diagonal of `J`.
    pub fn sign(&self) -> &DVector<f64> {
        &self.sign
    }

    /// `Jx`.
    pub fn apply_j(&self, x: &DVector<f64>) -> DVector<f64> {
        x.component_mul(&self.sign)
    }
}

/// Greedy max-cut: seed with the lowest-index maximum-degree vertex, then
/// keep adding the vertex that maximizes the sum of the induced Laplacian
/// submatrix (which equals the cut value), stopping once the best candidate
/// would decrease it. Ties go to the lowest index and do not stop the loop.
/// The high channel is never emptied.
pub fn greedy_max_cut(l: &LaplacianMatrix) -> Result<SamplingPattern> {
    let n = l.n();
    if n < 2 {
        return Err(Error::InvalidParameter(format!("max-cut needs at least 2 vertices, got {n}")));
    }
    let m = l.matrix();
    let mut seed = 0;
    for v in 1..n {
        if m[(v, v)] > m[(seed, seed)] {
            seed = v;
        }
    }
    let mut in_low = vec![false; n];
    in_low[seed] = true;
    let mut size = 1;
    let mut s = m[(seed, seed)];
    // coupling[v] = Σ_{x ∈ V_L} L(x, v)
    let mut coupling: Vec<f64> = (0..n).map(|v| m[(seed, v)]).collect();

    while size < n - 1 {
        let mut best: Option<(usize, f64)> = None;
        for v in (0..n).filter(|&v| !in_low[v]) {
            let candidate = s + 2.0 * coupling[v] + m[(v, v)];
            if best.map_or(true, |(_, b)| candidate > b) {
                best = Some((v, candidate));
            }
        }
        let (v, sv) = best.expect("complement is non-empty");
        if sv < s {
            break;
        }
        in_low[v] = true;
        size += 1;
        s = sv;
        for (x, c) in coupling.iter_mut().enumerate() {
            *c += m[(v, x)];
        }
    }
    SamplingPattern::from_keep_low(n, (0..n).filter(|&v| in_low[v]).collect())
}

/// Total weight of edges crossing the partition.
pub fn cut_value(g: &Graph, p: &SamplingPattern) -> Result<f64> {
    if g.n() != p.n() {
        return Err(Error::DimensionMismatch { expected: g.n(), actual: p.n() });
    }
    Ok(g.edges().iter().filter(|e| p.sign[e.i] != p.sign[e.j]).map(|e| e.w).sum())
}

/// `¼·sᵀLs`, which equals the cut value.
pub fn cut_value_quadratic(l: &LaplacianMatrix, p: &SamplingPattern) -> Result<f64> {
    if l.n() != p.n() {
        return Err(Error::DimensionMismatch { expected: l.n(), actual: p.n() });
    }
    Ok(0.25 * crate::graph::quadratic_form(l.matrix(), &p.sign))
}

pub fn downsample(f: &Signal, p: &SamplingPattern, channel: Channel) -> Result<Signal> {
    f.check_len(p.n)?;
    let v = f.as_vector();
    Ok(Signal::new(DVector::from_iterator(
        p.indices(channel).len(),
        p.indices(channel).iter().map(|&i| v[i]),
    )))
}

pub fn upsample(reduced: &Signal, p: &SamplingPattern, channel: Channel) -> Result<Signal> {
    let idx = p.indices(channel);
    reduced.check_len(idx.len())?;
    let mut out = DVector::zeros(p.n);
    for (k, &i) in idx.iter().enumerate() {
        out[i] = reduced.as_vector()[k];
    }
    Ok(Signal::new(out))
}
