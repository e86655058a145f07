//! Spectral filter design, the orthogonal quartet and two-channel
//! analysis/synthesis.
//!
//! A filter vector `h` acts as `F_h = U·diag(h)·Uᵀ`. The bank reconstructs
//! perfectly when
//!
//! ```text
//! g₀⊙h₀ + g₁⊙h₁ = 2·1
//! (|Φ|g₀)⊙h₀ − (|Φ|g₁)⊙h₁ = 0
//! ```
//!
//! The orthogonal quartet `g₀ = h₀ = √h`, `g₁ = h₁ = |Φ|h₀` meets both as
//! soon as `(I + |Φ|)h = 2·1`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{compute_basis_with_report, BasisOptions, BasisReport, FourierBasis, SignedPermutation};
use crate::graph::{laplacian, Graph, Signal};
use crate::linalg::max_abs;
use crate::sampling::{downsample, upsample, Channel, SamplingPattern};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FilterVector(DVector<f64>);

impl FilterVector {
    pub fn new(values: DVector<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite filter entry {v}")));
        }
        Ok(FilterVector(values))
    }

    pub fn ones(n: usize) -> Self {
        FilterVector(DVector::from_element(n, 1.0))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn values(&self) -> &[f64] {
        self.0.as_slice()
    }
}

impl TryFrom<Vec<f64>> for FilterVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        FilterVector::new(DVector::from_vec(v))
    }
}

impl From<FilterVector> for Vec<f64> {
    fn from(f: FilterVector) -> Self {
        f.0.as_slice().to_vec()
    }
}

/// `h(i) = h*(i, j)`, `h(j) = 2 − h*(i, j)` on every pair `i < j`, and 1 on
/// fixed points.
pub fn design_from_hstar(phi: &SignedPermutation, hstar: impl Fn(usize, usize) -> f64) -> Result<FilterVector> {
    let mut h = DVector::from_element(phi.len(), 1.0);
    for (i, j) in phi.pairs() {
        let t = hstar(i, j);
        if !(0.0..=2.0).contains(&t) {
            return Err(Error::InvalidParameter(format!("h*({i}, {j}) = {t} outside [0, 2]")));
        }
        h[i] = t;
        h[j] = 2.0 - t;
    }
    FilterVector::new(h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimaxDesign {
    pub h: FilterVector,
    /// `‖h − h_des‖_∞` of the result.
    pub residual: f64,
    /// Largest distance an unclamped entry lay outside `[0, 2]`.
    pub max_clamp: f64,
}

/// Closest vector to `h_des` in the max norm subject to `(I + |Φ|)h = 2·1`,
/// clamped to `[0, 2]`.
pub fn design_minimax(phi: &SignedPermutation, h_des: &FilterVector) -> Result<MinimaxDesign> {
    let n = phi.len();
    if h_des.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: h_des.len() });
    }
    let d = h_des.as_vector();
    let mut h = DVector::from_element(n, 1.0);
    let mut max_clamp: f64 = 0.0;
    for (i, j) in phi.pairs() {
        let t = 0.5 * (d[i] + 2.0 - d[j]);
        let c = t.clamp(0.0, 2.0);
        max_clamp = max_clamp.max((t - c).abs());
        h[i] = c;
        h[j] = 2.0 - c;
    }
    let residual = (&h - d).amax();
    Ok(MinimaxDesign { h: FilterVector::new(h)?, residual, max_clamp })
}

/// Ideal half-band target: 2 on the lower-energy half of the indices, 0 on
/// the rest.
pub fn half_band(n: usize) -> FilterVector {
    FilterVector(DVector::from_fn(n, |k, _| if 2 * k < n { 2.0 } else { 0.0 }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quartet {
    pub h0: FilterVector,
    pub h1: FilterVector,
    pub g0: FilterVector,
    pub g1: FilterVector,
}

/// Orthogonal quartet from a squared lowpass response `h`.
pub fn quartet(h: &FilterVector, phi: &SignedPermutation) -> Result<Quartet> {
    if h.len() != phi.len() {
        return Err(Error::DimensionMismatch { expected: phi.len(), actual: h.len() });
    }
    if let Some((k, v)) = h.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::InvalidParameter(format!("negative filter entry {v} at {k}")));
    }
    let h0 = h.as_vector().map(f64::sqrt);
    let h1 = phi.apply_abs(&h0);
    Ok(Quartet {
        h0: FilterVector(h0.clone()),
        h1: FilterVector(h1.clone()),
        g0: FilterVector(h0),
        g1: FilterVector(h1),
    })
}

/// `U(h ⊙ Uᵀf)`.
pub fn apply_filter(basis: &FourierBasis, h: &FilterVector, f: &Signal) -> Result<Signal> {
    if h.len() != basis.n() {
        return Err(Error::DimensionMismatch { expected: basis.n(), actual: h.len() });
    }
    let spectrum = basis.forward(f)?.into_vector().component_mul(h.as_vector());
    basis.inverse(&Signal::new(spectrum))
}

/// `F_h = U·diag(h)·Uᵀ`.
pub fn filter_matrix(basis: &FourierBasis, h: &FilterVector) -> DMatrix<f64> {
    let u = basis.matrix();
    let mut scaled = u.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= h.as_vector()[k];
    }
    scaled * u.transpose()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "design", content = "value", rename_all = "snake_case")]
pub enum FilterDesign {
    /// `h*(i, j) ≡ c`.
    ConstantHStar(f64),
    /// Minimax fit of the half-band target.
    MinimaxHalfBand,
}

impl Default for FilterDesign {
    fn default() -> Self {
        FilterDesign::ConstantHStar(2.0)
    }
}

impl FilterDesign {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FilterDesign::ConstantHStar(c) if !(0.0..=2.0).contains(&c) => {
                Err(Error::InvalidParameter(format!("h* = {c} outside [0, 2]")))
            }
            _ => Ok(()),
        }
    }

    pub fn squared_response(&self, phi: &SignedPermutation) -> Result<FilterVector> {
        match *self {
            FilterDesign::ConstantHStar(c) => design_from_hstar(phi, |_, _| c),
            FilterDesign::MinimaxHalfBand => Ok(design_minimax(phi, &half_band(phi.len()))?.h),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FilterLevel {
    graph: Graph,
    basis: FourierBasis,
    quartet: Quartet,
    report: Option<BasisReport>,
}

impl FilterLevel {
    pub fn build(graph: Graph, pattern: &SamplingPattern, design: &FilterDesign, opts: &BasisOptions) -> Result<Self> {
        design.validate()?;
        let (basis, report) = compute_basis_with_report(&laplacian(&graph), pattern, opts)?;
        let quartet = quartet(&design.squared_response(basis.phi())?, basis.phi())?;
        Ok(FilterLevel { graph, basis, quartet, report: Some(report) })
    }

    pub fn from_parts(graph: Graph, basis: FourierBasis, quartet: Quartet, report: Option<BasisReport>) -> Result<Self> {
        let n = graph.n();
        if basis.n() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: basis.n() });
        }
        for v in [&quartet.h0, &quartet.h1, &quartet.g0, &quartet.g1] {
            if v.len() != n {
                return Err(Error::DimensionMismatch { expected: n, actual: v.len() });
            }
        }
        Ok(FilterLevel { graph, basis, quartet, report })
    }

    /// Per-step solver certificates, when the basis was computed here.
    pub fn report(&self) -> Option<&BasisReport> {
        self.report.as_ref()
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn basis(&self) -> &FourierBasis {
        &self.basis
    }

    pub fn pattern(&self) -> &SamplingPattern {
        self.basis.pattern()
    }

    pub fn quartet(&self) -> &Quartet {
        &self.quartet
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }
}

pub fn analyze(level: &FilterLevel, f: &Signal) -> Result<(Signal, Signal)> {
    f.check_len(level.n())?;
    let p = level.pattern();
    let low = apply_filter(&level.basis, &level.quartet.h0, f)?;
    let high = apply_filter(&level.basis, &level.quartet.h1, f)?;
    Ok((downsample(&low, p, Channel::Low)?, downsample(&high, p, Channel::High)?))
}

pub fn synthesize(level: &FilterLevel, f_low: &Signal, f_high: &Signal) -> Result<Signal> {
    let p = level.pattern();
    let low = apply_filter(&level.basis, &level.quartet.g0, &upsample(f_low, p, Channel::Low)?)?;
    let high = apply_filter(&level.basis, &level.quartet.g1, &upsample(f_high, p, Channel::High)?)?;
    Ok(Signal::new(low.into_vector() + high.into_vector()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrReport {
    /// `‖g₀⊙h₀ + g₁⊙h₁ − 2·1‖_∞`.
    pub reconstruction_residual: f64,
    /// `‖(|Φ|g₀)⊙h₀ − (|Φ|g₁)⊙h₁‖_∞`.
    pub alias_residual: f64,
    /// `‖F_{g₀}B_LA_LF_{h₀} + F_{g₁}B_HA_HF_{h₁} − I‖_max`.
    pub operator_residual: f64,
}

impl PrReport {
    pub fn max_residual(&self) -> f64 {
        self.reconstruction_residual.max(self.alias_residual).max(self.operator_residual)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }
}

pub fn verify_pr(level: &FilterLevel) -> PrReport {
    let q = &level.quartet;
    let phi = level.basis.phi();
    let (h0, h1, g0, g1) = (q.h0.as_vector(), q.h1.as_vector(), q.g0.as_vector(), q.g1.as_vector());
    let n = level.n();

    let a = g0.component_mul(h0) + g1.component_mul(h1) - DVector::from_element(n, 2.0);
    let b = phi.apply_abs(g0).component_mul(h0) - phi.apply_abs(g1).component_mul(h1);

    let sign = level.pattern().sign();
    let keep = |m: &DMatrix<f64>, s: f64| DMatrix::from_fn(n, n, |i, j| if sign[i] * s > 0.0 { m[(i, j)] } else { 0.0 });
    let t = filter_matrix(&level.basis, &q.g0) * keep(&filter_matrix(&level.basis, &q.h0), 1.0)
        + filter_matrix(&level.basis, &q.g1) * keep(&filter_matrix(&level.basis, &q.h1), -1.0);
    let operator_residual = max_abs(&(t - DMatrix::identity(n, n)));

    PrReport { reconstruction_residual: a.amax(), alias_residual: b.amax(), operator_residual }
}
