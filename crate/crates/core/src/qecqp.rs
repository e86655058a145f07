//! Global solver for the quadratic equality constrained quadratic program
//!
//! ```text
//! min xᵀQx   s.t.   xᵀx = 1,   xᵀRx = 1,   R ⪰ 0
//! ```
//!
//! The problem is non-convex but has no duality gap. With
//! `H(μ₁, μ₂) = Q + μ₁I + μ₂R`, the dual reduces to maximizing the concave
//! scalar function `f(μ₂) = −μ₂ + λ_min(Q + μ₂R)`, after which
//! `μ₁ = −λ_min(Q + μ₂R)` and any feasible unit vector in the null space of
//! `H(μ₁, μ₂)` is a global minimizer. A triplet `(x, μ₁, μ₂)` with
//! `H ⪰ 0`, `Hx = 0` and `x` feasible is a certificate of global
//! optimality, and every [`QecqpSolution`] carries its residuals.
//!
//! The maximization bisects on the sign of the supergradient
//! `vᵀRv − 1` (`v` a unit eigenvector for `λ_min`), which is monotone
//! non-increasing. Where `λ_min` is degenerate the superdifferential is the
//! interval spanned by the eigenvalues of `VᵀRV − I` over the eigenspace
//! `V`; a point whose interval contains zero is itself a maximizer.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::quadratic_form;
use crate::linalg::{asymmetry, canonical_sign, max_abs, sym_eigen, sym_eigenvalues, SortedEigen};

/// Relative gap under which eigenvalues of `Q + μ₂R` are treated as one
/// eigenspace when forming the superdifferential.
const DEGENERACY_TOL: f64 = 1e-11;
/// A null-space direction whose `bᵀMb` is this close to one is accepted
/// directly and finished by [`polish_feasibility`].
const FEASIBILITY_SNAP: f64 = 1e-6;
/// Supergradient magnitudes below this count as zero.
const SUPERGRADIENT_ZERO: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative bracket width at which bisection stops.
    pub tol: f64,
    /// Relative eigenvalue threshold defining the numerical null space of H.
    pub tol_null: f64,
    pub max_doublings: usize,
    /// Keep the `(μ₂, f)` probes made by the bisection.
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-10, tol_null: 1e-8, max_doublings: 60, record_trace: false }
    }
}

#[derive(Debug, Clone)]
pub struct QecqpProblem {
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    r_eigen: SortedEigen,
    q_norm: f64,
}

impl QecqpProblem {
    /// Validates symmetry, `R ⪰ 0`, that the spectrum of `R` spreads across
    /// one (feasibility) and that one is not an eigenvalue of `R`.
    pub fn new(q: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self> {
        let n = q.nrows();
        if q.ncols() != n || r.nrows() != n || r.ncols() != n {
            return Err(Error::InvalidMatrix(format!(
                "Q is {}x{}, R is {}x{}",
                q.nrows(),
                q.ncols(),
                r.nrows(),
                r.ncols()
            )));
        }
        if n == 0 {
            return Err(Error::InvalidMatrix("empty problem".into()));
        }
        for (name, m) in [("Q", &q), ("R", &r)] {
            if asymmetry(m) > 1e-12 * max_abs(m).max(1.0) {
                return Err(Error::InvalidMatrix(format!("{name} is not symmetric")));
            }
        }
        let r_eigen = sym_eigen(&r)?;
        let r_scale = r_eigen.spectral_norm().max(1.0);
        if r_eigen.min() < -1e-10 * r_scale {
            return Err(Error::AssumptionViolated(format!("R is not PSD (λ_min = {})", r_eigen.min())));
        }
        if !(r_eigen.min() < 1.0 && r_eigen.max() > 1.0) {
            return Err(Error::AssumptionViolated(format!(
                "eigenvalues of R lie in [{}, {}], which does not straddle 1",
                r_eigen.min(),
                r_eigen.max()
            )));
        }
        if let Some(v) = r_eigen.values.iter().find(|v| (*v - 1.0).abs() <= 1e-9) {
            return Err(Error::AssumptionViolated(format!("R has eigenvalue {v}, too close to 1")));
        }
        let q_norm = sym_eigenvalues(&q)?.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        Ok(QecqpProblem { q, r, r_eigen, q_norm })
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// `H(μ₁, μ₂) = Q + μ₁I + μ₂R`.
    pub fn h(&self, mu1: f64, mu2: f64) -> DMatrix<f64> {
        let mut h = &self.q + &self.r * mu2;
        for i in 0..self.dim() {
            h[(i, i)] += mu1;
        }
        h
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        quadratic_form(&self.q, x)
    }

    /// Whether every eigenvalue of R is within `tol` of 0 or 2.
    pub fn has_binary_r_spectrum(&self, tol: f64) -> bool {
        self.r_eigen.values.iter().all(|v| v.abs() <= tol || (v - 2.0).abs() <= tol)
    }

    fn evaluate(&self, mu2: f64) -> Result<DualEvaluation> {
        let m = &self.q + &self.r * mu2;
        let eig = sym_eigen(&m)?;
        let lambda_min = eig.min();
        let scale = eig.spectral_norm().max(1.0);
        let cluster = eig.values.iter().take_while(|v| **v - lambda_min <= DEGENERACY_TOL * scale).count();
        let v0 = eig.vector(0);
        let supergradient = quadratic_form(&self.r, &v0) - 1.0;
        let superdifferential = if cluster > 1 {
            let basis = eig.vectors.columns(0, cluster).into_owned();
            let compressed = basis.transpose() * &self.r * &basis;
            let d = sym_eigenvalues(&compressed)?;
            (d[0] - 1.0, d[cluster - 1] - 1.0)
        } else {
            (supergradient, supergradient)
        };
        Ok(DualEvaluation { mu2, fval: -mu2 + lambda_min, lambda_min, supergradient, superdifferential })
    }
}

/// One probe of the concave dual function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualEvaluation {
    pub mu2: f64,
    pub fval: f64,
    pub lambda_min: f64,
    /// `vᵀRv − 1` for the first unit eigenvector of `λ_min`.
    pub supergradient: f64,
    /// `(lo, hi)` bounds of the superdifferential.
    pub superdifferential: (f64, f64),
}

impl DualEvaluation {
    fn increasing(&self) -> bool {
        self.superdifferential.0 > SUPERGRADIENT_ZERO
    }

    fn decreasing(&self) -> bool {
        self.superdifferential.1 < -SUPERGRADIENT_ZERO
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub mu2: f64,
    pub fval: f64,
}

#[derive(Debug, Clone)]
pub struct DualPoint {
    pub mu1: f64,
    pub mu2: f64,
    pub h: DMatrix<f64>,
    /// Dual objective `−μ₁ − μ₂`.
    pub fval: f64,
    pub trace: Vec<TracePoint>,
}

/// `f(μ₂) = −μ₂ + λ_min(Q + μ₂R)` and the supergradient `vᵀRv − 1`.
pub fn dual_objective(p: &QecqpProblem, mu2: f64) -> Result<(f64, f64)> {
    let e = p.evaluate(mu2)?;
    Ok((e.fval, e.supergradient))
}

/// Full probe including the superdifferential bounds.
pub fn dual_evaluation(p: &QecqpProblem, mu2: f64) -> Result<DualEvaluation> {
    p.evaluate(mu2)
}

/// Maximizes the dual by bisection on the supergradient sign. The bracket
/// starts at `±(‖Q‖₂ + 1)` and doubles outward until the signs differ.
pub fn maximize_dual(p: &QecqpProblem, opts: &SolverOptions) -> Result<DualPoint> {
    let mut trace = Vec::new();
    let mut probe = |mu2: f64| -> Result<DualEvaluation> {
        let e = p.evaluate(mu2)?;
        if opts.record_trace {
            trace.push(TracePoint { mu2, fval: e.fval });
        }
        Ok(e)
    };

    let radius = p.q_norm + 1.0;
    let mut optimum: Option<f64> = None;

    let mut lo = -radius;
    let mut doublings = 0;
    loop {
        let e = probe(lo)?;
        if e.increasing() {
            break;
        }
        if !e.decreasing() {
            optimum = Some(lo);
            break;
        }
        doublings += 1;
        if doublings > opts.max_doublings {
            return Err(Error::NoSignChange { doublings: opts.max_doublings });
        }
        lo *= 2.0;
    }

    let mut hi = radius;
    if optimum.is_none() {
        doublings = 0;
        loop {
            let e = probe(hi)?;
            if e.decreasing() {
                break;
            }
            if !e.increasing() {
                optimum = Some(hi);
                break;
            }
            doublings += 1;
            if doublings > opts.max_doublings {
                return Err(Error::NoSignChange { doublings: opts.max_doublings });
            }
            hi *= 2.0;
        }
    }

    while optimum.is_none() {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= opts.tol * (1.0 + mid.abs()) {
            optimum = Some(mid);
            break;
        }
        let e = probe(mid)?;
        if e.increasing() {
            lo = mid;
        } else if e.decreasing() {
            hi = mid;
        } else {
            optimum = Some(mid);
        }
    }

    let mu2 = optimum.unwrap();
    let lambda_min = sym_eigenvalues(&(&p.q + &p.r * mu2))?[0];
    let mu1 = -lambda_min;
    let h = p.h(mu1, mu2);
    Ok(DualPoint { mu1, mu2, h, fval: -mu1 - mu2, trace })
}

/// Finds a unit `x` in the (numerical) null space of `H` with `xᵀRx = 1`.
///
/// With `B` the eigenvectors of `H` whose eigenvalues are at most
/// `tol_null · max(1, λ_max(H))` and `M = BᵀRB`, picks a unit `b` with
/// `bᵀMb = 1`, either directly (an eigenvalue of `M` equal to one) or by
/// interpolating two eigenvectors of `M` whose eigenvalues straddle one.
/// `B` is enlarged with the next eigenvectors of `H` until that is possible.
pub fn feasible_null_point(h: &DMatrix<f64>, r: &DMatrix<f64>, tol_null: f64) -> Result<DVector<f64>> {
    let n = h.nrows();
    let eig = sym_eigen(h)?;
    let threshold = tol_null * eig.max().max(1.0);
    let mut k = eig.values.iter().filter(|v| **v <= threshold).count().max(1);

    loop {
        let basis = eig.vectors.columns(0, k).into_owned();
        let m = basis.transpose() * r * &basis;
        let me = sym_eigen(&m)?;
        let closest = (0..k)
            .min_by(|&a, &b| (me.values[a] - 1.0).abs().total_cmp(&(me.values[b] - 1.0).abs()))
            .unwrap();
        let gap = (me.values[closest] - 1.0).abs();

        let b = if gap <= 1e-12 {
            Some(me.vector(closest))
        } else if me.min() <= 1.0 && me.max() >= 1.0 {
            let (d_lo, d_hi) = (me.min(), me.max());
            let alpha_sq = (1.0 - d_lo) / (d_hi - d_lo);
            Some(me.vector(k - 1) * alpha_sq.sqrt() + me.vector(0) * (1.0 - alpha_sq).max(0.0).sqrt())
        } else if gap <= FEASIBILITY_SNAP {
            Some(me.vector(closest))
        } else {
            None
        };

        if let Some(b) = b {
            let x = basis * b;
            let norm = x.norm();
            return Ok(x / norm);
        }
        if k == n {
            return Err(Error::InfeasibleNullSpace { cap: n });
        }
        k += 1;
    }
}

/// Restores `xᵀx = 1` and `xᵀRx = 1` by rescaling the components of `x`
/// in the eigenspaces of R above and below one. Leaves `x` alone when one
/// of the components vanishes.
fn polish_feasibility(p: &QecqpProblem, x: &DVector<f64>) -> DVector<f64> {
    let n = p.dim();
    let coords = p.r_eigen.vectors.transpose() * x;
    let mut above = DVector::zeros(n);
    let mut below = DVector::zeros(n);
    let (mut pa, mut ra, mut pb, mut rb) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..n {
        let c = coords[k];
        let lambda = p.r_eigen.values[k];
        let col = p.r_eigen.vectors.column(k);
        if lambda > 1.0 {
            above.axpy(c, &col, 1.0);
            pa += c * c;
            ra += lambda * c * c;
        } else {
            below.axpy(c, &col, 1.0);
            pb += c * c;
            rb += lambda * c * c;
        }
    }
    if pa < 1e-14 || pb < 1e-14 {
        return x.clone();
    }
    // a·pa + b·pb = 1 and a·ra + b·rb = 1
    let det = pa * rb - pb * ra;
    let a = (rb - pb) / det;
    let b = (pa - ra) / det;
    if !(a > 0.0 && b > 0.0) {
        return x.clone();
    }
    above * a.sqrt() + below * b.sqrt()
}

/// Residuals certifying global optimality of a returned point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub lambda_min_h: f64,
    pub h_norm: f64,
    /// `‖Hx‖₂`
    pub stationarity: f64,
    /// `|xᵀx − 1|`
    pub unit_residual: f64,
    /// `|xᵀRx − 1|`
    pub constraint_residual: f64,
    /// `|xᵀQx − (−μ₁ − μ₂)|`
    pub duality_gap: f64,
    pub objective: f64,
}

impl Certificate {
    pub fn failures(&self) -> Vec<&'static str> {
        let s = 1.0 + self.h_norm;
        let mut out = Vec::new();
        if self.lambda_min_h < -1e-7 * s {
            out.push("H is not positive semidefinite");
        }
        if self.stationarity > 1e-6 * s {
            out.push("Hx is not zero");
        }
        if self.unit_residual > 1e-8 {
            out.push("x is not a unit vector");
        }
        if self.constraint_residual > 1e-6 {
            out.push("xᵀRx differs from 1");
        }
        if self.duality_gap > 1e-6 * (1.0 + self.objective.abs()) {
            out.push("duality gap is not zero");
        }
        out
    }

    pub fn passes(&self) -> bool {
        self.failures().is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct QecqpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    pub dual: DualPoint,
    pub certificate: Certificate,
}

/// Solves the program globally. The returned `x` has its largest-magnitude
/// entry positive.
pub fn solve(p: &QecqpProblem, opts: &SolverOptions) -> Result<QecqpSolution> {
    let dual = maximize_dual(p, opts)?;
    let x = feasible_null_point(&dual.h, &p.r, opts.tol_null)?;
    let mut x = polish_feasibility(p, &x);
    canonical_sign(&mut x);
    let certificate = certify(p, &dual, &x)?;
    Ok(QecqpSolution { objective: certificate.objective, x, dual, certificate })
}

pub fn certify(p: &QecqpProblem, dual: &DualPoint, x: &DVector<f64>) -> Result<Certificate> {
    let h_eigs = sym_eigenvalues(&dual.h)?;
    let objective = p.objective(x);
    Ok(Certificate {
        lambda_min_h: h_eigs[0],
        h_norm: h_eigs[0].abs().max(h_eigs[h_eigs.len() - 1].abs()),
        stationarity: (&dual.h * x).norm(),
        unit_residual: (x.norm_squared() - 1.0).abs(),
        constraint_residual: (quadratic_form(&p.r, x) - 1.0).abs(),
        duality_gap: (objective - dual.fval).abs(),
        objective,
    })
}

/// Sampling upper bound on the optimum for problems whose R has spectrum
/// `{0, 2}`: random Gaussian vectors are made feasible by scaling their
/// components in the two eigenspaces of R to squared norm ½ each.
pub fn oracle_min(p: &QecqpProblem, samples: usize, seed: u64) -> Result<f64> {
    if !p.has_binary_r_spectrum(1e-8) {
        return Err(Error::AssumptionViolated("oracle needs R with eigenvalues {0, 2}".into()));
    }
    let n = p.dim();
    let twos: Vec<usize> = (0..n).filter(|&k| p.r_eigen.values[k] > 1.0).collect();
    let zeros: Vec<usize> = (0..n).filter(|&k| p.r_eigen.values[k] < 1.0).collect();
    // Q expressed in the eigenbasis of R, split by block.
    let v = &p.r_eigen.vectors;
    let q_rot = v.transpose() * &p.q * v;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    let mut drawn = 0;
    let mut coords = DVector::zeros(n);
    while drawn < samples {
        for c in coords.iter_mut() {
            *c = StandardNormal.sample(&mut rng);
        }
        let norm_two: f64 = twos.iter().map(|&k| coords[k] * coords[k]).sum::<f64>().sqrt();
        let norm_zero: f64 = zeros.iter().map(|&k| coords[k] * coords[k]).sum::<f64>().sqrt();
        if norm_two < 1e-12 || norm_zero < 1e-12 {
            continue;
        }
        for &k in &twos {
            coords[k] /= norm_two * std::f64::consts::SQRT_2;
        }
        for &k in &zeros {
            coords[k] /= norm_zero * std::f64::consts::SQRT_2;
        }
        best = best.min(quadratic_form(&q_rot, &coords));
        drawn += 1;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_problem() -> QecqpProblem {
        QecqpProblem::new(
            DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]),
            DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.0])),
        )
        .unwrap()
    }

    #[test]
    fn rejects_assumption_violations() {
        let q = DMatrix::identity(2, 2);
        // all eigenvalues below one: infeasible
        assert!(QecqpProblem::new(q.clone(), DMatrix::identity(2, 2) * 0.5).is_err());
        // eigenvalue exactly one
        let r = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        assert!(QecqpProblem::new(q.clone(), r).is_err());
        // indefinite R
        let r = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -1.0]));
        assert!(QecqpProblem::new(q.clone(), r).is_err());
        // asymmetric Q
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(QecqpProblem::new(bad, DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.0]))).is_err());
    }

    #[test]
    fn feasible_null_point_fixtures() {
        let p = path_problem();
        let x = feasible_null_point(p.q(), p.r(), 1e-8).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((x[0].abs() - s).abs() < 1e-12 && (x[1].abs() - s).abs() < 1e-12);

        // H = 0 with M = R = diag(2, 0): symmetric interpolation
        let x = feasible_null_point(&DMatrix::zeros(2, 2), p.r(), 1e-8).unwrap();
        assert!((x[0] * x[0] - 0.5).abs() < 1e-12);
        assert!((x[1] * x[1] - 0.5).abs() < 1e-12);

        // M = [1] is already feasible
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 3.0]));
        let r = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 5.0]));
        let x = feasible_null_point(&h, &r, 1e-8).unwrap();
        assert!((x[0].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn null_space_is_enlarged_until_feasible() {
        // null space e₀ has bᵀRb = 0; the next eigenvector brings 2
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0, 5.0]));
        let r = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 2.0, 0.0]));
        let x = feasible_null_point(&h, &r, 1e-8).unwrap();
        assert!((quadratic_form(&r, &x) - 1.0).abs() < 1e-12);
        assert!(x[2].abs() < 1e-12);
    }

    #[test]
    fn feasible_null_point_cap() {
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0]));
        let r = DMatrix::identity(2, 2) * 3.0;
        assert!(matches!(feasible_null_point(&h, &r, 1e-8), Err(Error::InfeasibleNullSpace { cap: 2 })));
    }

    #[test]
    fn polish_restores_both_constraints() {
        let p = path_problem();
        let x = DVector::from_vec(vec![0.70, 0.72]).normalize();
        let y = polish_feasibility(&p, &x);
        assert!((y.norm_squared() - 1.0).abs() < 1e-14);
        assert!((quadratic_form(p.r(), &y) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn dual_point_fields_consistent() {
        let p = path_problem();
        let d = maximize_dual(&p, &SolverOptions { record_trace: true, ..Default::default() }).unwrap();
        assert!((d.fval + d.mu1 + d.mu2).abs() < 1e-15);
        assert!(!d.trace.is_empty());
        assert!((d.h.clone() - p.h(d.mu1, d.mu2)).abs().max() < 1e-15);
    }
}
