//! Graph Fourier basis with the generalized spectral folding property
//! `JU = UΦ`.
//!
//! Columns are produced in pairs `{u, Ju}`: `u` is the smoothest unit
//! vector in the current subspace with `uᵀJu = 0`, found by solving a
//! reduced QECQP, and the subspace then shrinks to the orthogonal
//! complement of both. The subspace stays J-invariant, so the compressed
//! sampling matrix `AᵀJA` has eigenvalues in `{−1, 1}`; once they are all
//! equal no feasible vector remains and the leftover subspace is filled
//! with eigenvectors of `AᵀLA`. Columns are finally sorted by Dirichlet
//! energy.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{quadratic_form, LaplacianMatrix, Signal};
use crate::linalg::{canonical_sign, max_abs, orthogonal_complement, sym_eigen, sym_eigenvalues, symmetrized};
use crate::qecqp::{self, Certificate, QecqpProblem, SolverOptions, TracePoint};
use crate::sampling::SamplingPattern;

/// Symmetric signed involution: `Φ(i, π(i)) = sign(i)`, with
/// `π ∘ π = id` and `sign(i) = sign(π(i))`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedPermutation {
    perm: Vec<usize>,
    signs: Vec<i8>,
}

impl SignedPermutation {
    pub fn new(perm: Vec<usize>, signs: Vec<i8>) -> Result<Self> {
        let n = perm.len();
        if signs.len() != n {
            return Err(Error::SignedPermutation(format!("{} signs for {} indices", signs.len(), n)));
        }
        for i in 0..n {
            let j = perm[i];
            if j >= n {
                return Err(Error::SignedPermutation(format!("index {j} out of range")));
            }
            if perm[j] != i {
                return Err(Error::SignedPermutation(format!("not an involution at {i}")));
            }
            if signs[i].abs() != 1 {
                return Err(Error::SignedPermutation(format!("sign {} at {i}", signs[i])));
            }
            if signs[i] != signs[j] {
                return Err(Error::SignedPermutation(format!("not symmetric at ({i}, {j})")));
            }
        }
        Ok(SignedPermutation { perm, signs })
    }

    pub fn identity(n: usize) -> Self {
        SignedPermutation { perm: (0..n).collect(), signs: vec![1; n] }
    }

    /// Rounds entries with magnitude at least ½ to their sign and the rest
    /// to zero, then validates the result.
    pub fn from_matrix_rounded(m: &DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        let mut perm = vec![usize::MAX; n];
        let mut signs = vec![0i8; n];
        for i in 0..n {
            for j in 0..n {
                if m[(i, j)].abs() >= 0.5 {
                    if perm[i] != usize::MAX {
                        return Err(Error::SignedPermutation(format!("row {i} has two nonzeros")));
                    }
                    perm[i] = j;
                    signs[i] = if m[(i, j)] > 0.0 { 1 } else { -1 };
                }
            }
            if perm[i] == usize::MAX {
                return Err(Error::SignedPermutation(format!("row {i} has no nonzero")));
            }
        }
        Self::new(perm, signs)
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn partner(&self, i: usize) -> usize {
        self.perm[i]
    }

    pub fn sign(&self, i: usize) -> i8 {
        self.signs[i]
    }

    /// Pairs `(i, j)` with `i < j` and `Φ(i, j) ≠ 0`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.perm.iter().enumerate().filter(|(i, j)| i < j).map(|(i, &j)| (i, j))
    }

    pub fn fixed_points(&self) -> impl Iterator<Item = usize> + '_ {
        self.perm.iter().enumerate().filter(|(i, j)| i == *j).map(|(i, _)| i)
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, self.perm[i])] = self.signs[i] as f64;
        }
        m
    }

    /// `Φh`.
    pub fn apply(&self, h: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.len(), |i, _| self.signs[i] as f64 * h[self.perm[i]])
    }

    /// `|Φ|h`, the entrywise-absolute permutation.
    pub fn apply_abs(&self, h: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.len(), |i, _| h[self.perm[i]])
    }
}

/// Orthonormal columns spanning the current J-invariant subspace.
#[derive(Debug, Clone)]
pub struct SubspaceBasis(DMatrix<f64>);

impl SubspaceBasis {
    pub fn new(a: DMatrix<f64>) -> Self {
        SubspaceBasis(a)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn orthonormality_error(&self) -> f64 {
        let l = self.dim();
        max_abs(&(self.0.transpose() * &self.0 - DMatrix::identity(l, l)))
    }

    /// `‖(I − AAᵀ)JA‖_max`.
    pub fn invariance_error(&self, sign: &DVector<f64>) -> f64 {
        let ja = DMatrix::from_fn(self.0.nrows(), self.dim(), |i, j| sign[i] * self.0[(i, j)]);
        let proj = &self.0 * (self.0.transpose() * &ja);
        max_abs(&(ja - proj))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubspaceClass {
    /// Both eigenvalues ±1 occur; the feasible set is non-empty.
    Mixed,
    AllPlus,
    AllMinus,
}

/// Classifies a subspace by the eigenvalues of `AᵀJA`.
pub fn classify_subspace(a: &SubspaceBasis, sign: &DVector<f64>, tol: f64) -> Result<SubspaceClass> {
    if a.dim() == 0 {
        return Err(Error::InvalidParameter("cannot classify an empty subspace".into()));
    }
    let eig = sym_eigenvalues(&compressed_sampling(a.matrix(), sign))?;
    let mut plus = false;
    let mut minus = false;
    for &v in &eig {
        if (v - 1.0).abs() <= tol {
            plus = true;
        } else if (v + 1.0).abs() <= tol {
            minus = true;
        } else {
            return Err(Error::BrokenInvariance { eigenvalue: v });
        }
    }
    Ok(match (plus, minus) {
        (true, true) => SubspaceClass::Mixed,
        (true, false) => SubspaceClass::AllPlus,
        _ => SubspaceClass::AllMinus,
    })
}

/// `AᵀJA`.
fn compressed_sampling(a: &DMatrix<f64>, sign: &DVector<f64>) -> DMatrix<f64> {
    let ja = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| sign[i] * a[(i, j)]);
    symmetrized(&(a.transpose() * ja))
}

/// Orthonormal basis of the orthogonal complement of the given orthonormal
/// columns in `ℝⁿ`.
pub fn complement_basis(built: &[DVector<f64>], n: usize) -> SubspaceBasis {
    let mut cols = DMatrix::zeros(n, built.len());
    for (k, c) in built.iter().enumerate() {
        cols.set_column(k, c);
    }
    SubspaceBasis(orthogonal_complement(&cols))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    /// Minimizer of a reduced QECQP.
    Optimized,
    /// `Ju` for the optimized column of the same step.
    Folded,
    /// Eigenvector of `AᵀLA` on the final single-signed subspace.
    Leftover,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnOrigin {
    /// Index of the step that produced the column.
    pub step: usize,
    pub kind: ColumnKind,
}

#[derive(Debug, Clone)]
pub struct FourierBasis {
    u: DMatrix<f64>,
    energies: Vec<f64>,
    phi: SignedPermutation,
    pattern: SamplingPattern,
    origins: Vec<ColumnOrigin>,
}

impl FourierBasis {
    /// Reassembles a basis from stored parts, checking the folding identity.
    pub fn from_parts(
        u: DMatrix<f64>,
        energies: Vec<f64>,
        phi: SignedPermutation,
        pattern: SamplingPattern,
    ) -> Result<Self> {
        let n = pattern.n();
        if u.nrows() != n || u.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: u.ncols() });
        }
        if energies.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: energies.len() });
        }
        if phi.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: phi.len() });
        }
        let origins = vec![ColumnOrigin { step: 0, kind: ColumnKind::Leftover }; n];
        Ok(FourierBasis { u, energies, phi, pattern, origins })
    }

    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn column(&self, k: usize) -> DVector<f64> {
        self.u.column(k).into_owned()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn phi(&self) -> &SignedPermutation {
        &self.phi
    }

    pub fn pattern(&self) -> &SamplingPattern {
        &self.pattern
    }

    pub fn origins(&self) -> &[ColumnOrigin] {
        &self.origins
    }

    /// `‖UᵀU − I‖_max`.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.n();
        max_abs(&(self.u.transpose() * &self.u - DMatrix::identity(n, n)))
    }

    /// `‖JU − UΦ‖_max`.
    pub fn folding_error(&self) -> f64 {
        let sign = self.pattern.sign();
        let ju = DMatrix::from_fn(self.n(), self.n(), |i, j| sign[i] * self.u[(i, j)]);
        max_abs(&(ju - &self.u * self.phi.to_matrix()))
    }

    pub fn forward(&self, f: &Signal) -> Result<Signal> {
        transform(self, f, Direction::Forward)
    }

    pub fn inverse(&self, f: &Signal) -> Result<Signal> {
        transform(self, f, Direction::Inverse)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Forward `Uᵀf` or inverse `Uf̂` graph Fourier transform.
pub fn transform(basis: &FourierBasis, f: &Signal, direction: Direction) -> Result<Signal> {
    f.check_len(basis.n())?;
    Ok(Signal::new(match direction {
        Direction::Forward => basis.u.tr_mul(f.as_vector()),
        Direction::Inverse => &basis.u * f.as_vector(),
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisOptions {
    pub solver: SolverOptions,
    /// Tolerance on the eigenvalues of `AᵀJA` around ±1.
    pub classify_tol: f64,
    /// Largest allowed `‖JU − UΦ‖_max` after rounding Φ.
    pub folding_tol: f64,
}

impl Default for BasisOptions {
    fn default() -> Self {
        BasisOptions { solver: SolverOptions::default(), classify_tol: 1e-6, folding_tol: 1e-6 }
    }
}

/// Diagnostics for one QECQP step of the basis construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepReport {
    pub step: usize,
    pub subspace_dim: usize,
    pub certificate: Certificate,
    pub mu1: f64,
    pub mu2: f64,
    pub trace: Vec<TracePoint>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BasisReport {
    pub steps: Vec<StepReport>,
    pub leftover_class: Option<SubspaceClass>,
    pub leftover_dim: usize,
}

pub fn compute_basis(l: &LaplacianMatrix, p: &SamplingPattern, opts: &BasisOptions) -> Result<FourierBasis> {
    compute_basis_with_report(l, p, opts).map(|(b, _)| b)
}

pub fn compute_basis_with_report(
    l: &LaplacianMatrix,
    p: &SamplingPattern,
    opts: &BasisOptions,
) -> Result<(FourierBasis, BasisReport)> {
    let n = l.n();
    if p.n() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: p.n() });
    }
    let sign = p.sign();
    let lm = l.matrix();
    let mut columns: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut origins: Vec<ColumnOrigin> = Vec::with_capacity(n);
    let mut report = BasisReport::default();

    let mut step = 0;
    while columns.len() < n {
        let a = complement_basis(&columns, n);
        let class = classify_subspace(&a, sign, opts.classify_tol)?;
        let am = a.matrix();
        let q = symmetrized(&(am.transpose() * lm * am));
        if class != SubspaceClass::Mixed {
            let eig = sym_eigen(&q)?;
            for k in 0..a.dim() {
                let mut v = am * eig.vector(k);
                v.normalize_mut();
                canonical_sign(&mut v);
                columns.push(v);
                origins.push(ColumnOrigin { step, kind: ColumnKind::Leftover });
            }
            report.leftover_class = Some(class);
            report.leftover_dim = a.dim();
            break;
        }

        let mut r = compressed_sampling(am, sign);
        for i in 0..a.dim() {
            r[(i, i)] += 1.0;
        }
        let problem = QecqpProblem::new(q, r)?;
        let sol = qecqp::solve(&problem, &opts.solver)?;
        let mut u = balance(&(am * &sol.x), sign);
        canonical_sign(&mut u);
        let ju = u.component_mul(sign);
        report.steps.push(StepReport {
            step,
            subspace_dim: a.dim(),
            certificate: sol.certificate,
            mu1: sol.dual.mu1,
            mu2: sol.dual.mu2,
            trace: sol.dual.trace,
        });
        columns.push(u);
        origins.push(ColumnOrigin { step, kind: ColumnKind::Optimized });
        columns.push(ju);
        origins.push(ColumnOrigin { step, kind: ColumnKind::Folded });
        step += 1;
    }

    let energies: Vec<f64> = columns.iter().map(|c| quadratic_form(lm, c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]));

    let mut u = DMatrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        u.set_column(k, &columns[src]);
    }
    let energies = order.iter().map(|&k| energies[k]).collect();
    let origins = order.iter().map(|&k| origins[k]).collect();

    let ju = DMatrix::from_fn(n, n, |i, j| sign[i] * u[(i, j)]);
    let phi = SignedPermutation::from_matrix_rounded(&(u.transpose() * ju))?;
    let basis = FourierBasis { u, energies, phi, pattern: p.clone(), origins };
    let err = basis.folding_error();
    if err > opts.folding_tol {
        return Err(Error::SignedPermutation(format!("folding residual {err:.3e} after rounding")));
    }
    Ok((basis, report))
}

/// Rescales the low and high channel parts of `u` to squared norm ½ each,
/// so `uᵀu = 1` and `uᵀJu = 0` hold to rounding.
fn balance(u: &DVector<f64>, sign: &DVector<f64>) -> DVector<f64> {
    let low: f64 = u.iter().zip(sign.iter()).filter(|(_, s)| **s > 0.0).map(|(x, _)| x * x).sum();
    let high: f64 = u.iter().zip(sign.iter()).filter(|(_, s)| **s < 0.0).map(|(x, _)| x * x).sum();
    if low < 1e-14 || high < 1e-14 {
        return u.normalize();
    }
    let (sl, sh) = ((0.5 / low).sqrt(), (0.5 / high).sqrt());
    DVector::from_fn(u.len(), |i, _| u[i] * if sign[i] > 0.0 { sl } else { sh })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, laplacian, GraphKind};

    #[test]
    fn classify_fixtures() {
        let alt = SamplingPattern::alternating(4).unwrap();
        let full = SubspaceBasis::new(DMatrix::identity(4, 4));
        assert_eq!(classify_subspace(&full, alt.sign(), 1e-9).unwrap(), SubspaceClass::Mixed);

        let mut low = DMatrix::zeros(4, 2);
        low[(0, 0)] = 1.0;
        low[(2, 1)] = 1.0;
        let low = SubspaceBasis::new(low);
        assert_eq!(classify_subspace(&low, alt.sign(), 1e-9).unwrap(), SubspaceClass::AllPlus);

        let mut high = DMatrix::zeros(4, 1);
        high[(3, 0)] = 1.0;
        assert_eq!(
            classify_subspace(&SubspaceBasis::new(high), alt.sign(), 1e-9).unwrap(),
            SubspaceClass::AllMinus
        );

        let mut mixed = DMatrix::zeros(4, 2);
        mixed[(0, 0)] = 1.0;
        mixed[(1, 1)] = 1.0;
        assert_eq!(
            classify_subspace(&SubspaceBasis::new(mixed), alt.sign(), 1e-9).unwrap(),
            SubspaceClass::Mixed
        );

        let broken = SubspaceBasis::new(DMatrix::from_column_slice(4, 1, &[0.6, 0.8, 0.0, 0.0]));
        assert!(matches!(classify_subspace(&broken, alt.sign(), 1e-9), Err(Error::BrokenInvariance { .. })));
    }

    #[test]
    fn complement_basis_fixtures() {
        let a = complement_basis(&[], 3);
        assert_eq!(a.matrix(), &DMatrix::identity(3, 3));

        let built: Vec<DVector<f64>> = (0..3).map(|k| DMatrix::<f64>::identity(3, 3).column(k).into_owned()).collect();
        assert_eq!(complement_basis(&built, 3).dim(), 0);

        let built = vec![
            DVector::from_element(4, 0.5),
            DVector::from_vec(vec![0.5, -0.5, 0.5, -0.5]),
        ];
        let a = complement_basis(&built, 4);
        assert_eq!(a.dim(), 2);
        assert!(a.orthonormality_error() < 1e-14);
        let alt = SamplingPattern::alternating(4).unwrap();
        assert!(a.invariance_error(alt.sign()) < 1e-14);
    }

    #[test]
    fn signed_permutation_validation_and_identity() {
        assert!(SignedPermutation::new(vec![1, 0, 2], vec![1, 1, -1]).is_ok());
        assert!(SignedPermutation::new(vec![1, 2, 0], vec![1, 1, 1]).is_err());
        assert!(SignedPermutation::new(vec![1, 0], vec![1, -1]).is_err());
        let phi = SignedPermutation::new(vec![2, 1, 0], vec![1, -1, 1]).unwrap();
        let m = phi.to_matrix();
        assert_eq!(&m * &m, DMatrix::identity(3, 3));
        assert_eq!(m, m.transpose());
        // Φ·diag(h)·Φ = diag(|Φ|h)
        let h = DVector::from_vec(vec![0.3, 1.7, 2.0]);
        let lhs = &m * DMatrix::from_diagonal(&h) * &m;
        assert_eq!(lhs, DMatrix::from_diagonal(&phi.apply_abs(&h)));
        assert_eq!(phi.pairs().collect::<Vec<_>>(), vec![(0, 2)]);
        assert_eq!(phi.fixed_points().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn two_path_basis() {
        let g = generate(GraphKind::Path { n: 2 }, 0).unwrap();
        let p = SamplingPattern::from_keep_low(2, vec![0]).unwrap();
        let b = compute_basis(&laplacian(&g), &p, &BasisOptions::default()).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((b.energies()[0] - 0.0).abs() < 1e-10);
        assert!((b.energies()[1] - 2.0).abs() < 1e-10);
        assert!((b.column(0) - DVector::from_vec(vec![s, s])).abs().max() < 1e-10);
        assert!((b.column(1) - DVector::from_vec(vec![s, -s])).abs().max() < 1e-10);
        assert_eq!(b.phi().partner(0), 1);
    }

    #[test]
    fn trivial_sampling_is_unrepresentable() {
        assert!(SamplingPattern::from_keep_low(3, vec![0, 1, 2]).is_err());
    }

    #[test]
    fn transform_round_trip() {
        let g = generate(GraphKind::RandomGeometric { n: 12, radius: 0.5 }, 4).unwrap();
        let l = laplacian(&g);
        let p = crate::sampling::greedy_max_cut(&l).unwrap();
        let b = compute_basis(&l, &p, &BasisOptions::default()).unwrap();
        let f = Signal::from((0..12).map(|i| (i as f64 * 0.7).sin()).collect::<Vec<_>>());
        let fh = b.forward(&f).unwrap();
        assert!((fh.norm() - f.norm()).abs() < 1e-12);
        let back = b.inverse(&fh).unwrap();
        assert!(f.relative_error(&back) < 1e-12);
        let e3 = b.forward(&Signal::new(b.column(3))).unwrap();
        for (k, v) in e3.values().iter().enumerate() {
            assert!((v - if k == 3 { 1.0 } else { 0.0 }).abs() < 1e-10);
        }
        assert!(b.forward(&Signal::zeros(5)).is_err());
    }
}
