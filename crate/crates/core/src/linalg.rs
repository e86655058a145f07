//! Dense symmetric helpers shared by the solver modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigendecomposition with eigenvalues sorted ascending and the eigenvector
/// columns permuted to match.
#[derive(Debug, Clone)]
pub struct SortedEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl SortedEigen {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn vector(&self, k: usize) -> DVector<f64> {
        self.vectors.column(k).into_owned()
    }

    /// Largest absolute eigenvalue, i.e. the spectral norm.
    pub fn spectral_norm(&self) -> f64 {
        self.min().abs().max(self.max().abs())
    }
}

pub fn sym_eigen(m: &DMatrix<f64>) -> Result<SortedEigen> {
    let n = m.nrows();
    if n == 0 {
        return Ok(SortedEigen {
            values: Vec::new(),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::try_new(symmetrized(m), f64::EPSILON, 1000 * n.max(10))
        .ok_or(Error::EigenNonConvergence(n))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(SortedEigen { values, vectors })
}

pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut v: Vec<f64> = symmetrized(m).symmetric_eigenvalues().iter().copied().collect();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigenNonConvergence(m.nrows()));
    }
    v.sort_by(f64::total_cmp);
    Ok(v)
}

pub fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Flips `v` so that its largest-magnitude entry (first one on ties) is
/// positive.
pub fn canonical_sign(v: &mut DVector<f64>) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.len() > 0 && v[best] < 0.0 {
        v.neg_mut();
    }
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// columns of `cols` (assumed orthonormal), computed from the trailing
/// columns of a full Householder QR factor.
pub fn orthogonal_complement(cols: &DMatrix<f64>) -> DMatrix<f64> {
    let n = cols.nrows();
    let m = cols.ncols();
    if m == 0 {
        return DMatrix::identity(n, n);
    }
    let mut work = cols.clone();
    let mut reflectors: Vec<DVector<f64>> = Vec::with_capacity(m);
    for k in 0..m.min(n) {
        let mut v = DVector::zeros(n);
        let mut norm_sq = 0.0;
        for i in k..n {
            v[i] = work[(i, k)];
            norm_sq += v[i] * v[i];
        }
        let norm = norm_sq.sqrt();
        if norm == 0.0 {
            reflectors.push(DVector::zeros(n));
            continue;
        }
        let alpha = if v[k] >= 0.0 { -norm } else { norm };
        v[k] -= alpha;
        let vnorm = v.norm();
        if vnorm > 0.0 {
            v /= vnorm;
        }
        for j in k..m {
            let dot: f64 = (k..n).map(|i| v[i] * work[(i, j)]).sum();
            for i in k..n {
                work[(i, j)] -= 2.0 * dot * v[i];
            }
        }
        reflectors.push(v);
    }
    let rank = reflectors.len();
    let mut out = DMatrix::zeros(n, n - rank);
    for (c, j) in (rank..n).enumerate() {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        for v in reflectors.iter().rev() {
            let dot = v.dot(&e);
            e.axpy(-2.0 * dot, v, 1.0);
        }
        out.set_column(c, &e);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_ascending() {
        let m = DMatrix::from_row_slice(3, 3, &[3.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 2.0]);
        let e = sym_eigen(&m).unwrap();
        assert_eq!(e.values, vec![-1.0, 2.0, 3.0]);
        assert!((e.vector(0)[1].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn complement_is_orthonormal_and_orthogonal() {
        let mut cols = DMatrix::zeros(4, 2);
        cols.set_column(0, &DVector::from_element(4, 0.5));
        cols.set_column(1, &DVector::from_vec(vec![0.5, -0.5, 0.5, -0.5]));
        let c = orthogonal_complement(&cols);
        assert_eq!(c.ncols(), 2);
        let gram = c.transpose() * &c;
        assert!((gram - DMatrix::identity(2, 2)).abs().max() < 1e-14);
        assert!((cols.transpose() * &c).abs().max() < 1e-14);
    }

    #[test]
    fn canonical_sign_flips() {
        let mut v = DVector::from_vec(vec![0.1, -0.9, 0.3]);
        canonical_sign(&mut v);
        assert!(v[1] > 0.0);
    }
}
