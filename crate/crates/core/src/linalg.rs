//! Dense symmetric matrices: cyclic Jacobi eigensolver, Moore–Penrose
//! pseudo-inverse and smallest nonzero eigenvalue.

use std::fmt;

use crate::error::{Error, Result};

/// Default rank cut, relative to the largest eigenvalue.
pub const DEFAULT_REL_TOL: f64 = 1e-9;

const MAX_SWEEPS: usize = 100;

/// Dense square matrix stored row-major, expected to be symmetric.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SymMatrix({}x{})", self.n, self.n)?;
        for i in 0..self.n {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        Ok(())
    }
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &x) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = x;
        }
        m
    }

    /// Builds from row-major data without a symmetry check; see
    /// [`SymMatrix::asymmetry`].
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                got: data.len(),
            });
        }
        Ok(SymMatrix { n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(SymMatrix { n, data })
    }

    /// `sum_k weight_k * v_k v_k^T`.
    pub fn outer_sum<'a>(n: usize, terms: impl IntoIterator<Item = (f64, &'a [f64])>) -> Self {
        let mut m = Self::zeros(n);
        for (weight, v) in terms {
            for i in 0..n {
                if v[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    m.data[i * n + j] += weight * v[i] * v[j];
                }
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        self.data[i * self.n + j] = x;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Copies the upper triangle onto the lower one.
    pub fn mirror_upper(&mut self) {
        let n = self.n;
        for i in 0..n {
            for j in 0..i {
                self.data[i * n + j] = self.data[j * n + i];
            }
        }
    }

    /// Largest `|M(i,j) - M(j,i)|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.data[i * n + j] - self.data[j * n + i]).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Plain matrix product (the result need not be symmetric).
    pub fn matmul(&self, other: &SymMatrix) -> SymMatrix {
        let n = self.n;
        let mut out = SymMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &SymMatrix, b: f64) -> SymMatrix {
        SymMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        self.combine(1.0, other, -1.0)
    }

    fn check_symmetric(&self) -> Result<()> {
        let asym = self.asymmetry();
        if asym > 1e-12 * self.max_abs().max(1.0) {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(())
    }
}

/// Eigendecomposition `M = Q diag(values) Q^T`; column `k` of `vectors`
/// (row-major `n × n`) is the eigenvector of `values[k]`.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: SymMatrix,
}

impl SymEigen {
    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn threshold(&self, rel_tol: f64) -> f64 {
        rel_tol * self.max_value().max(0.0)
    }

    /// `sum_k g(values[k]) q_k q_k^T`.
    fn reassemble(&self, g: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.values.len();
        let q = &self.vectors;
        let mut out = SymMatrix::zeros(n);
        for (k, &lam) in self.values.iter().enumerate() {
            let s = g(lam);
            if s == 0.0 {
                continue;
            }
            for i in 0..n {
                let a = s * q.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in i..n {
                    out.data[i * n + j] += a * q.get(j, k);
                }
            }
        }
        out.mirror_upper();
        out
    }

    /// Pseudo-inverse with eigenvalues at or below `rel_tol * max` cut to zero.
    pub fn pinv(&self, rel_tol: f64) -> SymMatrix {
        let thr = self.threshold(rel_tol);
        self.reassemble(|lam| if lam > thr { 1.0 / lam } else { 0.0 })
    }

    pub fn smallest_nonzero(&self, rel_tol: f64) -> Result<f64> {
        let thr = self.threshold(rel_tol);
        self.values
            .iter()
            .copied()
            .filter(|&lam| lam > thr)
            .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.min(x))))
            .ok_or(Error::ZeroMatrix)
    }

    /// Orthonormal basis (as columns) of the span of eigenvectors whose
    /// eigenvalue exceeds the rank cut.
    pub fn range_basis(&self, rel_tol: f64) -> Vec<Vec<f64>> {
        let thr = self.threshold(rel_tol);
        let n = self.values.len();
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &lam)| lam > thr)
            .map(|(k, _)| (0..n).map(|i| self.vectors.get(i, k)).collect())
            .collect()
    }
}

/// Cyclic Jacobi eigensolver for a symmetric matrix.
pub fn eigen_symmetric(m: &SymMatrix) -> Result<SymEigen> {
    m.check_symmetric()?;
    let n = m.n;
    let mut a = m.clone();
    a.mirror_upper();
    let mut v = SymMatrix::identity(n);
    let scale = a.frobenius();
    if scale == 0.0 {
        return Ok(SymEigen {
            values: vec![0.0; n],
            vectors: v,
        });
    }
    let tol = (f64::EPSILON * scale).powi(2);

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a.get(p, q).powi(2);
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (a.get(p, p), a.get(q, q));
                if apq.abs() < f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
                    a.set(p, q, 0.0);
                    a.set(q, p, 0.0);
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s);
            }
        }
    }
    let values = (0..n).map(|i| a.get(i, i)).collect();
    Ok(SymEigen { values, vectors: v })
}

fn rotate(a: &mut SymMatrix, v: &mut SymMatrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.n;
    for k in 0..n {
        let (akp, akq) = (a.data[k * n + p], a.data[k * n + q]);
        a.data[k * n + p] = c * akp - s * akq;
        a.data[k * n + q] = s * akp + c * akq;
    }
    for k in 0..n {
        let (apk, aqk) = (a.data[p * n + k], a.data[q * n + k]);
        a.data[p * n + k] = c * apk - s * aqk;
        a.data[q * n + k] = s * apk + c * aqk;
    }
    a.data[p * n + q] = 0.0;
    a.data[q * n + p] = 0.0;
    for k in 0..n {
        let (vkp, vkq) = (v.data[k * n + p], v.data[k * n + q]);
        v.data[k * n + p] = c * vkp - s * vkq;
        v.data[k * n + q] = s * vkp + c * vkq;
    }
}

/// Moore–Penrose pseudo-inverse of a symmetric PSD matrix.
pub fn pinv_symmetric(m: &SymMatrix, rel_tol: f64) -> Result<SymMatrix> {
    Ok(eigen_symmetric(m)?.pinv(rel_tol))
}

/// Smallest eigenvalue above `rel_tol * max eigenvalue`.
pub fn smallest_nonzero_eigenvalue(m: &SymMatrix, rel_tol: f64) -> Result<f64> {
    eigen_symmetric(m)?.smallest_nonzero(rel_tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &SymMatrix, b: &SymMatrix, tol: f64) -> bool {
        a.sub(b).frobenius() <= tol
    }

    #[test]
    fn pinv_examples() {
        let i3 = SymMatrix::identity(3);
        assert!(close(&pinv_symmetric(&i3, DEFAULT_REL_TOL).unwrap(), &i3, 1e-14));

        let d = SymMatrix::diagonal(&[2.0, 0.0]);
        let expected = SymMatrix::diagonal(&[0.5, 0.0]);
        assert!(close(&pinv_symmetric(&d, DEFAULT_REL_TOL).unwrap(), &expected, 1e-14));

        let ones = SymMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let quarter = SymMatrix::from_rows(&[vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        assert!(close(&pinv_symmetric(&ones, DEFAULT_REL_TOL).unwrap(), &quarter, 1e-14));
    }

    #[test]
    fn smallest_nonzero_examples() {
        let d = SymMatrix::diagonal(&[3.0, 1.0, 0.0]);
        assert_eq!(smallest_nonzero_eigenvalue(&d, DEFAULT_REL_TOL).unwrap(), 1.0);
        assert_eq!(
            smallest_nonzero_eigenvalue(&SymMatrix::identity(4), DEFAULT_REL_TOL).unwrap(),
            1.0
        );
        assert!(matches!(
            smallest_nonzero_eigenvalue(&SymMatrix::zeros(3), DEFAULT_REL_TOL),
            Err(Error::ZeroMatrix)
        ));
    }

    #[test]
    fn rejects_asymmetric_input() {
        let m = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(pinv_symmetric(&m, DEFAULT_REL_TOL), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn eigen_reconstructs_input() {
        let m = SymMatrix::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, -0.25],
            vec![0.5, -0.25, 2.0],
        ])
        .unwrap();
        let e = eigen_symmetric(&m).unwrap();
        let back = e.reassemble(|x| x);
        assert!(close(&back, &m, 1e-12));
        let trace: f64 = e.values.iter().sum();
        assert!((trace - 9.0).abs() < 1e-12);
    }
}
