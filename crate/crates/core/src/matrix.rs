//! Dense square matrices, the validated interaction-matrix newtype, and the
//! norms used throughout the crate.

use std::ops::{Deref, Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense `n x n` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    row,
                    len: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(SquareMatrix { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        SquareMatrix { n, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn scaled(&self, s: f64) -> SquareMatrix {
        SquareMatrix {
            n: self.n,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: f64, other: &SquareMatrix) -> Result<SquareMatrix> {
        check_dims(self, other)?;
        Ok(SquareMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + s * b)
                .collect(),
        })
    }

    pub fn transpose(&self) -> SquareMatrix {
        SquareMatrix::from_fn(self.n, |i, j| self[(j, i)])
    }

    /// `y = self * x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Maximum absolute row sum.
    pub fn infinity_norm(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (i + 1..self.n).all(|j| self[(i, j)] == self[(j, i)]))
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_dims(a: &SquareMatrix, b: &SquareMatrix) -> Result<()> {
    if a.n != b.n {
        return Err(Error::DimensionMismatch {
            expected: a.n,
            got: b.n,
        });
    }
    Ok(())
}

/// Symmetric, zero-diagonal interaction matrix.
///
/// Symmetry is exact (bit-equal mirrored entries); the constructors are the
/// only way to obtain one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "MatrixFile", try_from = "MatrixFile")]
pub struct InteractionMatrix(SquareMatrix);

/// On-disk form of an interaction matrix: strictly-upper-triangle nonzeros
/// as `[i, j, value]` triples. Loading mirrors them to the lower triangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub n: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl From<InteractionMatrix> for MatrixFile {
    fn from(j: InteractionMatrix) -> Self {
        MatrixFile {
            n: j.dim(),
            entries: j.upper_entries(),
        }
    }
}

impl TryFrom<MatrixFile> for InteractionMatrix {
    type Error = Error;
    fn try_from(f: MatrixFile) -> Result<Self> {
        InteractionMatrix::from_upper_entries(f.n, &f.entries)
    }
}

impl InteractionMatrix {
    pub fn zeros(n: usize) -> Self {
        InteractionMatrix(SquareMatrix::zeros(n))
    }

    /// Builds a matrix from strictly-upper-triangle entries, mirroring them
    /// to the lower triangle. Repeated pairs accumulate.
    pub fn from_upper_entries(n: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let mut m = SquareMatrix::zeros(n);
        for &(i, j, v) in entries {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, n });
            }
            if j >= n {
                return Err(Error::IndexOutOfRange { index: j, n });
            }
            if !v.is_finite() {
                return Err(Error::NonFiniteInput { index: i * n + j });
            }
            if i == j {
                continue;
            }
            m[(i, j)] += v;
            m[(j, i)] = m[(i, j)];
        }
        Ok(InteractionMatrix(m))
    }

    /// Wraps a matrix that the caller guarantees to be exactly symmetric with
    /// zero diagonal. Internal use by linear combinations of valid matrices.
    pub(crate) fn from_trusted(m: SquareMatrix) -> Self {
        debug_assert!(m.is_symmetric());
        debug_assert!((0..m.dim()).all(|i| m[(i, i)] == 0.0));
        InteractionMatrix(m)
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> SquareMatrix {
        self.0
    }

    pub fn scaled(&self, s: f64) -> InteractionMatrix {
        InteractionMatrix(self.0.scaled(s))
    }

    /// `self + s * other`; stays symmetric because the operation is applied
    /// entrywise to two exactly symmetric inputs.
    pub fn add_scaled(&self, s: f64, other: &InteractionMatrix) -> Result<InteractionMatrix> {
        self.0.add_scaled(s, &other.0).map(InteractionMatrix)
    }

    /// Strictly-upper-triangle nonzeros in row-major order.
    pub fn upper_entries(&self) -> Vec<(usize, usize, f64)> {
        let n = self.dim();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let v = self[(i, j)];
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    /// Simultaneous row/column permutation: `out[p[i]][p[j]] = self[i][j]`.
    pub fn permuted(&self, perm: &[usize]) -> InteractionMatrix {
        let n = self.dim();
        let mut m = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(perm[i], perm[j])] = self[(i, j)];
            }
        }
        InteractionMatrix(m)
    }
}

impl Deref for InteractionMatrix {
    type Target = SquareMatrix;
    fn deref(&self) -> &SquareMatrix {
        &self.0
    }
}

/// Symmetrizes and validates a raw matrix.
///
/// Off-diagonal pairs are replaced by their average when their gap is within
/// `tol`; diagonal entries within `tol` of zero are zeroed.
pub fn validate_interaction(m: &SquareMatrix, tol: f64) -> Result<InteractionMatrix> {
    let n = m.dim();
    let mut out = SquareMatrix::zeros(n);
    let mut worst: Option<(usize, usize, f64)> = None;
    for i in 0..n {
        let d = m[(i, i)];
        if !d.is_finite() || d.abs() > tol {
            return Err(Error::Diagonal { i, value: d, tol });
        }
        for j in i + 1..n {
            let (a, b) = (m[(i, j)], m[(j, i)]);
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::NonFiniteInput { index: i * n + j });
            }
            let gap = (a - b).abs();
            if gap > tol && worst.is_none_or(|(_, _, g)| gap > g) {
                worst = Some((i, j, gap));
            }
            let avg = if a == b { a } else { 0.5 * (a + b) };
            out[(i, j)] = avg;
            out[(j, i)] = avg;
        }
    }
    if let Some((i, j, max_gap)) = worst {
        return Err(Error::Asymmetry { i, j, max_gap, tol });
    }
    Ok(InteractionMatrix(out))
}

pub fn infinity_norm(j: &SquareMatrix) -> f64 {
    j.infinity_norm()
}

pub fn frobenius_norm(j: &SquareMatrix) -> f64 {
    j.frobenius_norm()
}

/// `<A, B> = sum_ij A_ij B_ij`.
pub fn trace_inner(a: &SquareMatrix, b: &SquareMatrix) -> Result<f64> {
    check_dims(a, b)?;
    Ok(dot(&a.data, &b.data))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralNorm {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest absolute eigenvalue of a symmetric matrix by power iteration.
///
/// The estimate at each step is `||A v||` for the current unit vector `v`,
/// which converges to the spectral radius even when `+lambda` and `-lambda`
/// are both dominant.
pub fn spectral_norm(m: &SquareMatrix, tol: f64, max_iter: usize) -> SpectralNorm {
    let n = m.dim();
    if n == 0 || m.max_abs() == 0.0 {
        return SpectralNorm {
            value: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    // Deterministic start with no special alignment to coordinate axes.
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_749_895).fract())
        .collect();
    normalize(&mut v);
    let mut estimate = 0.0;
    for it in 1..=max_iter {
        let mut w = m.mul_vec(&v);
        let norm = normalize(&mut w);
        if norm == 0.0 {
            return SpectralNorm {
                value: 0.0,
                iterations: it,
                converged: true,
            };
        }
        // Two steps of A keep the iterate inside the dominant |lambda| space
        // without the sign oscillation of a single step.
        let mut w2 = m.mul_vec(&w);
        let norm2 = normalize(&mut w2);
        let next = (norm * norm2).sqrt();
        let done = (next - estimate).abs() <= tol * next;
        estimate = next;
        v = w2;
        if done {
            return SpectralNorm {
                value: estimate,
                iterations: it,
                converged: true,
            };
        }
    }
    SpectralNorm {
        value: estimate,
        iterations: max_iter,
        converged: false,
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}
