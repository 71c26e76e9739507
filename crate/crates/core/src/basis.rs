//! Trace-orthonormal bases of the span of `J_1..J_k`, coordinates, and the
//! parameter-recovery diagnostics.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{trace_inner, InteractionMatrix, SquareMatrix};

pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Coordinates in the orthonormal basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BetaVector(pub Vec<f64>);

impl BetaVector {
    pub fn zeros(k: usize) -> Self {
        BetaVector(vec![0.0; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|b| b * b).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixBasis {
    raw: Vec<InteractionMatrix>,
    ortho: Vec<InteractionMatrix>,
    /// Row `i` holds the raw coordinates of `ortho[i]`.
    change: Vec<Vec<f64>>,
    /// Indices of raw members dropped as numerically dependent.
    dropped: Vec<usize>,
    rank_tol: f64,
}

impl MatrixBasis {
    pub fn raw(&self) -> &[InteractionMatrix] {
        &self.raw
    }

    pub fn ortho(&self) -> &[InteractionMatrix] {
        &self.ortho
    }

    pub fn change(&self) -> &[Vec<f64>] {
        &self.change
    }

    pub fn dropped(&self) -> &[usize] {
        &self.dropped
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    /// `k'`, the dimension of the span.
    pub fn rank(&self) -> usize {
        self.ortho.len()
    }

    pub fn dim(&self) -> usize {
        self.raw[0].dim()
    }

    pub fn is_full_rank(&self) -> bool {
        self.dropped.is_empty()
    }

    /// Gram matrix of the orthonormal family; the identity up to rounding.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        gram_matrix(&self.ortho)
    }

    /// Converts orthonormal coordinates to raw coefficients `b` with
    /// `sum_i beta_i A_i = sum_j b_j J_j`. Dropped raw members get 0.
    pub fn to_raw(&self, beta: &BetaVector) -> Result<Vec<f64>> {
        self.check_len(beta)?;
        let mut b = vec![0.0; self.raw.len()];
        for (row, &coef) in self.change.iter().zip(&beta.0) {
            for (bj, c) in b.iter_mut().zip(row) {
                *bj += coef * c;
            }
        }
        Ok(b)
    }

    /// Orthonormal coordinates of `sum_j b_j J_j`.
    pub fn from_raw(&self, b: &[f64]) -> Result<BetaVector> {
        if b.len() != self.raw.len() {
            return Err(Error::LengthMismatch {
                expected: self.raw.len(),
                got: b.len(),
            });
        }
        let j = combine_raw(&self.raw, b)?;
        Ok(project(self, &j)?.0)
    }

    fn check_len(&self, beta: &BetaVector) -> Result<()> {
        if beta.len() != self.rank() {
            return Err(Error::LengthMismatch {
                expected: self.rank(),
                got: beta.len(),
            });
        }
        Ok(())
    }
}

fn gram_matrix(ms: &[InteractionMatrix]) -> Vec<Vec<f64>> {
    ms.iter()
        .map(|a| ms.iter().map(|b| trace_inner(a, b).expect("same shape")).collect())
        .collect()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

fn upper_mirror(n: usize, data: &[f64]) -> SquareMatrix {
    // The arithmetic is entrywise on symmetric inputs, but rounding in the
    // two triangles is identical only if we copy one onto the other.
    let mut m = SquareMatrix::from_fn(n, |i, j| data[i * n + j]);
    for i in 0..n {
        m[(i, i)] = 0.0;
        for j in i + 1..n {
            m[(j, i)] = m[(i, j)];
        }
    }
    m
}

/// Modified Gram–Schmidt under the trace inner product, with one full
/// re-orthogonalization pass.
///
/// Members whose residual falls below `rank_tol * ||J_m||_F` are dropped.
/// Each output is scaled so its first nonzero upper-triangle entry (row-major)
/// is positive.
pub fn gram_schmidt(raw: &[InteractionMatrix], rank_tol: f64) -> Result<MatrixBasis> {
    let Some(first) = raw.first() else {
        return Err(Error::AllDegenerate);
    };
    let n = first.dim();
    if let Some(bad) = raw.iter().find(|m| m.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: bad.dim(),
        });
    }
    let k = raw.len();
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    let mut change: Vec<Vec<f64>> = Vec::new();
    let mut dropped = Vec::new();
    for (m, jm) in raw.iter().enumerate() {
        let input_norm = jm.frobenius_norm();
        let mut v = jm.as_slice().to_vec();
        let mut coef = vec![0.0; k];
        coef[m] = 1.0;
        for _pass in 0..2 {
            for (a, c) in ortho.iter().zip(&change) {
                let proj: f64 = v.iter().zip(a).map(|(x, y)| x * y).sum();
                axpy(&mut v, -proj, a);
                axpy(&mut coef, -proj, c);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if input_norm == 0.0 || norm <= rank_tol * input_norm {
            dropped.push(m);
            continue;
        }
        let scale = 1.0 / norm;
        v.iter_mut().for_each(|x| *x *= scale);
        coef.iter_mut().for_each(|x| *x *= scale);
        let threshold = 1e-12 * v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let lead = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| v[i * n + j])
            .find(|x| x.abs() > threshold)
            .unwrap_or(1.0);
        if lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
            coef.iter_mut().for_each(|x| *x = -*x);
        }
        ortho.push(v);
        change.push(coef);
    }
    if ortho.is_empty() {
        return Err(Error::AllDegenerate);
    }
    Ok(MatrixBasis {
        raw: raw.to_vec(),
        ortho: ortho
            .iter()
            .map(|v| InteractionMatrix::from_trusted(upper_mirror(n, v)))
            .collect(),
        change,
        dropped,
        rank_tol,
    })
}

fn combine_raw(ms: &[InteractionMatrix], coef: &[f64]) -> Result<InteractionMatrix> {
    let n = ms[0].dim();
    let mut data = vec![0.0; n * n];
    for (m, &c) in ms.iter().zip(coef) {
        if c != 0.0 {
            axpy(&mut data, c, m.as_slice());
        }
    }
    Ok(InteractionMatrix::from_trusted(upper_mirror(n, &data)))
}

/// `A_beta = sum_i beta_i A_i`.
pub fn combine(basis: &MatrixBasis, beta: &BetaVector) -> Result<InteractionMatrix> {
    basis.check_len(beta)?;
    combine_raw(&basis.ortho, &beta.0)
}

/// Orthogonal projection onto the span: `beta_i = <J, A_i>` and the
/// Frobenius norm of the residual.
pub fn project(basis: &MatrixBasis, j: &SquareMatrix) -> Result<(BetaVector, f64)> {
    if j.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: j.dim(),
        });
    }
    let beta: Vec<f64> = basis
        .ortho
        .iter()
        .map(|a| trace_inner(j, a))
        .collect::<Result<_>>()?;
    let mut resid = j.as_slice().to_vec();
    for (a, &b) in basis.ortho.iter().zip(&beta) {
        axpy(&mut resid, -b, a.as_slice());
    }
    let r = resid.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok((BetaVector(beta), r))
}

/// Smallest singular value of `beta -> sum_i beta_i J_i`, i.e. the square
/// root of the smallest eigenvalue of the Gram matrix `<J_i, J_j>`.
pub fn min_singular_value(raw: &[InteractionMatrix]) -> Result<f64> {
    if raw.is_empty() {
        return Err(Error::AllDegenerate);
    }
    let n = raw[0].dim();
    if let Some(bad) = raw.iter().find(|m| m.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: bad.dim(),
        });
    }
    let g = gram_matrix(raw);
    let k = raw.len();
    let gm = DMatrix::from_fn(k, k, |i, j| g[i][j]);
    let eig = gm.symmetric_eigenvalues();
    let smallest = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(smallest.max(0.0).sqrt())
}

/// For each incidence matrix, the number of unordered pairs it contains that
/// no other member contains.
pub fn unique_edge_counts(incidence: &[InteractionMatrix]) -> Result<Vec<usize>> {
    let Some(first) = incidence.first() else {
        return Ok(Vec::new());
    };
    let n = first.dim();
    for (index, m) in incidence.iter().enumerate() {
        if m.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: m.dim(),
            });
        }
        if let Some(&value) = m.as_slice().iter().find(|&&v| v != 0.0 && v != 1.0) {
            return Err(Error::NotBinary { index, value });
        }
    }
    let mut counts = vec![0usize; incidence.len()];
    for i in 0..n {
        for j in i + 1..n {
            let mut owner = None;
            let mut multiple = false;
            for (s, m) in incidence.iter().enumerate() {
                if m[(i, j)] == 1.0 {
                    if owner.is_some() {
                        multiple = true;
                        break;
                    }
                    owner = Some(s);
                }
            }
            if let (Some(s), false) = (owner, multiple) {
                counts[s] += 1;
            }
        }
    }
    Ok(counts)
}

/// `frob_error / sqrt(min_s lambda_s)`: a bound on `||b_hat - b*||_2` in raw
/// coordinates of an incidence family.
pub fn beta_error_bound(lambda_s: &[usize], frob_error: f64) -> Result<f64> {
    if let Some(index) = lambda_s.iter().position(|&l| l == 0) {
        return Err(Error::DegenerateFamily { index });
    }
    let min = *lambda_s.iter().min().ok_or(Error::DegenerateFamily { index: 0 })?;
    Ok(frob_error / (min as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    use crate::sampler::seeded_rng;

    fn edge_matrix(n: usize, edges: &[(usize, usize)]) -> InteractionMatrix {
        let e: Vec<_> = edges.iter().map(|&(i, j)| (i, j, 1.0)).collect();
        InteractionMatrix::from_upper_entries(n, &e).unwrap()
    }

    fn random_sym(n: usize, rng: &mut impl Rng) -> InteractionMatrix {
        let mut e = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                e.push((i, j, rng.gen_range(-1.0..1.0)));
            }
        }
        InteractionMatrix::from_upper_entries(n, &e).unwrap()
    }

    #[test]
    fn orthonormal_input_passes_through() {
        let s = 0.5f64.sqrt();
        let a = edge_matrix(4, &[(0, 1)]).scaled(s);
        let b = edge_matrix(4, &[(2, 3)]).scaled(s);
        let basis = gram_schmidt(&[a.clone(), b.clone()], DEFAULT_RANK_TOL).unwrap();
        assert_eq!(basis.rank(), 2);
        for (x, y) in basis.ortho()[0].as_slice().iter().zip(a.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in basis.ortho()[1].as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn sign_convention_flips_negative_lead() {
        let a = edge_matrix(3, &[(0, 1), (1, 2)]).scaled(-2.0);
        let basis = gram_schmidt(&[a], DEFAULT_RANK_TOL).unwrap();
        assert!(basis.ortho()[0][(0, 1)] > 0.0);
        assert!((basis.change()[0][0] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn duplicates_are_dropped() {
        let a = edge_matrix(5, &[(0, 1), (2, 3)]);
        let basis = gram_schmidt(&[a.clone(), a.clone()], DEFAULT_RANK_TOL).unwrap();
        assert_eq!(basis.rank(), 1);
        assert_eq!(basis.dropped(), &[1]);
        assert!(matches!(
            gram_schmidt(&[InteractionMatrix::zeros(3)], DEFAULT_RANK_TOL),
            Err(Error::AllDegenerate)
        ));
        assert!(matches!(
            gram_schmidt(&[a, InteractionMatrix::zeros(3)], DEFAULT_RANK_TOL),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn random_family_gram_is_identity() {
        let mut rng = seeded_rng(42);
        let raw: Vec<_> = (0..5).map(|_| random_sym(20, &mut rng)).collect();
        let basis = gram_schmidt(&raw, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(basis.rank(), 5);
        for (i, row) in basis.gram().iter().enumerate() {
            for (j, &g) in row.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((g - expect).abs() < 1e-10);
            }
        }
        for a in basis.ortho() {
            assert!(a.is_symmetric());
            assert!((0..20).all(|i| a[(i, i)] == 0.0));
        }
        // change-of-coordinates reproduces each A_i from the raw family
        for (a, coef) in basis.ortho().iter().zip(basis.change()) {
            let rebuilt = combine_raw(&raw, coef).unwrap();
            for (x, y) in rebuilt.as_slice().iter().zip(a.as_slice()) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn combine_examples() {
        let mut rng = seeded_rng(7);
        let raw: Vec<_> = (0..3).map(|_| random_sym(6, &mut rng)).collect();
        let basis = gram_schmidt(&raw, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(combine(&basis, &BetaVector::zeros(3)).unwrap().max_abs(), 0.0);
        let e1 = BetaVector(vec![0.0, 1.0, 0.0]);
        assert_eq!(combine(&basis, &e1).unwrap(), basis.ortho()[1]);
        assert!(matches!(
            combine(&basis, &BetaVector::zeros(2)),
            Err(Error::LengthMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn projection_of_orthogonal_matrix() {
        let basis = gram_schmidt(&[edge_matrix(4, &[(0, 1)])], DEFAULT_RANK_TOL).unwrap();
        let j = edge_matrix(4, &[(2, 3)]).scaled(3.0);
        let (beta, r) = project(&basis, &j).unwrap();
        assert_eq!(beta.0, vec![0.0]);
        assert!((r - j.frobenius_norm()).abs() < 1e-15);
    }

    #[test]
    fn projection_pythagoras() {
        let mut rng = seeded_rng(8);
        let raw: Vec<_> = (0..4).map(|_| random_sym(10, &mut rng)).collect();
        let basis = gram_schmidt(&raw, DEFAULT_RANK_TOL).unwrap();
        let j = random_sym(10, &mut rng);
        let (beta, r) = project(&basis, &j).unwrap();
        let total = j.frobenius_norm().powi(2);
        assert!((r * r + beta.norm().powi(2) - total).abs() < 1e-8);
    }

    #[test]
    fn raw_coordinates_round_trip() {
        let mut rng = seeded_rng(10);
        let raw: Vec<_> = (0..3).map(|_| random_sym(7, &mut rng)).collect();
        let basis = gram_schmidt(&raw, DEFAULT_RANK_TOL).unwrap();
        let b = vec![0.3, -1.2, 0.05];
        let beta = basis.from_raw(&b).unwrap();
        let back = basis.to_raw(&beta).unwrap();
        for (x, y) in b.iter().zip(&back) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn min_singular_value_examples() {
        let s = 0.5f64.sqrt();
        let a = edge_matrix(4, &[(0, 1)]).scaled(s);
        let b = edge_matrix(4, &[(2, 3)]).scaled(s);
        assert!((min_singular_value(&[a.clone(), b]).unwrap() - 1.0).abs() < 1e-12);
        assert!(min_singular_value(&[a.clone(), a]).unwrap() < 1e-7);
        // disjoint supports: lambda = min_i ||J_i||_F
        let m1 = edge_matrix(8, &[(0, 1), (2, 3), (4, 5)]);
        let m2 = edge_matrix(8, &[(6, 7)]);
        let lam = min_singular_value(&[m1, m2.clone()]).unwrap();
        assert!((lam - m2.frobenius_norm()).abs() < 1e-12);
    }

    #[test]
    fn unique_edges() {
        let e1 = edge_matrix(4, &[(0, 1), (0, 2)]);
        let e2 = edge_matrix(4, &[(0, 2), (1, 3)]);
        assert_eq!(unique_edge_counts(&[e1.clone(), e2]).unwrap(), vec![1, 1]);
        assert_eq!(unique_edge_counts(&[e1.clone(), e1.clone()]).unwrap(), vec![0, 0]);
        let m1 = edge_matrix(6, &[(0, 1), (2, 3)]);
        let m2 = edge_matrix(6, &[(4, 5)]);
        assert_eq!(unique_edge_counts(&[m1, m2]).unwrap(), vec![2, 1]);
        assert!(matches!(
            unique_edge_counts(&[e1.scaled(0.5)]),
            Err(Error::NotBinary { index: 0, .. })
        ));
    }

    #[test]
    fn error_bound_arithmetic() {
        assert_eq!(beta_error_bound(&[4, 9], 2.0).unwrap(), 1.0);
        assert_eq!(beta_error_bound(&[3, 3, 3], 0.0).unwrap(), 0.0);
        assert!(matches!(
            beta_error_bound(&[2, 0], 1.0),
            Err(Error::DegenerateFamily { index: 1 })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn combine_is_an_isometry(seed in any::<u64>(), k in 1usize..5) {
                let mut rng = seeded_rng(seed);
                let raw: Vec<_> = (0..k).map(|_| random_sym(8, &mut rng)).collect();
                let basis = gram_schmidt(&raw, DEFAULT_RANK_TOL).unwrap();
                let beta = BetaVector((0..basis.rank()).map(|_| rng.gen_range(-3.0..3.0)).collect());
                let j = combine(&basis, &beta).unwrap();
                prop_assert!((j.frobenius_norm() - beta.norm()).abs() <= 1e-10);
                let (back, resid) = project(&basis, &j).unwrap();
                prop_assert!(resid <= 1e-10);
                for (a, b) in back.0.iter().zip(&beta.0) {
                    prop_assert!((a - b).abs() <= 1e-10);
                }
            }
        }
    }
}
