//! Structured families of interaction matrices.

use rand::Rng;

use crate::basis::{combine, BetaVector, MatrixBasis};
use crate::error::{Error, Result};
use crate::matrix::InteractionMatrix;

fn incidence(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<InteractionMatrix> {
    let e: Vec<_> = edges.into_iter().map(|(i, j)| (i.min(j), i.max(j), 1.0)).collect();
    InteractionMatrix::from_upper_entries(n, &e)
}

/// `k` matchings with `floor(n / 2k)` edges each, matching `s` living on the
/// vertex block `[2qs, 2q(s+1))`. Supports are disjoint, so the family is
/// trace-orthogonal.
pub fn gen_matchings(n: usize, k: usize) -> Result<Vec<InteractionMatrix>> {
    let q = if k == 0 { 0 } else { n / (2 * k) };
    if q == 0 {
        return Err(Error::TooManyGroups { n, k });
    }
    (0..k)
        .map(|s| incidence(n, (0..q).map(|e| (2 * q * s + 2 * e, 2 * q * s + 2 * e + 1))))
        .collect()
}

/// `k` cliques on consecutive vertex blocks of size `floor(n / k)`.
pub fn gen_blocks(n: usize, k: usize) -> Result<Vec<InteractionMatrix>> {
    let b = if k == 0 { 0 } else { n / k };
    if b < 2 {
        return Err(Error::TooManyGroups { n, k });
    }
    (0..k)
        .map(|s| {
            let lo = s * b;
            incidence(n, (lo..lo + b).flat_map(|i| (i + 1..lo + b).map(move |j| (i, j))))
        })
        .collect()
}

/// `k` independent `G(n, p)` edge sets. Members may overlap.
pub fn gen_erdos_renyi_incidence<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    p: f64,
    rng: &mut R,
) -> Result<Vec<InteractionMatrix>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidConfig(format!("edge probability {p} outside [0, 1]")));
    }
    (0..k)
        .map(|_| {
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.gen_bool(p) {
                        edges.push((i, j));
                    }
                }
            }
            incidence(n, edges)
        })
        .collect()
}

/// Temporal chains and per-step spatial copies on `n = V T` nodes, node
/// `(v, t)` having index `t V + v`.
pub fn gen_spatio_temporal(
    v: usize,
    t: usize,
    edges: &[(usize, usize)],
) -> Result<(InteractionMatrix, InteractionMatrix)> {
    if v < 1 || t < 2 {
        return Err(Error::InvalidConfig(format!(
            "need V >= 1 and T >= 2, got V = {v}, T = {t}"
        )));
    }
    let n = v * t;
    if let Some(&(a, b)) = edges.iter().find(|&&(a, b)| a >= v || b >= v || a == b) {
        return Err(Error::InvalidConfig(format!("bad spatial edge ({a}, {b}) for V = {v}")));
    }
    let temporal = incidence(n, (0..t - 1).flat_map(|s| (0..v).map(move |u| (s * v + u, (s + 1) * v + u))))?;
    let spatial = incidence(n, (0..t).flat_map(|s| edges.iter().map(move |&(a, b)| (s * v + a, s * v + b))))?;
    Ok((temporal, spatial))
}

/// `c * sum_i theta_i A_i` over the orthonormal basis, with `theta` in
/// `{-1, +1}^k`, required to have `||.||_inf <= 1/2`.
pub fn gen_assouad(basis: &MatrixBasis, c: f64, theta: &[i8]) -> Result<InteractionMatrix> {
    if theta.len() != basis.rank() {
        return Err(Error::LengthMismatch {
            expected: basis.rank(),
            got: theta.len(),
        });
    }
    if let Some((index, &value)) = theta.iter().enumerate().find(|(_, &s)| s != 1 && s != -1) {
        return Err(Error::InvalidSpin {
            index,
            value: value as i64,
        });
    }
    let beta = BetaVector(theta.iter().map(|&s| c * s as f64).collect());
    let j = combine(basis, &beta)?;
    let norm = j.infinity_norm();
    if norm > 0.5 {
        return Err(Error::NormBudgetExceeded { norm, budget: 0.5 });
    }
    Ok(j)
}

/// Largest `c` for which every sign pattern satisfies `||A_theta||_inf <= budget`.
pub fn assouad_scale(basis: &MatrixBasis, budget: f64) -> f64 {
    let n = basis.dim();
    let worst = (0..n)
        .map(|r| {
            (0..n)
                .map(|v| basis.ortho().iter().map(|a| a[(r, v)].abs()).sum::<f64>())
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    if worst == 0.0 {
        0.0
    } else {
        budget / worst
    }
}

/// Spatial graph used by experiments: a cycle for `V >= 3`, one edge for
/// `V = 2`, none for `V = 1`.
pub fn cycle_edges(v: usize) -> Vec<(usize, usize)> {
    match v {
        0 | 1 => Vec::new(),
        2 => vec![(0, 1)],
        _ => (0..v).map(|u| (u, (u + 1) % v)).collect(),
    }
}
