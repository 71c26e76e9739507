//! Randomized subset covers `I_1..I_l` of `[n]` such that every coordinate is
//! covered the same number of times and, inside each set, every row of `J`
//! has absolute sum at most `eta`. Conditioning on the complement of such a
//! set leaves a model with `||J'||_inf <= eta`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::InteractionMatrix;
use crate::model::{restrict, IsingSpec};

pub const DEFAULT_MAX_RETRIES: usize = 64;

/// `eta = min(1, M) / 2`.
pub fn default_eta(m: f64) -> f64 {
    0.5 * m.min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetCover {
    pub n: usize,
    /// Sorted index sets.
    pub sets: Vec<Vec<usize>>,
    pub eta: f64,
    /// `||J||_inf` of the source matrix.
    pub m: f64,
    /// Number of sets each coordinate belongs to.
    pub target_count: usize,
    pub ell: usize,
    /// Full redraws used, including the successful one.
    pub attempts: usize,
}

impl SubsetCover {
    pub fn membership_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n];
        for set in &self.sets {
            for &i in set {
                counts[i] += 1;
            }
        }
        counts
    }

    fn trivial(n: usize, eta: f64, m: f64) -> Self {
        SubsetCover {
            n,
            sets: vec![(0..n).collect()],
            eta,
            m,
            target_count: 1,
            ell: 1,
            attempts: 0,
        }
    }
}

/// `ceil(32 ln 4 ln n / eta'^2)` with `eta' = eta / M`.
pub fn cover_size(n: usize, eta: f64, m: f64) -> usize {
    let e = eta / m;
    (32.0 * 4f64.ln() * (n as f64).ln() / (e * e)).ceil() as usize
}

/// `ceil(eta' l / 8)`.
pub fn target_count(ell: usize, eta: f64, m: f64) -> usize {
    ((eta / m) * ell as f64 / 8.0).ceil() as usize
}

/// Draws `l` sets by independent `eta'/2` coin flips, keeps the coordinates
/// whose in-set absolute row sum is at most `eta`, and repeats until every
/// coordinate lands in at least `target_count` sets. Surplus memberships are
/// then removed from the lowest-index sets first.
pub fn build_cover<R: Rng + ?Sized>(
    j: &InteractionMatrix,
    eta: f64,
    rng: &mut R,
    max_retries: usize,
) -> Result<SubsetCover> {
    let n = j.dim();
    let m = j.infinity_norm();
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidEta { eta, m });
    }
    if n <= 1 || m == 0.0 {
        return Ok(SubsetCover::trivial(n, eta, m));
    }
    if eta > m {
        return Err(Error::InvalidEta { eta, m });
    }
    let ell = cover_size(n, eta, m);
    let target = target_count(ell, eta, m);
    let p = 0.5 * eta / m;
    let abs: Vec<f64> = j.as_slice().iter().map(|v| v.abs()).collect();

    for attempt in 1..=max_retries {
        let mut sets = Vec::with_capacity(ell);
        let mut counts = vec![0usize; n];
        let mut draft = Vec::new();
        for _ in 0..ell {
            draft.clear();
            draft.extend((0..n).filter(|_| rng.gen_bool(p)));
            let kept: Vec<usize> = draft
                .iter()
                .copied()
                .filter(|&i| {
                    let row = &abs[i * n..(i + 1) * n];
                    draft.iter().map(|&k| row[k]).sum::<f64>() <= eta
                })
                .collect();
            for &i in &kept {
                counts[i] += 1;
            }
            sets.push(kept);
        }
        if counts.iter().all(|&c| c >= target) {
            let mut surplus: Vec<usize> = counts.iter().map(|&c| c - target).collect();
            for set in sets.iter_mut() {
                set.retain(|&i| {
                    if surplus[i] > 0 {
                        surplus[i] -= 1;
                        false
                    } else {
                        true
                    }
                });
            }
            return Ok(SubsetCover {
                n,
                sets,
                eta,
                m,
                target_count: target,
                ell,
                attempts: attempt,
            });
        }
    }
    Err(Error::RetryExhausted {
        attempts: max_retries,
    })
}

/// Two-set cover `{L, R}` from a 2-coloring of the interaction graph, if one
/// exists. Each side is independent given the other, so `eta = 0`.
pub fn bipartite_cover(j: &InteractionMatrix) -> Option<SubsetCover> {
    let n = j.dim();
    let mut color: Vec<Option<bool>> = vec![None; n];
    let mut queue = std::collections::VecDeque::new();
    for start in 0..n {
        if color[start].is_some() {
            continue;
        }
        color[start] = Some(false);
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            let cu = color[u].unwrap();
            for (v, &w) in j.row(u).iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                match color[v] {
                    None => {
                        color[v] = Some(!cu);
                        queue.push_back(v);
                    }
                    Some(cv) if cv == cu => return None,
                    Some(_) => {}
                }
            }
        }
    }
    let left: Vec<usize> = (0..n).filter(|&i| color[i] == Some(false)).collect();
    let right: Vec<usize> = (0..n).filter(|&i| color[i] == Some(true)).collect();
    Some(SubsetCover {
        n,
        sets: vec![left, right],
        eta: 0.0,
        m: j.infinity_norm(),
        target_count: 1,
        ell: 2,
        attempts: 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountViolation {
    pub coordinate: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowViolation {
    pub set: usize,
    pub coordinate: usize,
    pub row_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub passed: bool,
    pub counts_ok: bool,
    pub rows_ok: bool,
    pub restricted_ok: bool,
    pub count_violations: Vec<CountViolation>,
    pub row_violations: Vec<RowViolation>,
    /// Largest in-set absolute row sum over all sets.
    pub max_row_sum: f64,
    /// Largest `||J'||_inf` over the conditional models.
    pub max_restricted_norm: f64,
    /// Whether every conditional model has `||J'||_inf < 1`.
    pub all_dobrushin: bool,
}

/// Checks exact membership counts, in-set row sums, and the interaction norm
/// of each conditional model given an assignment outside the set.
pub fn verify_cover(j: &InteractionMatrix, cover: &SubsetCover) -> CoverReport {
    const TOL: f64 = 1e-12;
    let n = j.dim();
    let mut count_violations = Vec::new();
    let mut row_violations = Vec::new();
    let mut max_row_sum: f64 = 0.0;
    let mut max_restricted_norm: f64 = 0.0;
    let mut restricted_ok = true;

    let mut counts = vec![0usize; n];
    let mut in_range = cover.n == n;
    for set in &cover.sets {
        for &i in set {
            if i < n {
                counts[i] += 1;
            } else {
                in_range = false;
            }
        }
    }
    for (coordinate, &count) in counts.iter().enumerate() {
        if count != cover.target_count {
            count_violations.push(CountViolation { coordinate, count });
        }
    }

    let spec = IsingSpec::zero_field(j.clone());
    let outside: Vec<Option<i8>> = (0..n).map(|i| Some(if i % 2 == 0 { 1 } else { -1 })).collect();
    for (s, set) in cover.sets.iter().enumerate() {
        let set: Vec<usize> = set.iter().copied().filter(|&i| i < n).collect();
        for &i in &set {
            let row_sum: f64 = set.iter().map(|&k| j[(i, k)].abs()).sum();
            max_row_sum = max_row_sum.max(row_sum);
            if row_sum > cover.eta + TOL {
                row_violations.push(RowViolation {
                    set: s,
                    coordinate: i,
                    row_sum,
                });
            }
        }
        if set.is_empty() {
            continue;
        }
        match restrict(&spec, &set, &outside) {
            Ok(sub) => {
                let norm = sub.m();
                max_restricted_norm = max_restricted_norm.max(norm);
                if norm > cover.eta + TOL {
                    restricted_ok = false;
                }
            }
            Err(_) => restricted_ok = false,
        }
    }

    let counts_ok = count_violations.is_empty() && in_range;
    let rows_ok = row_violations.is_empty();
    CoverReport {
        passed: counts_ok && rows_ok && restricted_ok,
        counts_ok,
        rows_ok,
        restricted_ok,
        count_violations,
        row_violations,
        max_row_sum,
        max_restricted_norm,
        all_dobrushin: max_restricted_norm < 1.0,
    }
}

/// The set carrying the most `theta` mass (lowest index on ties).
pub fn best_subset_for_weights(cover: &SubsetCover, theta: &[f64]) -> Result<(usize, f64)> {
    if theta.len() != cover.n {
        return Err(Error::DimensionMismatch {
            expected: cover.n,
            got: theta.len(),
        });
    }
    if let Some(index) = theta.iter().position(|&t| !(t >= 0.0)) {
        return Err(Error::NegativeWeight {
            index,
            value: theta[index],
        });
    }
    let mut best = (0, f64::NEG_INFINITY);
    for (s, set) in cover.sets.iter().enumerate() {
        let mass: f64 = set.iter().map(|&i| theta[i]).sum();
        if mass > best.1 {
            best = (s, mass);
        }
    }
    Ok(best)
}
