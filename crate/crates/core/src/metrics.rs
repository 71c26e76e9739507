//! Exact small-`n` quantities computed by enumeration: distances between two
//! models, variances of linear statistics, and conditional means of the
//! pseudo-likelihood score.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conditioning::SubsetCover;
use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::model::{local_field_unchecked, restrict, variance_floor, IsingSpec};
use crate::sampler::{enumerate_distribution, ExactDistribution};

/// Largest dimension accepted by the exact routines here.
pub const MAX_EXACT_DIM: usize = 18;

fn exact(spec: &IsingSpec) -> Result<ExactDistribution> {
    let n = spec.dim();
    if n > MAX_EXACT_DIM {
        return Err(Error::DimensionTooLarge { n, max: MAX_EXACT_DIM });
    }
    enumerate_distribution(spec)
}

fn log_probs(d: &ExactDistribution) -> Vec<f64> {
    let log_z = d.log_partition() + d.dim() as f64 * std::f64::consts::LN_2;
    d.log_weights().iter().map(|w| w - log_z).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    /// `TV(P, Q) = sum |P - Q| / 2`.
    pub tv: f64,
    /// `chi^2(Q, P) = E_P[(Q/P - 1)^2]`.
    pub chi_square: f64,
    /// `tv <= sqrt(chi_square / 2)`.
    pub bound_ok: bool,
}

/// Total variation and chi-square divergence of `Q` from `P`.
pub fn tv_chi_exact(p: &IsingSpec, q: &IsingSpec) -> Result<DivergenceReport> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: q.dim(),
        });
    }
    let dp = exact(p)?;
    let dq = exact(q)?;
    let lp = log_probs(&dp);
    let lq = log_probs(&dq);
    let tv = 0.5
        * dp
            .probs()
            .iter()
            .zip(dq.probs())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>();
    let chi_square = dp
        .probs()
        .iter()
        .zip(lp.iter().zip(&lq))
        .map(|(&pp, (&a, &b))| {
            let r = (b - a).exp_m1();
            pp * r * r
        })
        .sum::<f64>();
    // slack for rounding when both sides are ~0
    let bound_ok = tv <= (chi_square / 2.0).sqrt() + 1e-15;
    Ok(DivergenceReport {
        tv,
        chi_square,
        bound_ok,
    })
}

/// Exact `Var(a'x)`.
pub fn linear_variance_exact(spec: &IsingSpec, a: &[f64]) -> Result<f64> {
    if a.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: a.len(),
        });
    }
    let d = exact(spec)?;
    let lin = |x: &crate::model::SpinConfiguration| -> f64 {
        x.spins().iter().zip(a).map(|(&s, &w)| s as f64 * w).sum()
    };
    let mean = d.expect(lin);
    Ok(d.expect(|x| {
        let c = lin(x) - mean;
        c * c
    }))
}

/// `gamma = min_i (1 - tanh^2(||J_i||_1 + |h_i|))`, the smallest conditional
/// variance of a single spin over all neighbour assignments.
pub fn conditional_variance_floor(spec: &IsingSpec) -> f64 {
    variance_floor(spec.interaction(), spec.field())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalMeanReport {
    /// Largest `|E[sum_{i in I} (A_i x)(x_i - tanh(J_i x + h_i)) | x_{-I}]|`.
    pub max_abs_mean: f64,
    pub worst_set: Option<usize>,
    pub sets_checked: usize,
    pub assignments: usize,
}

/// For each set `I` of the cover and `trials` uniformly drawn assignments of
/// the spins outside `I`, sums the score over the exact conditional law of
/// `x_I`.
pub fn conditional_mean_zero_check<R: Rng + ?Sized>(
    spec: &IsingSpec,
    cover: &SubsetCover,
    a: &SquareMatrix,
    trials: usize,
    rng: &mut R,
) -> Result<ConditionalMeanReport> {
    let n = spec.dim();
    if a.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.dim() });
    }
    if cover.n != n {
        return Err(Error::DimensionMismatch { expected: n, got: cover.n });
    }
    let mut report = ConditionalMeanReport {
        max_abs_mean: 0.0,
        worst_set: None,
        sets_checked: 0,
        assignments: 0,
    };
    for (s, set) in cover.sets.iter().enumerate() {
        if set.is_empty() {
            continue;
        }
        let mut idx = set.clone();
        idx.sort_unstable();
        idx.dedup();
        if idx.len() > MAX_EXACT_DIM {
            return Err(Error::DimensionTooLarge {
                n: idx.len(),
                max: MAX_EXACT_DIM,
            });
        }
        report.sets_checked += 1;
        for _ in 0..trials {
            let outside: Vec<i8> = (0..n).map(|_| if rng.gen() { 1 } else { -1 }).collect();
            let assigned: Vec<Option<i8>> = outside.iter().map(|&v| Some(v)).collect();
            let sub = restrict(spec, &idx, &assigned)?;
            let dist = enumerate_distribution(&sub)?;
            let mut x = outside.clone();
            let mut mean = 0.0;
            for (t, &p) in dist.probs().iter().enumerate() {
                for (b, &i) in idx.iter().enumerate() {
                    x[i] = if (t >> b) & 1 == 0 { 1 } else { -1 };
                }
                let score: f64 = idx
                    .iter()
                    .map(|&i| {
                        let ax: f64 = a.row(i).iter().zip(&x).map(|(w, &v)| w * v as f64).sum();
                        let field = local_field_unchecked(spec, &x, i);
                        ax * (x[i] as f64 - field.tanh())
                    })
                    .sum();
                mean += p * score;
            }
            report.assignments += 1;
            if mean.abs() > report.max_abs_mean {
                report.max_abs_mean = mean.abs();
                report.worst_set = Some(s);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditioning::build_cover;
    use crate::matrix::InteractionMatrix;
    use crate::model::{ExternalField, SpinConfiguration};
    use crate::sampler::seeded_rng;

    fn random_spec(n: usize, scale: f64, field: f64, rng: &mut impl Rng) -> IsingSpec {
        let mut e = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                e.push((i, j, rng.gen_range(-scale..scale)));
            }
        }
        let j = InteractionMatrix::from_upper_entries(n, &e).unwrap();
        let h = ExternalField::new((0..n).map(|_| rng.gen_range(-field..=field)).collect()).unwrap();
        IsingSpec::new(j, h).unwrap()
    }

    fn field_only(h: f64) -> IsingSpec {
        IsingSpec::new(InteractionMatrix::zeros(1), ExternalField::new(vec![h]).unwrap()).unwrap()
    }

    #[test]
    fn identical_models_have_zero_divergence() {
        let spec = random_spec(6, 0.3, 0.2, &mut seeded_rng(1));
        let r = tv_chi_exact(&spec, &spec).unwrap();
        assert_eq!(r.tv, 0.0);
        assert_eq!(r.chi_square, 0.0);
        assert!(r.bound_ok);
    }

    #[test]
    fn single_spin_tv_closed_form() {
        let (h, g) = (0.3, -0.7);
        let r = tv_chi_exact(&field_only(h), &field_only(g)).unwrap();
        assert!((r.tv - 0.5 * (h.tanh() - g.tanh()).abs()).abs() < 1e-15);
        // chi^2 by hand
        let p = |v: f64| ((v as f64).exp() / (2.0 * v.cosh()), (-v).exp() / (2.0 * v.cosh()));
        let (p1, p2) = p(h);
        let (q1, q2) = p(g);
        let chi = (q1 - p1).powi(2) / p1 + (q2 - p2).powi(2) / p2;
        assert!((r.chi_square - chi).abs() < 1e-14);
    }

    #[test]
    fn symmetry_and_asymmetry() {
        let mut rng = seeded_rng(2);
        let p = random_spec(5, 0.5, 0.5, &mut rng);
        let q = random_spec(5, 0.5, 0.5, &mut rng);
        let pq = tv_chi_exact(&p, &q).unwrap();
        let qp = tv_chi_exact(&q, &p).unwrap();
        assert!((pq.tv - qp.tv).abs() < 1e-15);
        assert!((pq.chi_square - qp.chi_square).abs() > 1e-6);
        assert!(pq.bound_ok && qp.bound_ok);
    }

    #[test]
    fn dimension_guards() {
        let big = IsingSpec::zero_field(InteractionMatrix::zeros(19));
        assert!(matches!(
            linear_variance_exact(&big, &[0.0; 19]),
            Err(Error::DimensionTooLarge { n: 19, max: 18 })
        ));
        let a = IsingSpec::zero_field(InteractionMatrix::zeros(3));
        let b = IsingSpec::zero_field(InteractionMatrix::zeros(4));
        assert!(matches!(tv_chi_exact(&a, &b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn variance_of_independent_spins() {
        let spec = IsingSpec::zero_field(InteractionMatrix::zeros(7));
        let a = [0.5, -1.0, 2.0, 0.0, 0.25, 3.0, -0.1];
        let v = linear_variance_exact(&spec, &a).unwrap();
        let norm2: f64 = a.iter().map(|x| x * x).sum();
        assert!((v - norm2).abs() < 1e-12);
        assert_eq!(linear_variance_exact(&spec, &[0.0; 7]).unwrap(), 0.0);
    }

    #[test]
    fn variance_sign_and_permutation_invariance() {
        let mut rng = seeded_rng(3);
        let spec = random_spec(8, 0.4, 0.3, &mut rng);
        let a: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v = linear_variance_exact(&spec, &a).unwrap();
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        assert!((v - linear_variance_exact(&spec, &neg).unwrap()).abs() < 1e-12);
        let perm = [2usize, 7, 0, 5, 1, 6, 3, 4];
        let mut pa = vec![0.0; 8];
        let mut ph = vec![0.0; 8];
        for i in 0..8 {
            pa[perm[i]] = a[i];
            ph[perm[i]] = spec.field().values()[i];
        }
        let pspec = IsingSpec::new(spec.interaction().permuted(&perm), ExternalField::new(ph).unwrap()).unwrap();
        assert!((v - linear_variance_exact(&pspec, &pa).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn variance_floor_matches_brute_force() {
        let mut rng = seeded_rng(4);
        let single = InteractionMatrix::from_upper_entries(2, &[(0, 1, 0.5)]).unwrap();
        let g = conditional_variance_floor(&IsingSpec::zero_field(single));
        assert!((g - 1.0 / 0.5f64.cosh().powi(2)).abs() < 1e-15);
        assert_eq!(conditional_variance_floor(&IsingSpec::zero_field(InteractionMatrix::zeros(4))), 1.0);

        let n = 10;
        let spec = random_spec(n, 0.3, 0.4, &mut rng);
        let mut brute = f64::INFINITY;
        for t in 0..1usize << n {
            let x = SpinConfiguration::from_index(n, t);
            for i in 0..n {
                let f = local_field_unchecked(&spec, x.spins(), i);
                brute = brute.min(1.0 - f.tanh().powi(2));
            }
        }
        assert!((conditional_variance_floor(&spec) - brute).abs() < 1e-12);
    }

    #[test]
    fn conditional_score_mean_vanishes() {
        let mut rng = seeded_rng(5);
        let n = 10;
        let spec = random_spec(n, 0.2, 0.3, &mut rng);
        let cover = build_cover(spec.interaction(), 0.5 * spec.m().min(1.0), &mut rng, 64).unwrap();
        let a = random_spec(n, 1.0, 0.0, &mut rng).interaction().matrix().clone();
        let r = conditional_mean_zero_check(&spec, &cover, &a, 3, &mut rng).unwrap();
        assert!(r.max_abs_mean <= 1e-10, "{r:?}");
        assert!(r.sets_checked > 0);
        let zero = SquareMatrix::zeros(n);
        let r = conditional_mean_zero_check(&spec, &cover, &zero, 2, &mut rng).unwrap();
        assert_eq!(r.max_abs_mean, 0.0);
    }
}
