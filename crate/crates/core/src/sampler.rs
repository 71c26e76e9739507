//! Exact enumeration of small models and Glauber-dynamics sampling.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{prob_plus, IsingSpec, SpinConfiguration};

/// Largest dimension accepted by [`enumerate_distribution`].
pub const MAX_ENUMERATION_DIM: usize = 22;

/// The seeded generator used everywhere in the crate.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Full probability table of a model over all `2^n` configurations.
///
/// Table index `t` encodes configuration `x` with bit `b` of `t` standing for
/// coordinate `b`, and bit value 0 meaning spin `+1` (see
/// [`SpinConfiguration::from_index`]).
#[derive(Debug, Clone)]
pub struct ExactDistribution {
    n: usize,
    log_weights: Vec<f64>,
    log_partition: f64,
    probs: Vec<f64>,
    cdf: OnceLock<Vec<f64>>,
}

impl ExactDistribution {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// `x'Jx/2 + h'x` per configuration.
    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// `F = log(2^{-n} sum_x exp(x'Jx/2 + h'x))`.
    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, x: &SpinConfiguration) -> f64 {
        self.probs[x.to_index()]
    }

    /// `E[f(x)]` under the table.
    pub fn expect(&self, mut f: impl FnMut(&SpinConfiguration) -> f64) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(t, &p)| p * f(&SpinConfiguration::from_index(self.n, t)))
            .sum()
    }

    /// One draw by inverse CDF over the table.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SpinConfiguration {
        let cdf = self.cdf.get_or_init(|| {
            let mut acc = 0.0;
            self.probs
                .iter()
                .map(|p| {
                    acc += p;
                    acc
                })
                .collect()
        });
        let total = *cdf.last().expect("non-empty table");
        let u: f64 = rng.gen::<f64>() * total;
        let mut t = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        // never return a zero-probability cell sitting at a flat stretch
        while self.probs[t] == 0.0 && t > 0 {
            t -= 1;
        }
        SpinConfiguration::from_index(self.n, t)
    }
}

pub fn exact_sample<R: Rng + ?Sized>(dist: &ExactDistribution, rng: &mut R) -> SpinConfiguration {
    dist.sample(rng)
}

/// Enumerates all `2^n` configurations.
///
/// Log weights are accumulated along a Gray-code walk with the local fields
/// refreshed from scratch every 4096 steps, so each configuration costs
/// `O(n)` instead of `O(n^2)`.
pub fn enumerate_distribution(spec: &IsingSpec) -> Result<ExactDistribution> {
    let n = spec.dim();
    if n > MAX_ENUMERATION_DIM {
        return Err(Error::DimensionTooLarge {
            n,
            max: MAX_ENUMERATION_DIM,
        });
    }
    let size = 1usize << n;
    let j = spec.interaction();
    let h = spec.field().values();
    let mut x = vec![1.0f64; n];
    let exact_weight = |x: &[f64]| -> f64 {
        let mut w = 0.0;
        for i in 0..n {
            let row = j.row(i);
            let mut s = 0.0;
            for l in i + 1..n {
                s += row[l] * x[l];
            }
            w += x[i] * (s + h[i]);
        }
        w
    };
    let exact_fields = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| j.row(i).iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + h[i])
            .collect()
    };
    let mut fields = exact_fields(&x);
    let mut weight = exact_weight(&x);
    let mut log_weights = vec![0.0; size];
    log_weights[0] = weight;
    for step in 1..size {
        let b = step.trailing_zeros() as usize;
        // flipping x_b changes the weight by -2 x_b (field_b)
        weight -= 2.0 * x[b] * fields[b];
        let old = x[b];
        x[b] = -old;
        let row = j.row(b);
        for (f, a) in fields.iter_mut().zip(row) {
            *f -= 2.0 * a * old;
        }
        if step % 4096 == 0 {
            fields = exact_fields(&x);
            weight = exact_weight(&x);
        }
        let gray = step ^ (step >> 1);
        log_weights[gray] = weight;
    }
    let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = log_weights.iter().map(|w| (w - max).exp()).sum();
    let log_z = max + sum.ln();
    let probs = log_weights.iter().map(|w| (w - log_z).exp()).collect();
    Ok(ExactDistribution {
        n,
        log_weights,
        log_partition: log_z - n as f64 * std::f64::consts::LN_2,
        probs,
        cdf: OnceLock::new(),
    })
}

pub fn log_partition(spec: &IsingSpec) -> Result<f64> {
    enumerate_distribution(spec).map(|d| d.log_partition)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlauberInit {
    UniformRandom,
    AllPlus,
    Provided(SpinConfiguration),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlauberConfig {
    pub burn_in_sweeps: usize,
    pub seed: u64,
    pub init: GlauberInit,
}

/// Default sweep count and whether the model lies outside the regime where
/// fast mixing is known (`||J||_inf >= 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurnIn {
    pub sweeps: usize,
    pub mixing_unverified: bool,
}

/// `max(1000, ceil(50 n ln n / (1 - min(||J||_inf, 0.99))))`.
pub fn default_burn_in(n: usize, inf_norm: f64) -> BurnIn {
    let nf = n.max(1) as f64;
    let denom = 1.0 - inf_norm.min(0.99);
    let sweeps = ((50.0 * nf * nf.ln()) / denom).ceil() as usize;
    BurnIn {
        sweeps: sweeps.max(1000),
        mixing_unverified: inf_norm >= 1.0,
    }
}

impl GlauberConfig {
    pub fn for_spec(spec: &IsingSpec, seed: u64) -> Self {
        GlauberConfig {
            burn_in_sweeps: default_burn_in(spec.dim(), spec.m()).sweeps,
            seed,
            init: GlauberInit::UniformRandom,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.burn_in_sweeps < 1 {
            return Err(Error::InvalidConfig("burn_in_sweeps must be >= 1".into()));
        }
        if let GlauberInit::Provided(x) = &self.init {
            if x.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: x.len(),
                });
            }
        }
        Ok(())
    }
}

/// Random-scan heat-bath chain over a sparse view of `J`.
#[derive(Debug, Clone)]
pub struct GlauberChain<'a> {
    spec: &'a IsingSpec,
    offsets: Vec<usize>,
    neighbours: Vec<(usize, f64)>,
}

impl<'a> GlauberChain<'a> {
    pub fn new(spec: &'a IsingSpec) -> Self {
        let n = spec.dim();
        let j = spec.interaction();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbours = Vec::new();
        offsets.push(0);
        for i in 0..n {
            neighbours.extend(
                j.row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(l, &v)| (l, v)),
            );
            offsets.push(neighbours.len());
        }
        GlauberChain {
            spec,
            offsets,
            neighbours,
        }
    }

    #[inline]
    fn field(&self, x: &[i8], i: usize) -> f64 {
        self.neighbours[self.offsets[i]..self.offsets[i + 1]]
            .iter()
            .map(|&(l, v)| v * x[l] as f64)
            .sum::<f64>()
            + self.spec.field().values()[i]
    }

    /// Pick a uniform site and resample it from its conditional law.
    #[inline]
    pub fn step<R: Rng + ?Sized>(&self, x: &mut SpinConfiguration, rng: &mut R) {
        let i = rng.gen_range(0..x.len());
        let p = prob_plus(self.field(x.spins(), i));
        let s = if rng.gen::<f64>() < p { 1 } else { -1 };
        x.set(i, s);
    }

    pub fn run<R: Rng + ?Sized>(&self, x: &mut SpinConfiguration, sweeps: usize, rng: &mut R) {
        let n = x.len();
        for _ in 0..sweeps * n {
            self.step(x, rng);
        }
    }
}

/// Runs `burn_in_sweeps * n` single-site updates and returns the final state.
pub fn glauber_sample_with<R: Rng + ?Sized>(
    spec: &IsingSpec,
    cfg: &GlauberConfig,
    rng: &mut R,
) -> Result<SpinConfiguration> {
    let n = spec.dim();
    cfg.validate(n)?;
    let mut x = match &cfg.init {
        GlauberInit::UniformRandom => SpinConfiguration::new(
            (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect(),
        )?,
        GlauberInit::AllPlus => SpinConfiguration::all_plus(n),
        GlauberInit::Provided(x) => x.clone(),
    };
    if n == 0 {
        return Ok(x);
    }
    GlauberChain::new(spec).run(&mut x, cfg.burn_in_sweeps, rng);
    Ok(x)
}

/// As [`glauber_sample_with`], with the generator seeded from `cfg.seed`.
pub fn glauber_sample(spec: &IsingSpec, cfg: &GlauberConfig) -> Result<SpinConfiguration> {
    let mut rng = seeded_rng(cfg.seed);
    glauber_sample_with(spec, cfg, &mut rng)
}
