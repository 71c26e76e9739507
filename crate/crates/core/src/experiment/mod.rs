//! Known-truth experiments: draw a structured family, a true coefficient
//! vector and one sample, fit, and record the recovery error.
//!
//! # Config file
//!
//! ```json
//! {
//!   "generator": "matchings",
//!   "n": 128,
//!   "k": [1, 2, 4, 8],
//!   "M": 0.5,
//!   "beta_true": {"uniform": 0.8},
//!   "trials": 20,
//!   "seed": 7,
//!   "sampler": {"exact_max_n": 18, "burn_in_sweeps": null},
//!   "mple": {"epsilon": 1.0, "max_iters": 2000000},
//!   "generator_params": {"edge_prob": 0.1, "time_steps": 2, "assouad_c": null},
//!   "threads": null
//! }
//! ```
//!
//! - `generator`: `matchings`, `blocks`, `spatio_temporal` (k must be 2,
//!   `n` divisible by `time_steps`, spatial graph a cycle),
//!   `erdos_renyi_incidence` (fresh `G(n, edge_prob)` family per trial) or
//!   `assouad` (matchings basis, `beta* = c theta` with random signs; `c`
//!   defaults to the largest value keeping `||J*||_inf <= min(1/2, M)`).
//! - `k`: one value or a list.
//! - `beta_true`: `{"uniform": b}` draws each coordinate from `[-b, b]`,
//!   `{"fixed": [..]}` uses the given orthonormal-basis coordinates, `"zero"`
//!   gives `J* = 0`. Whatever the choice, `beta*` is scaled down when needed so
//!   that `||J*||_inf <= M` and the factor is recorded.
//! - `sampler.exact_max_n`: samples are exact up to this dimension and drawn
//!   by Glauber dynamics above it, with `burn_in_sweeps` defaulting to the
//!   sampler's rule for the drawn `J*`.
//! - `mple`: any of `epsilon`, `lambda`, `iterations`, `eta`, `max_iters`,
//!   `grad_tol`, as in [`crate::mple::MpleConfig`].
//!
//! Trial `t` of the `g`-th grid value uses seed `seed ^ (g * trials + t)`.

pub mod generators;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use crate::basis::{combine, gram_schmidt, unique_edge_counts, BetaVector, DEFAULT_RANK_TOL};
use crate::error::{Error, Result};
use crate::io::write_json;
use crate::matrix::{InteractionMatrix, MatrixFile};
use crate::model::{IsingSpec, SpinConfiguration};
use crate::mple::{fit, neg_log_pl, MpleConfig, DEFAULT_MAX_ITERS};
use crate::sampler::{
    default_burn_in, enumerate_distribution, glauber_sample, seeded_rng, GlauberConfig, GlauberInit,
    SeededRng,
};

use generators::{
    assouad_scale, cycle_edges, gen_blocks, gen_erdos_renyi_incidence, gen_matchings, gen_spatio_temporal,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Matchings,
    Blocks,
    SpatioTemporal,
    ErdosRenyiIncidence,
    Assouad,
}

impl GeneratorKind {
    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::Matchings => "matchings",
            GeneratorKind::Blocks => "blocks",
            GeneratorKind::SpatioTemporal => "spatio_temporal",
            GeneratorKind::ErdosRenyiIncidence => "erdos_renyi_incidence",
            GeneratorKind::Assouad => "assouad",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaTrue {
    Uniform(f64),
    Fixed(Vec<f64>),
    Zero,
}

impl Default for BetaTrue {
    fn default() -> Self {
        BetaTrue::Uniform(0.8)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSettings {
    #[serde(default = "default_exact_max_n")]
    pub exact_max_n: usize,
    #[serde(default)]
    pub burn_in_sweeps: Option<usize>,
}

fn default_exact_max_n() -> usize {
    18
}

impl Default for SamplerSettings {
    fn default() -> Self {
        SamplerSettings {
            exact_max_n: default_exact_max_n(),
            burn_in_sweeps: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpleSettings {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub iterations: Option<usize>,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub grad_tol: f64,
}

fn default_epsilon() -> f64 {
    1.0
}

fn default_max_iters() -> usize {
    DEFAULT_MAX_ITERS
}

impl Default for MpleSettings {
    fn default() -> Self {
        MpleSettings {
            epsilon: default_epsilon(),
            lambda: None,
            iterations: None,
            eta: None,
            max_iters: default_max_iters(),
            grad_tol: 0.0,
        }
    }
}

impl MpleSettings {
    pub fn to_config(&self, m: f64) -> MpleConfig {
        MpleConfig {
            m,
            epsilon: self.epsilon,
            lambda: self.lambda,
            iterations: self.iterations,
            eta: self.eta,
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            trace_points: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorParams {
    #[serde(default = "default_edge_prob")]
    pub edge_prob: f64,
    #[serde(default = "default_time_steps")]
    pub time_steps: usize,
    #[serde(default)]
    pub assouad_c: Option<f64>,
}

fn default_edge_prob() -> f64 {
    0.1
}

fn default_time_steps() -> usize {
    2
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            edge_prob: default_edge_prob(),
            time_steps: default_time_steps(),
            assouad_c: None,
        }
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<usize>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(usize),
        Many(Vec<usize>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(k) => vec![k],
        OneOrMany::Many(v) => v,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub generator: GeneratorKind,
    pub n: usize,
    #[serde(deserialize_with = "one_or_many")]
    pub k: Vec<usize>,
    #[serde(rename = "M", alias = "m")]
    pub m: f64,
    #[serde(default)]
    pub beta_true: BetaTrue,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sampler: SamplerSettings,
    #[serde(default)]
    pub mple: MpleSettings,
    #[serde(default)]
    pub generator_params: GeneratorParams,
    /// Worker threads; defaults to the global rayon pool.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n < 2 {
            return bad(format!("n must be >= 2, got {}", self.n));
        }
        if self.k.is_empty() || self.k.contains(&0) {
            return bad("k grid must be non-empty with positive entries".into());
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if !(self.m > 0.0 && self.m.is_finite()) {
            return bad(format!("M must be positive, got {}", self.m));
        }
        if self.threads == Some(0) {
            return bad("threads must be >= 1".into());
        }
        match &self.beta_true {
            BetaTrue::Uniform(b) if !(*b >= 0.0 && b.is_finite()) => {
                return bad(format!("uniform bound must be >= 0, got {b}"))
            }
            BetaTrue::Fixed(v) if self.k.iter().any(|&k| k != v.len()) => {
                return bad("fixed beta_true length must equal every k in the grid".into())
            }
            _ => {}
        }
        if self.generator == GeneratorKind::SpatioTemporal {
            let t = self.generator_params.time_steps;
            if self.k.iter().any(|&k| k != 2) {
                return bad("spatio_temporal requires k = 2".into());
            }
            if t < 2 || self.n % t != 0 {
                return bad(format!("n = {} must be a multiple of time_steps = {t} >= 2", self.n));
            }
        }
        self.mple.to_config(self.m).schedule(self.n, self.k[0])?;
        Ok(())
    }
}

/// One row of `results.csv`. Measurements are empty when the trial failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub generator: String,
    pub n: usize,
    pub k: usize,
    #[serde(rename = "M")]
    pub m: f64,
    pub trial: usize,
    pub seed: u64,
    /// Factor applied to the drawn `beta*` to meet `||J*||_inf <= M`.
    pub scale: Option<f64>,
    /// `||J_hat - J*||_F`.
    pub frob_error: Option<f64>,
    /// `||b_hat - b*||_2` in the raw family's coordinates, for incidence
    /// families with every unique-edge count positive.
    pub beta_error: Option<f64>,
    /// `psi(beta_hat) - psi(beta*)`.
    pub psi_gap: Option<f64>,
    pub psi_hat: Option<f64>,
    pub psi_true: Option<f64>,
    pub inf_norm_true: Option<f64>,
    pub inf_norm_hat: Option<f64>,
    pub iterations: Option<usize>,
    pub within_3m: Option<bool>,
    pub exceeds_2m: Option<bool>,
    pub sampler: Option<String>,
    pub burn_in_sweeps: Option<usize>,
    pub mixing_unverified: Option<bool>,
    /// `frob_error^2 - sum_s lambda_s (b_hat_s - b*_s)^2`, nonnegative for
    /// incidence families.
    pub incidence_gap: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub k: usize,
    pub trial: usize,
    pub family: Vec<MatrixFile>,
    pub beta_true: BetaVector,
    pub j_true: MatrixFile,
    pub x: SpinConfiguration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSummary {
    pub k: usize,
    pub trials: usize,
    pub failures: usize,
    pub median_frob_error: Option<f64>,
    pub median_beta_error: Option<f64>,
    pub median_psi_gap: Option<f64>,
    /// Fraction of successful trials with `psi_gap <= epsilon`.
    pub psi_gap_within_epsilon: Option<f64>,
    /// `sqrt(k ln n)`.
    pub rate: f64,
    /// `median_frob_error / sqrt(k ln n)`.
    pub c_hat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub config: ExperimentConfig,
    pub per_k: Vec<KSummary>,
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub records: Vec<TrialRecord>,
    pub instances: Vec<Instance>,
    pub wall_seconds: Vec<f64>,
    pub summary: SweepSummary,
}

/// Median of the finite values.
pub fn median(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    })
}

struct Trial {
    k: usize,
    index: usize,
    seed: u64,
}

struct TrialOutput {
    record: TrialRecord,
    instance: Option<Instance>,
    wall: f64,
}

fn family(cfg: &ExperimentConfig, k: usize, rng: &mut SeededRng) -> Result<Vec<InteractionMatrix>> {
    let n = cfg.n;
    match cfg.generator {
        GeneratorKind::Matchings | GeneratorKind::Assouad => gen_matchings(n, k),
        GeneratorKind::Blocks => gen_blocks(n, k),
        GeneratorKind::ErdosRenyiIncidence => gen_erdos_renyi_incidence(n, k, cfg.generator_params.edge_prob, rng),
        GeneratorKind::SpatioTemporal => {
            let t = cfg.generator_params.time_steps;
            let v = n / t;
            let (a, b) = gen_spatio_temporal(v, t, &cycle_edges(v))?;
            Ok(vec![a, b])
        }
    }
}

fn run_trial(cfg: &ExperimentConfig, trial: &Trial) -> TrialOutput {
    let start = Instant::now();
    let mut record = TrialRecord {
        generator: cfg.generator.name().to_string(),
        n: cfg.n,
        k: trial.k,
        m: cfg.m,
        trial: trial.index,
        seed: trial.seed,
        scale: None,
        frob_error: None,
        beta_error: None,
        psi_gap: None,
        psi_hat: None,
        psi_true: None,
        inf_norm_true: None,
        inf_norm_hat: None,
        iterations: None,
        within_3m: None,
        exceeds_2m: None,
        sampler: None,
        burn_in_sweeps: None,
        mixing_unverified: None,
        incidence_gap: None,
        error: None,
    };
    let instance = match fill_trial(cfg, trial, &mut record) {
        Ok(instance) => Some(instance),
        Err(e) => {
            record.error = Some(e.to_string());
            None
        }
    };
    TrialOutput {
        record,
        instance,
        wall: start.elapsed().as_secs_f64(),
    }
}

fn fill_trial(cfg: &ExperimentConfig, trial: &Trial, record: &mut TrialRecord) -> Result<Instance> {
    let mut rng = seeded_rng(trial.seed);
    let raw = family(cfg, trial.k, &mut rng)?;
    let basis = gram_schmidt(&raw, DEFAULT_RANK_TOL)?;
    let rank = basis.rank();

    let mut beta: Vec<f64> = match (&cfg.generator, &cfg.beta_true) {
        (GeneratorKind::Assouad, _) => {
            let c = cfg
                .generator_params
                .assouad_c
                .unwrap_or_else(|| assouad_scale(&basis, cfg.m.min(0.5)));
            (0..rank).map(|_| if rng.gen() { c } else { -c }).collect()
        }
        (_, BetaTrue::Uniform(b)) => (0..rank).map(|_| rng.gen_range(-b..=*b)).collect(),
        (_, BetaTrue::Fixed(v)) => {
            if v.len() != rank {
                return Err(Error::LengthMismatch {
                    expected: rank,
                    got: v.len(),
                });
            }
            v.clone()
        }
        (_, BetaTrue::Zero) => vec![0.0; rank],
    };
    let mut j_true = combine(&basis, &BetaVector(beta.clone()))?;
    let norm = j_true.infinity_norm();
    let scale = if norm > cfg.m { cfg.m / norm } else { 1.0 };
    if scale != 1.0 {
        beta.iter_mut().for_each(|b| *b *= scale);
        j_true = combine(&basis, &BetaVector(beta.clone()))?;
    }
    let beta_true = BetaVector(beta);
    record.scale = Some(scale);
    record.inf_norm_true = Some(j_true.infinity_norm());

    let spec = IsingSpec::zero_field(j_true.clone());
    let x = if cfg.n <= cfg.sampler.exact_max_n {
        record.sampler = Some("exact".into());
        enumerate_distribution(&spec)?.sample(&mut rng)
    } else {
        let default = default_burn_in(cfg.n, spec.m());
        let sweeps = cfg.sampler.burn_in_sweeps.unwrap_or(default.sweeps);
        record.sampler = Some("glauber".into());
        record.burn_in_sweeps = Some(sweeps);
        record.mixing_unverified = Some(default.mixing_unverified);
        let gcfg = GlauberConfig {
            burn_in_sweeps: sweeps,
            seed: rng.gen(),
            init: GlauberInit::UniformRandom,
        };
        glauber_sample(&spec, &gcfg)?
    };

    let result = fit(&basis, &x, &cfg.mple.to_config(cfg.m))?;
    let psi_true = neg_log_pl(&j_true, &x)?;
    let diff = result.j_hat.add_scaled(-1.0, &j_true)?;
    let frob = diff.frobenius_norm();
    record.frob_error = Some(frob);
    record.psi_hat = Some(result.psi_hat);
    record.psi_true = Some(psi_true);
    record.psi_gap = Some(result.psi_hat - psi_true);
    record.inf_norm_hat = Some(result.inf_norm_hat);
    record.iterations = Some(result.iterations);
    record.within_3m = Some(result.within_3m);
    record.exceeds_2m = Some(result.exceeds_2m);

    if basis.is_full_rank() {
        if let Ok(lambda) = unique_edge_counts(&raw) {
            if lambda.iter().all(|&l| l > 0) {
                let b_hat = basis.to_raw(&result.beta_hat)?;
                let b_true = basis.to_raw(&beta_true)?;
                let d: Vec<f64> = b_hat.iter().zip(&b_true).map(|(a, b)| a - b).collect();
                record.beta_error = Some(d.iter().map(|v| v * v).sum::<f64>().sqrt());
                let weighted: f64 = d.iter().zip(&lambda).map(|(v, &l)| l as f64 * v * v).sum();
                record.incidence_gap = Some(frob * frob - weighted);
            }
        }
    }

    Ok(Instance {
        k: trial.k,
        trial: trial.index,
        family: raw.into_iter().map(MatrixFile::from).collect(),
        beta_true,
        j_true: MatrixFile::from(j_true),
        x,
    })
}

fn summarize(cfg: &ExperimentConfig, records: &[TrialRecord]) -> SweepSummary {
    let ln_n = (cfg.n as f64).ln();
    let per_k = cfg
        .k
        .iter()
        .map(|&k| {
            let rows: Vec<&TrialRecord> = records.iter().filter(|r| r.k == k).collect();
            let ok: Vec<&&TrialRecord> = rows.iter().filter(|r| r.error.is_none()).collect();
            let median_frob_error = median(ok.iter().filter_map(|r| r.frob_error));
            let rate = (k as f64 * ln_n).sqrt();
            let within = ok
                .iter()
                .filter(|r| r.psi_gap.is_some_and(|g| g <= cfg.mple.epsilon))
                .count();
            KSummary {
                k,
                trials: rows.len(),
                failures: rows.len() - ok.len(),
                median_frob_error,
                median_beta_error: median(ok.iter().filter_map(|r| r.beta_error)),
                median_psi_gap: median(ok.iter().filter_map(|r| r.psi_gap)),
                psi_gap_within_epsilon: (!ok.is_empty()).then(|| within as f64 / ok.len() as f64),
                rate,
                c_hat: median_frob_error.map(|m| m / rate),
            }
        })
        .collect();
    SweepSummary {
        config: cfg.clone(),
        per_k,
    }
}

/// Runs every trial of the grid. Per-trial failures are recorded in the
/// corresponding row and do not stop the sweep.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Sweep> {
    cfg.validate()?;
    let trials: Vec<Trial> = cfg
        .k
        .iter()
        .enumerate()
        .flat_map(|(g, &k)| {
            (0..cfg.trials).map(move |t| Trial {
                k,
                index: t,
                seed: cfg.seed ^ (g * cfg.trials + t) as u64,
            })
        })
        .collect();
    let work = || -> Vec<TrialOutput> { trials.par_iter().map(|t| run_trial(cfg, t)).collect() };
    let outputs = match cfg.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(work),
        None => work(),
    };
    let mut records = Vec::with_capacity(outputs.len());
    let mut instances = Vec::new();
    let mut wall_seconds = Vec::with_capacity(outputs.len());
    for out in outputs {
        records.push(out.record);
        instances.extend(out.instance);
        wall_seconds.push(out.wall);
    }
    let summary = summarize(cfg, &records);
    Ok(Sweep {
        records,
        instances,
        wall_seconds,
        summary,
    })
}

#[derive(Serialize)]
struct TimingRow {
    k: usize,
    trial: usize,
    wall_seconds: f64,
}

/// Writes `results.csv`, `summary.json`, `timing.csv` and one
/// `instances/k{k}_trial{t}.json` per successful trial. Timing lives in its
/// own file so that the other outputs are reproducible byte for byte.
pub fn write_outputs(dir: &Path, sweep: &Sweep) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir.join("instances"))?;
    let results = dir.join("results.csv");
    let mut w = csv::Writer::from_path(&results)?;
    for r in &sweep.records {
        w.serialize(r)?;
    }
    w.flush()?;

    let timing = dir.join("timing.csv");
    let mut w = csv::Writer::from_path(&timing)?;
    for (r, &wall_seconds) in sweep.records.iter().zip(&sweep.wall_seconds) {
        w.serialize(TimingRow {
            k: r.k,
            trial: r.trial,
            wall_seconds,
        })?;
    }
    w.flush()?;

    let summary = dir.join("summary.json");
    write_json(&summary, &sweep.summary)?;
    for inst in &sweep.instances {
        write_json(
            &dir.join("instances").join(format!("k{}_trial{}.json", inst.k, inst.trial)),
            inst,
        )?;
    }
    Ok(vec![results, summary, timing])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(generator: GeneratorKind, k: Vec<usize>) -> ExperimentConfig {
        ExperimentConfig {
            generator,
            n: 12,
            k,
            m: 0.5,
            beta_true: BetaTrue::default(),
            trials: 3,
            seed: 11,
            sampler: SamplerSettings::default(),
            mple: MpleSettings {
                max_iters: 20_000,
                ..MpleSettings::default()
            },
            generator_params: GeneratorParams::default(),
            threads: Some(2),
        }
    }

    #[test]
    fn config_parses_scalar_and_list_k() {
        let a: ExperimentConfig =
            serde_json::from_str(r#"{"generator": "blocks", "n": 10, "k": 2, "M": 1.0, "trials": 1}"#).unwrap();
        assert_eq!(a.k, vec![2]);
        assert_eq!(a.beta_true, BetaTrue::Uniform(0.8));
        let b: ExperimentConfig = serde_json::from_str(
            r#"{"generator": "matchings", "n": 10, "k": [1, 2], "m": 1.0, "trials": 1, "beta_true": "zero"}"#,
        )
        .unwrap();
        assert_eq!(b.k, vec![1, 2]);
        assert_eq!(b.beta_true, BetaTrue::Zero);
        assert!(serde_json::from_str::<ExperimentConfig>(
            r#"{"generator": "matchings", "n": 10, "k": 1, "M": 1.0, "trials": 1, "typo": 3}"#
        )
        .is_err());
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut c = small(GeneratorKind::SpatioTemporal, vec![1]);
        assert!(c.validate().is_err());
        c.k = vec![2];
        assert!(c.validate().is_ok());
        c.n = 13;
        assert!(c.validate().is_err());
        let mut c = small(GeneratorKind::Matchings, vec![]);
        assert!(c.validate().is_err());
        c.k = vec![1];
        c.trials = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn sweep_rows_and_determinism() {
        let cfg = small(GeneratorKind::Matchings, vec![1, 2]);
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(a.records.len(), 6);
        assert_eq!(a.records, b.records);
        assert!(a.records.iter().all(|r| r.error.is_none()));
        for r in &a.records {
            assert!(r.inf_norm_true.unwrap() <= 0.5 + 1e-12);
            assert!(r.incidence_gap.unwrap() >= -1e-9);
        }
        let seeds: Vec<u64> = a.records.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, vec![11, 10, 9, 8, 15, 14]);
        assert_eq!(a.summary.per_k.len(), 2);
    }

    #[test]
    fn failures_are_recorded_not_raised() {
        let mut cfg = small(GeneratorKind::Matchings, vec![1, 7]);
        cfg.trials = 1;
        let s = run_sweep(&cfg).unwrap();
        assert!(s.records[0].error.is_none());
        assert!(s.records[1].error.as_deref().unwrap().contains("groups"));
        assert_eq!(s.summary.per_k[1].failures, 1);
        assert_eq!(s.instances.len(), 1);
    }

    #[test]
    fn every_generator_runs() {
        for g in [
            GeneratorKind::Blocks,
            GeneratorKind::ErdosRenyiIncidence,
            GeneratorKind::Assouad,
        ] {
            let s = run_sweep(&small(g, vec![2])).unwrap();
            assert!(s.records.iter().all(|r| r.error.is_none()), "{g:?}: {:?}", s.records);
        }
        let mut st = small(GeneratorKind::SpatioTemporal, vec![2]);
        st.generator_params.time_steps = 3;
        let s = run_sweep(&st).unwrap();
        assert!(s.records.iter().all(|r| r.error.is_none()));
    }

    #[test]
    fn outputs_are_byte_identical() {
        let cfg = small(GeneratorKind::Blocks, vec![1]);
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        write_outputs(d1.path(), &run_sweep(&cfg).unwrap()).unwrap();
        write_outputs(d2.path(), &run_sweep(&cfg).unwrap()).unwrap();
        for f in ["results.csv", "summary.json", "instances/k1_trial0.json"] {
            assert_eq!(fs::read(d1.path().join(f)).unwrap(), fs::read(d2.path().join(f)).unwrap());
        }
        let header = fs::read_to_string(d1.path().join("results.csv")).unwrap();
        assert!(header.starts_with("generator,n,k,M,trial,seed"));
    }

    #[test]
    fn median_handles_even_and_empty() {
        assert_eq!(median([3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median([4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median([f64::NAN]), None);
    }
}
