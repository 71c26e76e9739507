//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;

use ising_mple::conditioning::{best_subset_for_weights, build_cover, verify_cover, DEFAULT_MAX_RETRIES};
use ising_mple::experiment::{run_sweep, write_outputs, BetaTrue, ExperimentConfig, GeneratorKind};
use ising_mple::metrics::{conditional_variance_floor, linear_variance_exact, tv_chi_exact};
use ising_mple::model::conditional_prob_plus;
use ising_mple::mple::{directional_derivative, directional_second_derivative, neg_log_pl};
use ising_mple::one_param::fit_scalar;
use ising_mple::sampler::{enumerate_distribution, seeded_rng, GlauberChain, SeededRng};
use ising_mple::{ExternalField, InteractionMatrix, IsingSpec, SpinConfiguration};

struct Outcome {
    pass: bool,
    detail: String,
}

fn random_sym(n: usize, density: f64, rng: &mut SeededRng) -> InteractionMatrix {
    let mut e = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density) {
                e.push((i, j, rng.gen_range(-1.0..1.0)));
            }
        }
    }
    InteractionMatrix::from_upper_entries(n, &e).unwrap()
}

fn with_inf_norm(j: InteractionMatrix, target: f64) -> InteractionMatrix {
    let norm = j.infinity_norm();
    if norm == 0.0 {
        j
    } else {
        j.scaled(target / norm)
    }
}

fn random_x(n: usize, rng: &mut SeededRng) -> SpinConfiguration {
    SpinConfiguration::new((0..n).map(|_| if rng.gen() { 1 } else { -1 }).collect()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

/// Central differences at steps `h` and `h/2`, combined by Richardson
/// extrapolation.
fn fd_first(f: &dyn Fn(f64) -> f64, h: f64) -> f64 {
    let d = |h: f64| (f(h) - f(-h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

fn fd_second(f: &dyn Fn(f64) -> f64, h: f64) -> f64 {
    let f0 = f(0.0);
    let d = |h: f64| (f(h) - 2.0 * f0 + f(-h)) / (h * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

fn gradient_correctness() -> Outcome {
    let mut rng = seeded_rng(101);
    let n = 20;
    let (mut worst1, mut worst2) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let j = with_inf_norm(random_sym(n, 0.5, &mut rng), rng.gen_range(0.2..1.5));
        let a = random_sym(n, 0.5, &mut rng);
        let a = a.scaled(1.0 / a.frobenius_norm());
        let x = random_x(n, &mut rng);
        let f = |t: f64| neg_log_pl(&j.add_scaled(t, &a).unwrap(), &x).unwrap();
        let d1 = directional_derivative(&j, &a, &x).unwrap();
        let d2 = directional_second_derivative(&j, &a, &x).unwrap();
        worst1 = worst1.max(rel(fd_first(&f, 1e-3), d1));
        worst2 = worst2.max(rel(fd_second(&f, 1e-2), d2));
    }
    Outcome {
        pass: worst1 <= 1e-6 && worst2 <= 1e-6,
        detail: format!("max rel err first {worst1:.2e}, second {worst2:.2e} over 50 draws at n = 20"),
    }
}

fn pseudo_likelihood_identity() -> Outcome {
    let mut rng = seeded_rng(102);
    let n = 8;
    let mut worst = 0.0f64;
    let mut zero_exact = true;
    for _ in 0..100 {
        let j = with_inf_norm(random_sym(n, 0.7, &mut rng), rng.gen_range(0.1..2.0));
        let spec = IsingSpec::zero_field(j);
        let x = random_x(n, &mut rng);
        let oracle: f64 = (0..n)
            .map(|i| {
                let p = conditional_prob_plus(&spec, &x, i).unwrap();
                -(if x.get(i) == 1 { p } else { 1.0 - p }).ln()
            })
            .sum();
        worst = worst.max((neg_log_pl(spec.interaction(), &x).unwrap() - oracle).abs());
        let zero = neg_log_pl(&InteractionMatrix::zeros(n), &x).unwrap();
        zero_exact &= zero == n as f64 * std::f64::consts::LN_2;
    }
    Outcome {
        pass: worst <= 1e-10 && zero_exact,
        detail: format!("max abs gap {worst:.2e} over 100 specs; phi(0, x) == n ln 2: {zero_exact}"),
    }
}

fn sampler_fidelity() -> Outcome {
    let mut rng = seeded_rng(103);
    let n = 8;
    let j = with_inf_norm(random_sym(n, 0.8, &mut rng), 0.5);
    let spec = IsingSpec::zero_field(j);
    let exact = enumerate_distribution(&spec).unwrap();

    let draws = 200_000;
    let chain = GlauberChain::new(&spec);
    let mut counts = vec![0usize; 1 << n];
    for _ in 0..draws {
        let mut x = random_x(n, &mut rng);
        chain.run(&mut x, 200, &mut rng);
        counts[x.to_index()] += 1;
    }
    let tv: f64 = 0.5
        * counts
            .iter()
            .zip(exact.probs())
            .map(|(&c, &p)| (c as f64 / draws as f64 - p).abs())
            .sum::<f64>();

    let mut balance = 0.0f64;
    for t in 0..1usize << n {
        let x = SpinConfiguration::from_index(n, t);
        for i in 0..n {
            let mut spins = x.spins().to_vec();
            spins[i] = -spins[i];
            let y = SpinConfiguration::new(spins).unwrap();
            let flip = |from: &SpinConfiguration| {
                let p = conditional_prob_plus(&spec, from, i).unwrap();
                (if from.get(i) == 1 { 1.0 - p } else { p }) / n as f64
            };
            let gap = exact.prob(&x) * flip(&x) - exact.prob(&y) * flip(&y);
            balance = balance.max(gap.abs());
        }
    }
    Outcome {
        pass: tv <= 0.02 && balance <= 1e-12,
        detail: format!("TV {tv:.4} over {draws} draws (200 sweeps); detailed-balance gap {balance:.2e}"),
    }
}

fn sweep_config(n: usize, k: Vec<usize>, trials: usize, seed: u64) -> ExperimentConfig {
    serde_json::from_value(serde_json::json!({
        "generator": "matchings",
        "n": n,
        "k": k,
        "M": 0.5,
        "trials": trials,
        "seed": seed,
        "mple": {"epsilon": 1.0},
    }))
    .unwrap()
}

fn optimizer_certificate() -> Outcome {
    let sweep = run_sweep(&sweep_config(64, vec![1, 2, 4], 10, 104)).unwrap();
    let rows = &sweep.records;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    let good = rows.iter().filter(|r| r.psi_gap.is_some_and(|g| g <= 1.0)).count();
    let within = rows.iter().filter(|r| r.within_3m == Some(true)).count();
    let worst = rows.iter().filter_map(|r| r.psi_gap).fold(f64::NEG_INFINITY, f64::max);
    let frac = good as f64 / rows.len() as f64;
    Outcome {
        pass: failed == 0 && frac >= 0.95 && within == rows.len(),
        detail: format!(
            "{good}/{} with psi gap <= 1 (worst {worst:.3}), {within}/{} with ||J_hat||_inf <= 3M",
            rows.len(),
            rows.len()
        ),
    }
}

fn error_scaling() -> Outcome {
    let n = 128;
    let sweep = run_sweep(&sweep_config(n, vec![1, 2, 4, 8], 20, 105)).unwrap();
    let ln_n = (n as f64).ln();
    let per_k = &sweep.summary.per_k;
    let Some(m1) = per_k[0].median_frob_error else {
        return Outcome {
            pass: false,
            detail: "no successful k = 1 trials".into(),
        };
    };
    let c_hat = m1 / ln_n.sqrt();
    let mut pass = per_k.iter().all(|s| s.failures == 0);
    let mut parts = vec![format!("c_hat {c_hat:.3}")];
    for s in per_k {
        let kf = s.k as f64;
        let med = s.median_frob_error.unwrap_or(f64::NAN);
        let (lo, hi) = (0.2 * c_hat * kf.sqrt(), 3.0 * c_hat * (kf * ln_n).sqrt());
        pass &= med >= lo && med <= hi;
        parts.push(format!("k={} median {med:.3} in [{lo:.3}, {hi:.3}]", s.k));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn conditioning_trick() -> Outcome {
    let mut rng = seeded_rng(106);
    let n = 200;
    let mut built = 0;
    let mut verified = 0;
    let mut max_attempts = 0;
    let mut mass_ok = 0;
    let mut mass_checks = 0;
    for m in [0.5f64, 2.0, 4.0] {
        let eta = m.min(1.0) / 2.0;
        let mut covers = Vec::new();
        for t in 0..50 {
            let density = if t % 2 == 0 { 0.05 } else { 0.5 };
            let j = with_inf_norm(random_sym(n, density, &mut rng), m);
            match build_cover(&j, eta, &mut rng, DEFAULT_MAX_RETRIES) {
                Ok(cover) => {
                    built += 1;
                    max_attempts = max_attempts.max(cover.attempts);
                    let report = verify_cover(&j, &cover);
                    if report.passed && report.all_dobrushin {
                        verified += 1;
                    }
                    covers.push(cover);
                }
                Err(_) => {}
            }
        }
        for t in 0..100 {
            let Some(cover) = covers.get(t % covers.len().max(1)) else { break };
            let theta: Vec<f64> = (0..n)
                .map(|_| if rng.gen_bool(0.3) { rng.gen_range(0.0..10.0) } else { 0.0 })
                .collect();
            let total: f64 = theta.iter().sum();
            let (_, mass) = best_subset_for_weights(cover, &theta).unwrap();
            mass_checks += 1;
            if mass >= eta / (8.0 * m) * total {
                mass_ok += 1;
            }
        }
    }
    Outcome {
        pass: built == 150 && verified == 150 && mass_ok == mass_checks && mass_checks == 300,
        detail: format!(
            "built {built}/150 (max attempts {max_attempts}), verified {verified}/150, mass bound {mass_ok}/{mass_checks}"
        ),
    }
}

fn variance_floor() -> Outcome {
    let mut rng = seeded_rng(107);
    let n = 12;
    let mut ok = 0;
    let mut tightest = f64::INFINITY;
    for _ in 0..100 {
        let m = rng.gen_range(0.05..=2.0);
        let j = with_inf_norm(random_sym(n, 0.6, &mut rng), m);
        let h = ExternalField::new((0..n).map(|_| rng.gen_range(-0.5..0.5)).collect()).unwrap();
        let spec = IsingSpec::new(j, h).unwrap();
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm2: f64 = a.iter().map(|v| v * v).sum();
        let gamma = conditional_variance_floor(&spec);
        let var = linear_variance_exact(&spec, &a).unwrap();
        let bound = 0.01 * gamma * gamma * norm2 / spec.m();
        tightest = tightest.min(var / bound);
        if var >= bound {
            ok += 1;
        }
    }
    let free = IsingSpec::zero_field(InteractionMatrix::zeros(n));
    let a: Vec<f64> = (0..n).map(|i| (i as f64 - 5.5) / 3.0).collect();
    let norm2: f64 = a.iter().map(|v| v * v).sum();
    let var0 = linear_variance_exact(&free, &a).unwrap();
    let free_gap = rel(var0, norm2);
    Outcome {
        pass: ok == 100 && free_gap <= 1e-12,
        detail: format!(
            "{ok}/100 above 0.01 gamma^2 ||a||^2 / M (min ratio {tightest:.1}); J = 0 rel gap {free_gap:.1e}"
        ),
    }
}

fn divergence_bounds() -> Outcome {
    let mut rng = seeded_rng(108);
    let mut pairs = 0;
    let mut pinsker_ok = 0;
    for _ in 0..40 {
        let n = rng.gen_range(2..=10);
        let p = IsingSpec::new(
            with_inf_norm(random_sym(n, 0.6, &mut rng), rng.gen_range(0.1..1.5)),
            ExternalField::new((0..n).map(|_| rng.gen_range(-0.5..0.5)).collect()).unwrap(),
        )
        .unwrap();
        let q = IsingSpec::zero_field(with_inf_norm(random_sym(n, 0.6, &mut rng), rng.gen_range(0.1..1.5)));
        for (a, b) in [(&p, &q), (&q, &p)] {
            let r = tv_chi_exact(a, b).unwrap();
            pairs += 1;
            if r.bound_ok && r.tv <= (r.chi_square / 2.0).sqrt() + 1e-15 {
                pinsker_ok += 1;
            }
        }
    }

    let n = 10;
    let base = with_inf_norm(random_sym(n, 0.6, &mut rng), 0.5);
    let p = IsingSpec::zero_field(base.clone());
    let dir = random_sym(n, 0.6, &mut rng);
    let dir = dir.scaled(1.0 / dir.frobenius_norm());
    let mut slopes = Vec::new();
    for s in [0.25, 0.125, 0.0625, 0.03125] {
        let q = IsingSpec::zero_field(base.add_scaled(s, &dir).unwrap());
        let r = tv_chi_exact(&p, &q).unwrap();
        pairs += 1;
        if r.bound_ok {
            pinsker_ok += 1;
        }
        slopes.push(r.tv / s);
    }
    let finest = *slopes.last().unwrap();
    let stable = slopes.iter().all(|&c| rel(c, finest) <= 0.2);
    let shown: Vec<String> = slopes.iter().map(|c| format!("{c:.4}")).collect();
    Outcome {
        pass: pinsker_ok == pairs && stable,
        detail: format!(
            "tv <= sqrt(chi2/2) on {pinsker_ok}/{pairs} pairs; TV/||A||_F slopes [{}]",
            shown.join(", ")
        ),
    }
}

fn grid_mple(j: &InteractionMatrix, x: &SpinConfiguration, m: f64) -> f64 {
    let xf: Vec<f64> = x.spins().iter().map(|&s| s as f64).collect();
    let jx = j.mul_vec(&xf);
    let phi = |b: f64| -> f64 {
        jx.iter()
            .zip(&xf)
            .map(|(&f, &s)| (b * f).cosh().ln() - s * b * f)
            .sum()
    };
    let argmin = |lo: f64, hi: f64, step: f64| -> f64 {
        let steps = ((hi - lo) / step).round() as usize;
        (0..=steps)
            .map(|i| (lo + i as f64 * step).min(hi))
            .min_by(|a, b| phi(*a).total_cmp(&phi(*b)))
            .unwrap()
    };
    let mut best = argmin(-m, m, 1e-3);
    for step in [1e-6, 1e-9] {
        let w = step * 1e3;
        best = argmin((best - w).max(-m), (best + w).min(m), step);
    }
    best
}

fn one_parameter() -> Outcome {
    let mut rng = seeded_rng(109);
    let n = 14;
    let (beta_star, m) = (0.4, 1.0);
    let mut e = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            e.push((i, j, 1.0 / (n - 1) as f64));
        }
    }
    let j0 = InteractionMatrix::from_upper_entries(n, &e).unwrap();
    let spec = IsingSpec::zero_field(j0.scaled(beta_star));
    let dist = enumerate_distribution(&spec).unwrap();

    let trials = 200;
    let mut worst_grid = 0.0f64;
    let mut covered = 0;
    for _ in 0..trials {
        let x = dist.sample(&mut rng);
        let fit = fit_scalar(&j0, &x, m, 1e-13).unwrap();
        worst_grid = worst_grid.max((fit.beta_hat - grid_mple(&j0, &x, m)).abs());
        if (fit.beta_hat - beta_star).abs() <= fit.certificate {
            covered += 1;
        }
    }

    let f = dist.log_partition();
    let tail: f64 = dist
        .probs()
        .iter()
        .enumerate()
        .filter(|&(t, _)| {
            let x = SpinConfiguration::from_index(n, t);
            let xf: Vec<f64> = x.spins().iter().map(|&s| s as f64).collect();
            let q: f64 = j0.mul_vec(&xf).iter().zip(&xf).map(|(a, b)| a * b).sum();
            beta_star * q < f
        })
        .map(|(_, &p)| p)
        .sum();
    let tail_bound = (-f / 2.0).exp();
    let frac = covered as f64 / trials as f64;
    Outcome {
        pass: worst_grid <= 1e-6 && tail <= tail_bound && frac >= 0.95,
        detail: format!(
            "max |beta_hat - grid| {worst_grid:.1e}; Pr[tail] {tail:.4} <= e^(-F/2) {tail_bound:.4} (F = {f:.4}); certificate covers {covered}/{trials}"
        ),
    }
}

fn reproducibility() -> Outcome {
    let mut configs = vec![sweep_config(24, vec![1, 2], 3, 110)];
    let mut er = sweep_config(12, vec![1, 3], 3, 111);
    er.generator = GeneratorKind::ErdosRenyiIncidence;
    er.threads = Some(3);
    er.beta_true = BetaTrue::Uniform(1.5);
    configs.push(er);
    let mut same = 0;
    for cfg in &configs {
        let mut files = Vec::new();
        for _ in 0..2 {
            let dir = tempfile::tempdir().unwrap();
            let sweep = run_sweep(cfg).unwrap();
            write_outputs(dir.path(), &sweep).unwrap();
            files.push(std::fs::read(dir.path().join("results.csv")).unwrap());
        }
        if files[0] == files[1] && !files[0].is_empty() {
            same += 1;
        }
    }
    Outcome {
        pass: same == configs.len(),
        detail: format!("{same}/{} configs produced byte-identical results.csv", configs.len()),
    }
}

fn main() -> ExitCode {
    let criteria: Vec<(&str, Duration, fn() -> Outcome)> = vec![
        ("gradient correctness", Duration::from_secs(5), gradient_correctness),
        ("pseudo-likelihood identity", Duration::from_secs(60), pseudo_likelihood_identity),
        ("sampler fidelity", Duration::from_secs(60), sampler_fidelity),
        ("optimizer certificate", Duration::from_secs(300), optimizer_certificate),
        ("error scaling", Duration::from_secs(1200), error_scaling),
        ("conditioning trick", Duration::from_secs(120), conditioning_trick),
        ("variance floor", Duration::from_secs(60), variance_floor),
        ("divergence bounds", Duration::from_secs(60), divergence_bounds),
        ("one-parameter consistency", Duration::from_secs(60), one_parameter),
        ("reproducibility", Duration::from_secs(120), reproducibility),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.into_iter().enumerate() {
        let id = i + 1;
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let start = Instant::now();
        let out = check();
        let took = start.elapsed();
        let pass = out.pass && took <= budget;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {name}: {} ({:.1} s, budget {} s) {}",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            budget.as_secs(),
            out.detail
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
