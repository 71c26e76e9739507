use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use ising_mple::basis::{gram_schmidt, min_singular_value, unique_edge_counts};
use ising_mple::conditioning::{bipartite_cover, build_cover, default_eta, verify_cover, DEFAULT_MAX_RETRIES};
use ising_mple::experiment::{run_sweep, write_outputs, ExperimentConfig};
use ising_mple::io::{load_basis, load_model, load_spins, load_vector};
use ising_mple::metrics::{conditional_variance_floor, linear_variance_exact, tv_chi_exact};
use ising_mple::mple::{fit, MpleConfig, DEFAULT_MAX_ITERS};
use ising_mple::one_param::{fit_scalar, partition_certificate};
use ising_mple::sampler::{
    default_burn_in, enumerate_distribution, glauber_sample_with, seeded_rng, GlauberConfig, GlauberInit,
};

#[derive(Parser)]
#[command(name = "ising-mple", version, about = "Single-sample Ising model estimation by pseudo-likelihood")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw spin configurations from a model (JSON lines)
    Sample(SampleArgs),
    /// Inspect a basis file
    Basis {
        #[command(subcommand)]
        command: BasisCommand,
    },
    /// Fit coefficients over a basis from one sample
    Fit(FitArgs),
    /// Build a conditioning subset cover for a model
    Cover(CoverArgs),
    /// Fit a single inverse temperature beta in J = beta * J0
    Fit1(Fit1Args),
    /// Exact divergences and variances for small models
    Metrics(MetricsArgs),
    /// Run experiment sweeps
    Experiment {
        #[command(subcommand)]
        command: ExperimentCommand,
    },
}

#[derive(Subcommand)]
enum BasisCommand {
    /// Gram matrix, rank after orthonormalization, unique-edge counts
    Check {
        #[arg(long)]
        basis: PathBuf,
        #[arg(long, default_value_t = ising_mple::basis::DEFAULT_RANK_TOL)]
        rank_tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ExperimentCommand {
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Exact,
    Glauber,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum, default_value = "glauber")]
    method: Method,
    /// Glauber sweeps per draw; defaults to the burn-in rule for the model
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    basis: PathBuf,
    #[arg(long)]
    sample: PathBuf,
    #[arg(long = "M", alias = "m")]
    m: f64,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    max_iters: usize,
    #[arg(long, default_value_t = 0.0)]
    grad_tol: f64,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CoverArgs {
    #[arg(long)]
    model: PathBuf,
    /// Defaults to min(1, M) / 2 with M = ||J||_inf
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_RETRIES)]
    max_retries: usize,
    /// Use the two-set cover when the interaction graph is bipartite
    #[arg(long)]
    bipartite: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Fit1Args {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    sample: PathBuf,
    #[arg(long = "M", alias = "m")]
    m: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    p: PathBuf,
    #[arg(long)]
    q: Option<PathBuf>,
    /// JSON array of coefficients for Var(a'x) under P
    #[arg(long)]
    a: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(out: Option<&Path>, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn sample(args: SampleArgs) -> Result<()> {
    let spec = load_model(&args.model)?;
    let mut rng = seeded_rng(args.seed);
    let mut lines = String::new();
    match args.method {
        Method::Exact => {
            let dist = enumerate_distribution(&spec)?;
            for _ in 0..args.count {
                lines += &serde_json::to_string(&dist.sample(&mut rng))?;
                lines.push('\n');
            }
        }
        Method::Glauber => {
            let rule = default_burn_in(spec.dim(), spec.m());
            if rule.mixing_unverified {
                eprintln!("warning: ||J||_inf = {} >= 1; mixing time is not guaranteed", spec.m());
            }
            let cfg = GlauberConfig {
                burn_in_sweeps: args.sweeps.unwrap_or(rule.sweeps),
                seed: args.seed,
                init: GlauberInit::UniformRandom,
            };
            eprintln!("glauber: {} sweeps per draw", cfg.burn_in_sweeps);
            for _ in 0..args.count {
                lines += &serde_json::to_string(&glauber_sample_with(&spec, &cfg, &mut rng)?)?;
                lines.push('\n');
            }
        }
    }
    match args.out {
        Some(path) => fs::write(&path, lines).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{lines}"),
    }
    Ok(())
}

fn basis_check(path: &Path, rank_tol: f64, out: Option<&Path>) -> Result<()> {
    let raw = load_basis(path)?;
    let basis = gram_schmidt(&raw, rank_tol)?;
    let gram: Vec<Vec<f64>> = raw
        .iter()
        .map(|a| raw.iter().map(|b| ising_mple::matrix::trace_inner(a, b)).collect())
        .collect::<ising_mple::Result<_>>()?;
    let lambda = unique_edge_counts(&raw).ok();
    emit(
        out,
        &json!({
            "n": basis.dim(),
            "k_input": raw.len(),
            "k": basis.rank(),
            "dropped": basis.dropped(),
            "gram": gram,
            "min_singular_value": min_singular_value(&raw)?,
            "unique_edge_counts": lambda,
        }),
    )
}

fn fit_cmd(args: FitArgs) -> Result<()> {
    let raw = load_basis(&args.basis)?;
    let basis = gram_schmidt(&raw, ising_mple::basis::DEFAULT_RANK_TOL)?;
    let x = load_spins(&args.sample)?;
    let cfg = MpleConfig {
        lambda: args.lambda,
        iterations: args.iterations,
        eta: args.eta,
        ..MpleConfig::new(args.m, args.epsilon)
            .with_max_iters(args.max_iters)
            .with_grad_tol(args.grad_tol)
    };
    let res = fit(&basis, &x, &cfg)?;
    let mut value = serde_json::to_value(&res)?;
    value["beta_raw"] = json!(basis.to_raw(&res.beta_hat).ok());
    emit(args.out.as_deref(), &value)
}

fn cover(args: CoverArgs) -> Result<()> {
    let spec = load_model(&args.model)?;
    let j = spec.interaction();
    let fast = if args.bipartite { bipartite_cover(j) } else { None };
    let method = if fast.is_some() { "bipartite" } else { "randomized" };
    if args.bipartite && fast.is_none() {
        eprintln!("interaction graph is not bipartite; using the randomized construction");
    }
    let cover = match fast {
        Some(c) => c,
        None => {
            let eta = args.eta.unwrap_or_else(|| default_eta(spec.m()));
            build_cover(j, eta, &mut seeded_rng(args.seed), args.max_retries)?
        }
    };
    let report = verify_cover(j, &cover);
    emit(args.out.as_deref(), &json!({"method": method, "cover": cover, "report": report}))
}

fn fit1(args: Fit1Args) -> Result<()> {
    let spec = load_model(&args.model)?;
    let x = load_spins(&args.sample)?;
    let j = spec.interaction();
    let res = fit_scalar(j, &x, args.m, args.tol)?;
    let cert = if res.degenerate {
        None
    } else {
        Some(partition_certificate(j, &x, res.beta_hat, args.m)?)
    };
    emit(args.out.as_deref(), &json!({"fit": res, "partition": cert}))
}

fn metrics(args: MetricsArgs) -> Result<()> {
    let p = load_model(&args.p)?;
    let mut report = json!({"gamma_p": conditional_variance_floor(&p), "m_p": p.m()});
    if let Some(q) = &args.q {
        let q = load_model(q)?;
        report["divergence"] = serde_json::to_value(tv_chi_exact(&p, &q)?)?;
        report["gamma_q"] = json!(conditional_variance_floor(&q));
    }
    if let Some(a) = &args.a {
        let a = load_vector(a)?;
        let norm2: f64 = a.iter().map(|v| v * v).sum();
        report["variance"] = json!(linear_variance_exact(&p, &a)?);
        report["a_norm2"] = json!(norm2);
    }
    emit(args.out.as_deref(), &report)
}

fn experiment(config: &Path, out_dir: &Path) -> Result<()> {
    let cfg = ExperimentConfig::load(config)?;
    let sweep = run_sweep(&cfg)?;
    let failed = sweep.records.iter().filter(|r| r.error.is_some()).count();
    write_outputs(out_dir, &sweep)?;
    for s in &sweep.summary.per_k {
        eprintln!(
            "k = {:>3}  trials {:>3}  failed {:>3}  median ||J_hat - J*||_F {}  c_hat {}",
            s.k,
            s.trials,
            s.failures,
            s.median_frob_error.map_or("-".into(), |v| format!("{v:.4}")),
            s.c_hat.map_or("-".into(), |v| format!("{v:.4}")),
        );
    }
    if failed == sweep.records.len() {
        bail!("every trial failed; see results.csv");
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Sample(args) => sample(args),
        Command::Basis {
            command: BasisCommand::Check { basis, rank_tol, out },
        } => basis_check(&basis, rank_tol, out.as_deref()),
        Command::Fit(args) => fit_cmd(args),
        Command::Cover(args) => cover(args),
        Command::Fit1(args) => fit1(args),
        Command::Metrics(args) => metrics(args),
        Command::Experiment {
            command: ExperimentCommand::Run { config, out_dir },
        } => experiment(&config, &out_dir),
    }
}
