//! Recover a coupling matrix known to lie in the span of a few matchings,
//! from a single Glauber sample.
//!
//! ```text
//! cargo run --release --example fit_subspace -- [n] [k] [seed]
//! ```

use std::time::Instant;

use ising_mple::basis::{combine, gram_schmidt, BetaVector, DEFAULT_RANK_TOL};
use ising_mple::experiment::generators::gen_matchings;
use ising_mple::mple::{fit, neg_log_pl, MpleConfig};
use ising_mple::sampler::{glauber_sample, seeded_rng, GlauberConfig};
use ising_mple::IsingSpec;
use rand::Rng;

fn main() -> ising_mple::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let n = args.first().copied().unwrap_or(64);
    let k = args.get(1).copied().unwrap_or(2);
    let seed = args.get(2).copied().unwrap_or(1) as u64;
    let m = 0.5;

    let basis = gram_schmidt(&gen_matchings(n, k)?, DEFAULT_RANK_TOL)?;
    let mut rng = seeded_rng(seed);
    let beta_true = BetaVector((0..k).map(|_| rng.gen_range(-0.8..0.8)).collect());
    let j_true = combine(&basis, &beta_true)?;
    println!("n = {n}, k = {k}, ||J*||_inf = {:.4}", j_true.infinity_norm());

    let spec = IsingSpec::zero_field(j_true.clone());
    let x = glauber_sample(&spec, &GlauberConfig::for_spec(&spec, seed))?;

    let start = Instant::now();
    let res = fit(&basis, &x, &MpleConfig::new(m, 1.0))?;
    let secs = start.elapsed().as_secs_f64();

    let err = res.j_hat.add_scaled(-1.0, &j_true)?.frobenius_norm();
    println!(
        "iterations {} (formula {:.3e}, capped: {}), eta {:.3e}, {:.2} s",
        res.iterations, res.schedule.formula_iterations, res.schedule.capped, res.schedule.eta, secs
    );
    println!("beta*     {:?}", beta_true.0);
    println!("beta_hat  {:?}", res.beta_hat.0);
    println!(
        "||J_hat - J*||_F = {err:.4}   sqrt(k ln n) = {:.4}",
        (k as f64 * (n as f64).ln()).sqrt()
    );
    println!(
        "psi(beta_hat) - psi(beta*) = {:.4}",
        res.psi_hat - neg_log_pl(&j_true, &x)?
    );
    println!(
        "||J_hat||_inf = {:.4}  (<= 3M: {}, > 2M: {})",
        res.inf_norm_hat, res.within_3m, res.exceeds_2m
    );
    Ok(())
}
