//! Exact TV and chi-square between nearby models, and the variance of a
//! linear statistic against its anti-concentration floor.

use ising_mple::metrics::{conditional_variance_floor, linear_variance_exact, tv_chi_exact};
use ising_mple::sampler::seeded_rng;
use ising_mple::{InteractionMatrix, IsingSpec};
use rand::Rng;

fn main() -> ising_mple::Result<()> {
    let n = 10;
    let mut rng = seeded_rng(5);
    let mut random = || -> ising_mple::Result<InteractionMatrix> {
        let mut e = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                e.push((i, j, rng.gen_range(-1.0..1.0)));
            }
        }
        InteractionMatrix::from_upper_entries(n, &e)
    };
    let base = random()?;
    let base = base.scaled(0.5 / base.infinity_norm());
    let dir = random()?;
    let dir = dir.scaled(1.0 / dir.frobenius_norm());
    let p = IsingSpec::zero_field(base.clone());

    println!("{:>10} {:>10} {:>12} {:>10}", "||A||_F", "TV", "chi^2", "TV/||A||");
    for s in [0.4, 0.2, 0.1, 0.05, 0.025] {
        let q = IsingSpec::zero_field(base.add_scaled(s, &dir)?);
        let r = tv_chi_exact(&p, &q)?;
        println!("{s:>10} {:>10.5} {:>12.3e} {:>10.4}", r.tv, r.chi_square, r.tv / s);
    }

    let gamma = conditional_variance_floor(&p);
    let a: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -0.5 }).collect();
    let norm2: f64 = a.iter().map(|v| v * v).sum();
    let var = linear_variance_exact(&p, &a)?;
    println!("gamma = {gamma:.4}; Var(a'x) = {var:.4}, ||a||^2 = {norm2:.4}");
    Ok(())
}
