//! Estimate the inverse temperature of a nearest-neighbour model on a torus
//! from one Glauber sample, with the curvature certificate.

use ising_mple::one_param::{fit_scalar, partition_certificate};
use ising_mple::sampler::{glauber_sample, GlauberConfig, GlauberInit};
use ising_mple::{InteractionMatrix, IsingSpec};

fn main() -> ising_mple::Result<()> {
    let side = 30;
    let n = side * side;
    let m = 2.0;
    let mut e = Vec::new();
    for r in 0..side {
        for c in 0..side {
            let v = r * side + c;
            for w in [r * side + (c + 1) % side, ((r + 1) % side) * side + c] {
                e.push((v.min(w), v.max(w), 0.25));
            }
        }
    }
    let j0 = InteractionMatrix::from_upper_entries(n, &e)?;

    println!("{:>6} {:>6} {:>10} {:>9} {:>12}", "beta*", "seed", "beta_hat", "boundary", "certificate");
    for beta_star in [0.3, 0.6, 1.2] {
        let spec = IsingSpec::zero_field(j0.scaled(beta_star));
        for seed in 0..3 {
            // below the critical point the grid chain mixes in O(log n) sweeps
            let cfg = GlauberConfig {
                burn_in_sweeps: 200,
                seed,
                init: GlauberInit::UniformRandom,
            };
            let x = glauber_sample(&spec, &cfg)?;
            let fit = fit_scalar(&j0, &x, m, 1e-12)?;
            let cert = partition_certificate(&j0, &x, fit.beta_hat, m)?;
            println!(
                "{beta_star:>6} {seed:>6} {:>10.4} {:>9} {:>12.3}",
                fit.beta_hat, fit.boundary, cert.certificate
            );
        }
    }
    Ok(())
}
