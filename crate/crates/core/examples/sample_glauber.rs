//! Compare Glauber dynamics against the exact distribution of a small model.

use ising_mple::matrix::InteractionMatrix;
use ising_mple::sampler::{default_burn_in, enumerate_distribution, seeded_rng, GlauberChain};
use ising_mple::{IsingSpec, SpinConfiguration};
use rand::Rng;

fn main() -> ising_mple::Result<()> {
    let n = 6;
    // ring with a field on one site
    let edges: Vec<_> = (0..n).map(|i| (i.min((i + 1) % n), i.max((i + 1) % n), 0.3)).collect();
    let j = InteractionMatrix::from_upper_entries(n, &edges)?;
    let mut h = vec![0.0; n];
    h[0] = 0.4;
    let spec = IsingSpec::new(j, ising_mple::ExternalField::new(h)?)?;

    let exact = enumerate_distribution(&spec)?;
    println!("log partition F = {:.6}", exact.log_partition());

    let burn = default_burn_in(n, spec.m());
    println!("default burn-in: {} sweeps", burn.sweeps);

    let mut rng = seeded_rng(7);
    let chain = GlauberChain::new(&spec);
    let draws = 20_000;
    let mut counts = vec![0usize; 1 << n];
    let mut magnetization = 0.0;
    for _ in 0..draws {
        let mut x = SpinConfiguration::new((0..n).map(|_| if rng.gen() { 1 } else { -1 }).collect())?;
        chain.run(&mut x, 50, &mut rng);
        magnetization += x.get(0) as f64;
        counts[x.to_index()] += 1;
    }
    let tv: f64 = 0.5
        * counts
            .iter()
            .zip(exact.probs())
            .map(|(&c, &p)| (c as f64 / draws as f64 - p).abs())
            .sum::<f64>();
    let exact_mean = exact.expect(|x| x.get(0) as f64);
    println!("E[x_0]: exact {exact_mean:.4}, glauber {:.4}", magnetization / draws as f64);
    println!("TV(empirical, exact) = {tv:.4} from {draws} draws");
    Ok(())
}
