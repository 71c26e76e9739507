//! Build a subset cover whose conditional models are high temperature, then
//! check it and pick the heaviest set for a weight vector.

use ising_mple::conditioning::{best_subset_for_weights, bipartite_cover, build_cover, default_eta, verify_cover};
use ising_mple::sampler::seeded_rng;
use ising_mple::InteractionMatrix;
use rand::Rng;

fn main() -> ising_mple::Result<()> {
    let n = 120;
    let mut rng = seeded_rng(3);
    let mut e = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.08) {
                e.push((i, j, rng.gen_range(-1.0..1.0)));
            }
        }
    }
    let j = InteractionMatrix::from_upper_entries(n, &e)?;
    let j = j.scaled(2.0 / j.infinity_norm());
    let eta = default_eta(j.infinity_norm());

    let cover = build_cover(&j, eta, &mut rng, 64)?;
    let report = verify_cover(&j, &cover);
    println!(
        "M = {:.2}, eta = {eta}, {} sets, each coordinate in {} of them ({} attempt(s))",
        cover.m, cover.ell, cover.target_count, cover.attempts
    );
    println!(
        "valid: {}, largest in-set row sum {:.3}, largest conditional ||J'||_inf {:.3}",
        report.passed, report.max_row_sum, report.max_restricted_norm
    );

    let theta: Vec<f64> = (0..n).map(|i| if i < 10 { 1.0 } else { 0.01 }).collect();
    let (set, mass) = best_subset_for_weights(&cover, &theta)?;
    let total: f64 = theta.iter().sum();
    println!(
        "heaviest set {set} carries {mass:.3} of {total:.3} (guaranteed at least {:.3})",
        eta / (8.0 * cover.m) * total
    );

    // a bipartite graph admits the two-set cover
    let grid: Vec<_> = (0..8).map(|i| (i, i + 8, 0.5)).chain((0..7).map(|i| (i, i + 9, 0.5))).collect();
    let bip = InteractionMatrix::from_upper_entries(16, &grid)?;
    if let Some(c) = bipartite_cover(&bip) {
        println!("bipartite cover: {:?}", c.sets);
    }
    Ok(())
}
