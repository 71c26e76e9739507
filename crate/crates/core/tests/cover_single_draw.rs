//! A single randomized draw should yield a valid cover with constant
//! probability, so retries are rarely needed.

use ising_mple::conditioning::{build_cover, default_eta, verify_cover};
use ising_mple::sampler::seeded_rng;
use ising_mple::{Error, InteractionMatrix};
use rand::Rng;

fn dense_model(n: usize, m: f64, seed: u64) -> InteractionMatrix {
    let mut rng = seeded_rng(seed);
    let mut e = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            e.push((i, j, rng.gen_range(-1.0..1.0)));
        }
    }
    let j = InteractionMatrix::from_upper_entries(n, &e).unwrap();
    j.scaled(m / j.infinity_norm())
}

#[test]
fn single_draw_success_rate() {
    let n = 200;
    let j = dense_model(n, 2.0, 9);
    let eta = default_eta(j.infinity_norm());
    let attempts = 200;
    let mut ok = 0;
    for s in 0..attempts {
        match build_cover(&j, eta, &mut seeded_rng(1000 + s), 1) {
            Ok(cover) => {
                assert!(verify_cover(&j, &cover).passed);
                ok += 1;
            }
            Err(Error::RetryExhausted { attempts }) => assert_eq!(attempts, 1),
            Err(e) => panic!("unexpected error {e}"),
        }
    }
    let rate = ok as f64 / attempts as f64;
    assert!(rate >= 0.4, "single-draw success rate {rate}");
}
