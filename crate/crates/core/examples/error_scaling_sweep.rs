//! Run a small error-scaling sweep and write the standard outputs.
//!
//! ```text
//! cargo run --release --example error_scaling_sweep -- [out_dir]
//! ```

use ising_mple::experiment::{run_sweep, write_outputs, ExperimentConfig};

fn main() -> ising_mple::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "sweep_out".into());
    let cfg: ExperimentConfig = serde_json::from_str(
        r#"{
            "generator": "blocks",
            "n": 40,
            "k": [1, 2, 4],
            "M": 0.5,
            "trials": 8,
            "seed": 17,
            "mple": {"epsilon": 1.0, "max_iters": 200000}
        }"#,
    )
    .map_err(|e| ising_mple::Error::Parse(e.to_string()))?;
    let sweep = run_sweep(&cfg)?;
    for s in &sweep.summary.per_k {
        println!(
            "k = {}  median ||J_hat - J*||_F = {:.4}  sqrt(k ln n) = {:.4}  c_hat = {:.4}",
            s.k,
            s.median_frob_error.unwrap_or(f64::NAN),
            s.rate,
            s.c_hat.unwrap_or(f64::NAN)
        );
    }
    let files = write_outputs(std::path::Path::new(&out), &sweep)?;
    println!("wrote {}", files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "));
    Ok(())
}
