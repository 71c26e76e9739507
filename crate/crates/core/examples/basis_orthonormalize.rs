//! Orthonormalize an overlapping family of edge sets and report how well the
//! raw coefficients are identified.

use ising_mple::basis::{
    beta_error_bound, combine, gram_schmidt, min_singular_value, project, unique_edge_counts, BetaVector,
    DEFAULT_RANK_TOL,
};
use ising_mple::InteractionMatrix;

fn edges(n: usize, list: &[(usize, usize)]) -> ising_mple::Result<InteractionMatrix> {
    let e: Vec<_> = list.iter().map(|&(i, j)| (i, j, 1.0)).collect();
    InteractionMatrix::from_upper_entries(n, &e)
}

fn main() -> ising_mple::Result<()> {
    let n = 6;
    let family = vec![
        edges(n, &[(0, 1), (1, 2), (2, 3)])?,
        edges(n, &[(2, 3), (3, 4), (4, 5)])?,
        edges(n, &[(0, 5), (1, 4)])?,
        // duplicate of the first: dropped by the rank check
        edges(n, &[(0, 1), (1, 2), (2, 3)])?,
    ];
    let basis = gram_schmidt(&family, DEFAULT_RANK_TOL)?;
    println!("rank {} of {}, dropped {:?}", basis.rank(), family.len(), basis.dropped());
    for row in basis.gram() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:6.3}")).collect();
        println!("  [{}]", cells.join(" "));
    }

    let kept: Vec<_> = family[..3].to_vec();
    let sigma = min_singular_value(&kept)?;
    let lambda = unique_edge_counts(&kept)?;
    println!("min singular value {sigma:.4}, unique edge counts {lambda:?}");

    let beta = BetaVector(vec![0.3, -0.2, 0.5]);
    let j = combine(&basis, &beta)?;
    let (back, residual) = project(&basis, &j)?;
    println!("beta {:?} -> raw {:?}", back.0, basis.to_raw(&back)?);
    println!("projection residual {residual:.2e}");
    println!(
        "a Frobenius error of 0.1 bounds the raw coefficient error by {:.4}",
        beta_error_bound(&lambda, 0.1)?
    );
    Ok(())
}
