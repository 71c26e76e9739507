//! Estimation of a single inverse temperature `beta` in `J = beta * J0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dot, SquareMatrix};
use crate::model::SpinConfiguration;
use crate::mple::log_cosh;

/// Width below which bisection stops regardless of `tol`.
pub const MIN_BRACKET: f64 = 1e-12;

/// `J x` and `x` as floats, shared by the scalar evaluations.
#[derive(Debug, Clone)]
pub struct ScalarProblem {
    jx: Vec<f64>,
    x: Vec<f64>,
}

impl ScalarProblem {
    pub fn new(j: &SquareMatrix, x: &SpinConfiguration) -> Result<Self> {
        if j.dim() != x.len() {
            return Err(Error::DimensionMismatch {
                expected: j.dim(),
                got: x.len(),
            });
        }
        let xf = x.as_f64();
        Ok(ScalarProblem {
            jx: j.mul_vec(&xf),
            x: xf,
        })
    }

    /// `x' J x`.
    pub fn xjx(&self) -> f64 {
        dot(&self.x, &self.jx)
    }

    /// `||J x||_2^2`.
    pub fn jx_norm2(&self) -> f64 {
        dot(&self.jx, &self.jx)
    }

    pub fn jx_inf(&self) -> f64 {
        self.jx.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn phi(&self, beta: f64) -> f64 {
        self.jx
            .iter()
            .zip(&self.x)
            .map(|(&f, &s)| log_cosh(beta * f) - s * beta * f + std::f64::consts::LN_2)
            .sum()
    }

    pub fn phi_prime(&self, beta: f64) -> f64 {
        self.jx
            .iter()
            .zip(&self.x)
            .map(|(&f, &s)| f * ((beta * f).tanh() - s))
            .sum()
    }

    pub fn phi_double_prime(&self, beta: f64) -> f64 {
        self.jx
            .iter()
            .map(|&f| {
                let t = (beta * f).tanh();
                f * f * (1.0 - t * t)
            })
            .sum()
    }

    /// `sech^2(M ||Jx||_inf) ||Jx||_2^2`, a lower bound on `phi''` over `[-M, M]`.
    pub fn second_deriv_floor(&self, m: f64) -> f64 {
        let t = (m * self.jx_inf()).tanh();
        (1.0 - t * t) * self.jx_norm2()
    }

    /// `max(|phi'(-M)|, |phi'(M)|) / floor`.
    ///
    /// `phi'` is nondecreasing and vanishes at the minimizer, so for any `beta*`
    /// in `[-M, M]` we have `|phi'(beta*)| <= max(|phi'(-M)|, |phi'(M)|)`, and
    /// dividing by the curvature floor bounds `|beta_hat - beta*|`.
    pub fn certificate(&self, m: f64) -> f64 {
        let num = self.phi_prime(-m).abs().max(self.phi_prime(m).abs());
        num / self.second_deriv_floor(m)
    }
}

/// `phi(beta J)` for the sample `x`.
pub fn phi_scalar(beta: f64, j: &SquareMatrix, x: &SpinConfiguration) -> Result<f64> {
    Ok(ScalarProblem::new(j, x)?.phi(beta))
}

/// `d phi(beta J) / d beta = sum_i (J_i x)(tanh(beta J_i x) - x_i)`.
pub fn phi_prime(beta: f64, j: &SquareMatrix, x: &SpinConfiguration) -> Result<f64> {
    Ok(ScalarProblem::new(j, x)?.phi_prime(beta))
}

/// `d^2 phi(beta J) / d beta^2 = sum_i (J_i x)^2 sech^2(beta J_i x)`.
pub fn phi_double_prime(beta: f64, j: &SquareMatrix, x: &SpinConfiguration) -> Result<f64> {
    Ok(ScalarProblem::new(j, x)?.phi_double_prime(beta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarFitResult {
    pub beta_hat: f64,
    pub phi_prime_at_hat: f64,
    pub second_deriv_floor: f64,
    /// Bound on `|beta_hat - beta*|` valid whenever `|beta*| <= M`.
    pub certificate: f64,
    /// Final bisection interval.
    pub bracket: (f64, f64),
    /// `beta_hat` sits on `-M` or `M`.
    pub boundary: bool,
    /// `J x = 0`: `phi` is flat and the certificate is infinite.
    pub degenerate: bool,
    pub iterations: usize,
}

/// Minimizes `phi(beta J)` over `[-M, M]` by bisection on `phi'`.
pub fn fit_scalar(j: &SquareMatrix, x: &SpinConfiguration, m: f64, tol: f64) -> Result<ScalarFitResult> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidConfig(format!("M must be positive, got {m}")));
    }
    if !(tol >= 0.0) {
        return Err(Error::InvalidConfig(format!("tol must be >= 0, got {tol}")));
    }
    let p = ScalarProblem::new(j, x)?;
    if p.jx_norm2() == 0.0 {
        return Ok(ScalarFitResult {
            beta_hat: 0.0,
            phi_prime_at_hat: 0.0,
            second_deriv_floor: 0.0,
            certificate: f64::INFINITY,
            bracket: (-m, m),
            boundary: false,
            degenerate: true,
            iterations: 0,
        });
    }
    let floor = p.second_deriv_floor(m);
    let certificate = p.certificate(m);
    let at = |beta: f64, bracket, boundary, iterations| ScalarFitResult {
        beta_hat: beta,
        phi_prime_at_hat: p.phi_prime(beta),
        second_deriv_floor: floor,
        certificate,
        bracket,
        boundary,
        degenerate: false,
        iterations,
    };
    let (mut lo, mut hi) = (-m, m);
    if p.phi_prime(lo) >= 0.0 {
        return Ok(at(lo, (lo, hi), true, 0));
    }
    if p.phi_prime(hi) <= 0.0 {
        return Ok(at(hi, (lo, hi), true, 0));
    }
    let mut iterations = 0;
    loop {
        let mid = 0.5 * (lo + hi);
        iterations += 1;
        let d = p.phi_prime(mid);
        if d.abs() <= tol || hi - lo <= MIN_BRACKET || mid == lo || mid == hi {
            return Ok(at(mid, (lo, hi), false, iterations));
        }
        if d < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionCertificate {
    /// `x' J x`, the observable proxy for `F(beta* J) / beta*`.
    pub xjx: f64,
    /// `beta_hat * x' J x`.
    pub log_partition_proxy: f64,
    /// Bound on `|beta_hat - beta*|` for `|beta*| <= M`.
    pub certificate: f64,
}

pub fn partition_certificate(
    j: &SquareMatrix,
    x: &SpinConfiguration,
    beta_hat: f64,
    m: f64,
) -> Result<PartitionCertificate> {
    let p = ScalarProblem::new(j, x)?;
    if p.jx_norm2() == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let xjx = p.xjx();
    Ok(PartitionCertificate {
        xjx,
        log_partition_proxy: beta_hat * xjx,
        certificate: p.certificate(m),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::InteractionMatrix;
    use crate::sampler::seeded_rng;
    use rand::Rng;

    fn curie_weiss(n: usize) -> InteractionMatrix {
        let mut e = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                e.push((i, j, 1.0 / (n - 1) as f64));
            }
        }
        InteractionMatrix::from_upper_entries(n, &e).unwrap()
    }

    fn random_x(n: usize, rng: &mut impl Rng) -> SpinConfiguration {
        SpinConfiguration::new((0..n).map(|_| if rng.gen() { 1 } else { -1 }).collect()).unwrap()
    }

    #[test]
    fn values_at_zero() {
        let mut rng = seeded_rng(1);
        let j = curie_weiss(9);
        let x = random_x(9, &mut rng);
        let p = ScalarProblem::new(&j, &x).unwrap();
        assert_eq!(p.phi(0.0), 9.0 * std::f64::consts::LN_2);
        assert!((p.phi_prime(0.0) + p.xjx()).abs() < 1e-12);
    }

    #[test]
    fn finite_differences_and_floor() {
        let mut rng = seeded_rng(2);
        let j = curie_weiss(15);
        for _ in 0..20 {
            let x = random_x(15, &mut rng);
            let p = ScalarProblem::new(&j, &x).unwrap();
            let b: f64 = rng.gen_range(-1.5..1.5);
            let h = 1e-5;
            let fd = (p.phi(b + h) - p.phi(b - h)) / (2.0 * h);
            let d = p.phi_prime(b);
            assert!((fd - d).abs() <= 1e-7 * d.abs().max(1e-2), "{fd} {d}");
            let dd = p.phi_double_prime(b);
            assert!(dd >= 0.0);
            let t = (b.abs() * p.jx_inf()).tanh();
            assert!(dd >= (1.0 - t * t) * p.jx_norm2() - 1e-12);
        }
    }

    #[test]
    fn fit_matches_grid_minimizer() {
        let j = curie_weiss(12);
        let x = SpinConfiguration::new(vec![1, 1, 1, 1, 1, 1, 1, 1, -1, 1, -1, 1]).unwrap();
        let fit = fit_scalar(&j, &x, 2.0, 1e-12).unwrap();
        let p = ScalarProblem::new(&j, &x).unwrap();
        let grid = (0..=40_000).map(|i| -2.0 + i as f64 * 1e-4);
        let coarse = grid.min_by(|a, b| p.phi(*a).total_cmp(&p.phi(*b))).unwrap();
        let fine = (0..=2000)
            .map(|i| coarse - 1e-4 + i as f64 * 1e-7)
            .min_by(|a, b| p.phi(*a).total_cmp(&p.phi(*b)))
            .unwrap();
        assert!((fit.beta_hat - fine).abs() < 1e-6, "{} {}", fit.beta_hat, fine);
        assert!(!fit.boundary && !fit.degenerate);
    }

    #[test]
    fn boundary_and_degenerate_cases() {
        let j = curie_weiss(6);
        let plus = SpinConfiguration::all_plus(6);
        let fit = fit_scalar(&j, &plus, 0.5, 1e-10).unwrap();
        assert!(fit.boundary);
        assert_eq!(fit.beta_hat, 0.5);

        let zero = InteractionMatrix::zeros(6);
        let fit = fit_scalar(&zero, &plus, 1.0, 1e-10).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.beta_hat, 0.0);
        assert!(fit.certificate.is_infinite());
        assert_eq!(partition_certificate(&zero, &plus, 0.3, 1.0), Err(Error::ZeroDenominator));
    }

    #[test]
    fn stationary_at_zero_when_quadratic_form_vanishes() {
        // single edge with opposite spins and a separate aligned edge cancel
        let j = InteractionMatrix::from_upper_entries(4, &[(0, 1, 0.5), (2, 3, 0.5)]).unwrap();
        let x = SpinConfiguration::new(vec![1, -1, 1, 1]).unwrap();
        let p = ScalarProblem::new(&j, &x).unwrap();
        assert_eq!(p.xjx(), 0.0);
        assert_eq!(p.phi_prime(0.0), 0.0);
        let fit = fit_scalar(&j, &x, 1.0, 1e-12).unwrap();
        assert!(fit.beta_hat.abs() < 1e-12);
    }

    #[test]
    fn rescaling_invariance() {
        let mut rng = seeded_rng(4);
        let j = curie_weiss(10);
        let x = SpinConfiguration::new(vec![1, 1, 1, -1, 1, 1, 1, 1, -1, 1]).unwrap();
        let base = fit_scalar(&j, &x, 3.0, 0.0).unwrap();
        for _ in 0..5 {
            let s: f64 = rng.gen_range(0.2..5.0);
            let scaled = fit_scalar(&j.scaled(1.0 / s), &x, 3.0 * s, 0.0).unwrap();
            assert!((scaled.beta_hat - s * base.beta_hat).abs() < 1e-8);
        }
    }

    #[test]
    fn certificate_covers_truth_in_range() {
        let mut rng = seeded_rng(5);
        let j = curie_weiss(10);
        for _ in 0..50 {
            let x = random_x(10, &mut rng);
            let Ok(fit) = fit_scalar(&j, &x, 1.0, 1e-12) else { continue };
            if fit.degenerate {
                continue;
            }
            for b in [-1.0, -0.3, 0.0, 0.4, 1.0] {
                assert!((fit.beta_hat - b).abs() <= fit.certificate + 1e-9);
            }
        }
    }
}
