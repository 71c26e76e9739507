//! Negative log pseudo-likelihood, its directional derivatives, and the
//! penalized subgradient-descent estimator.
//!
//! For a configuration `x` and symmetric zero-diagonal `J`,
//!
//! ```text
//! phi(J) = sum_i [ log cosh(J_i x) - x_i J_i x + log 2 ]
//! ```
//!
//! is `-log` of the product of per-site conditionals `Pr_J[x_i | x_{-i}]`
//! (zero external field). Over an orthonormal basis `A_1..A_k` we write
//! `psi(beta) = phi(A_beta)` and minimize
//! `h(beta) = psi(beta) + lambda * max(0, ||A_beta||_inf - M)`.

use serde::{Deserialize, Serialize};

use crate::basis::{combine, BetaVector, MatrixBasis};
use crate::error::{Error, Result};
use crate::matrix::{dot, InteractionMatrix, SquareMatrix};
use crate::model::SpinConfiguration;

const LN_2: f64 = std::f64::consts::LN_2;

pub const DEFAULT_MAX_ITERS: usize = 2_000_000;

/// `log cosh(y)` without overflow.
#[inline]
pub fn log_cosh(y: f64) -> f64 {
    let a = y.abs();
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

#[inline]
fn sech2(y: f64) -> f64 {
    let t = y.tanh();
    1.0 - t * t
}

fn check_dim(n: usize, got: usize) -> Result<()> {
    if n != got {
        return Err(Error::DimensionMismatch { expected: n, got });
    }
    Ok(())
}

fn phi_from_fields(jx: &[f64], x: &[f64]) -> f64 {
    jx.iter()
        .zip(x)
        .map(|(&f, &s)| log_cosh(f) - s * f + LN_2)
        .sum()
}

/// `phi(J)` for the sample `x`.
pub fn neg_log_pl(j: &SquareMatrix, x: &SpinConfiguration) -> Result<f64> {
    check_dim(j.dim(), x.len())?;
    let xf = x.as_f64();
    Ok(phi_from_fields(&j.mul_vec(&xf), &xf))
}

/// `d phi(J + tA) / dt` at `t = 0`: `sum_i (A_i x)(tanh(J_i x) - x_i)`.
pub fn directional_derivative(j: &SquareMatrix, a: &SquareMatrix, x: &SpinConfiguration) -> Result<f64> {
    check_dim(j.dim(), x.len())?;
    check_dim(j.dim(), a.dim())?;
    let xf = x.as_f64();
    let jx = j.mul_vec(&xf);
    let ax = a.mul_vec(&xf);
    Ok(ax
        .iter()
        .zip(&jx)
        .zip(&xf)
        .map(|((&g, &f), &s)| g * (f.tanh() - s))
        .sum())
}

/// `d^2 phi(J + tA) / dt^2` at `t = 0`: `sum_i (A_i x)^2 sech^2(J_i x)`.
pub fn directional_second_derivative(
    j: &SquareMatrix,
    a: &SquareMatrix,
    x: &SpinConfiguration,
) -> Result<f64> {
    check_dim(j.dim(), x.len())?;
    check_dim(j.dim(), a.dim())?;
    let xf = x.as_f64();
    let jx = j.mul_vec(&xf);
    let ax = a.mul_vec(&xf);
    Ok(ax.iter().zip(&jx).map(|(&g, &f)| g * g * sech2(f)).sum())
}

/// `psi(beta) = phi(A_beta)`.
pub fn psi(basis: &MatrixBasis, beta: &BetaVector, x: &SpinConfiguration) -> Result<f64> {
    neg_log_pl(combine(basis, beta)?.matrix(), x)
}

/// Penalized objective `h(beta)`.
pub fn objective(
    basis: &MatrixBasis,
    beta: &BetaVector,
    x: &SpinConfiguration,
    m: f64,
    lambda: f64,
) -> Result<f64> {
    let j = combine(basis, beta)?;
    let excess = (j.infinity_norm() - m).max(0.0);
    Ok(neg_log_pl(&j, x)? + lambda * excess)
}

/// `d psi / d beta_i`, computed one basis direction at a time.
pub fn grad_beta(basis: &MatrixBasis, beta: &BetaVector, x: &SpinConfiguration) -> Result<Vec<f64>> {
    check_dim(basis.dim(), x.len())?;
    let j = combine(basis, beta)?;
    basis
        .ortho()
        .iter()
        .map(|a| directional_derivative(&j, a, x))
        .collect()
}

/// Row with the largest absolute sum; ties go to the lowest index.
fn argmax_row(j: &SquareMatrix) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for r in 0..j.dim() {
        let s: f64 = j.row(r).iter().map(|v| v.abs()).sum();
        if s > best.1 {
            best = (r, s);
        }
    }
    best
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// A subgradient of `h` at `beta`.
///
/// When `||A_beta||_inf > M`, adds `lambda * sum_v sgn((A_beta)_{rv}) (A_i)_{rv}`
/// for the maximal row `r` (lowest index on ties, `sgn(0) = 0`).
pub fn regularized_subgradient(
    basis: &MatrixBasis,
    beta: &BetaVector,
    x: &SpinConfiguration,
    m: f64,
    lambda: f64,
) -> Result<Vec<f64>> {
    let mut g = grad_beta(basis, beta, x)?;
    let j = combine(basis, beta)?;
    let (r, norm) = argmax_row(&j);
    if norm > m && lambda > 0.0 {
        let row = j.row(r);
        for (gi, a) in g.iter_mut().zip(basis.ortho()) {
            let s: f64 = row.iter().zip(a.row(r)).map(|(&u, &c)| sign(u) * c).sum();
            *gi += lambda * s;
        }
    }
    Ok(g)
}

/// Settings for [`fit`]. `None` fields take their formula defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpleConfig {
    /// Bound `M` on `||J||_inf`.
    pub m: f64,
    /// Target optimization accuracy.
    pub epsilon: f64,
    /// Penalty weight; defaults to `5n`.
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Iteration count; defaults to `ceil(M^2 n^4 k / epsilon^2)` capped at `max_iters`.
    #[serde(default)]
    pub iterations: Option<usize>,
    /// Step size; defaults to `M / (n sqrt(k) sqrt(T))` with `T` the iterations run.
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Stop once `||g|| <= grad_tol` and `||A_beta||_inf <= M`. Zero disables.
    #[serde(default)]
    pub grad_tol: f64,
    /// Number of evenly spaced objective evaluations kept in the trace.
    #[serde(default = "default_trace_points")]
    pub trace_points: usize,
}

fn default_max_iters() -> usize {
    DEFAULT_MAX_ITERS
}

fn default_trace_points() -> usize {
    200
}

impl MpleConfig {
    pub fn new(m: f64, epsilon: f64) -> Self {
        MpleConfig {
            m,
            epsilon,
            lambda: None,
            iterations: None,
            eta: None,
            max_iters: DEFAULT_MAX_ITERS,
            grad_tol: 0.0,
            trace_points: default_trace_points(),
        }
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_grad_tol(mut self, grad_tol: f64) -> Self {
        self.grad_tol = grad_tol;
        self
    }

    /// Fills in the defaults for an `n`-dimensional problem with `k` basis
    /// directions.
    pub fn schedule(&self, n: usize, k: usize) -> Result<Schedule> {
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(Error::InvalidConfig(format!("M must be positive, got {}", self.m)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        let lambda = self.lambda.unwrap_or(5.0 * n as f64);
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda must be >= 0, got {lambda}")));
        }
        if self.max_iters < 1 {
            return Err(Error::InvalidConfig("max_iters must be >= 1".into()));
        }
        let (nf, kf) = (n as f64, k as f64);
        let formula = (self.m * self.m * nf.powi(4) * kf / (self.epsilon * self.epsilon)).ceil();
        let iterations = match self.iterations {
            Some(0) => return Err(Error::InvalidConfig("iterations must be >= 1".into())),
            Some(t) => t.min(self.max_iters),
            None => (formula.max(1.0) as f64).min(self.max_iters as f64) as usize,
        };
        let eta = self
            .eta
            .unwrap_or(self.m / (nf * kf.sqrt() * (iterations as f64).sqrt()));
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidConfig(format!("eta must be positive, got {eta}")));
        }
        Ok(Schedule {
            m: self.m,
            epsilon: self.epsilon,
            lambda,
            eta,
            iterations,
            formula_iterations: formula,
            capped: formula > iterations as f64,
            grad_tol: self.grad_tol,
        })
    }
}

/// The resolved optimization schedule, echoed in every result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub m: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub eta: f64,
    pub iterations: usize,
    pub formula_iterations: f64,
    pub capped: bool,
    pub grad_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    /// Averaged iterate.
    pub beta_hat: BetaVector,
    /// Lowest-objective iterate among the trace checkpoints.
    pub beta_best: BetaVector,
    pub j_hat: InteractionMatrix,
    pub objective_trace: Vec<TracePoint>,
    /// `psi(beta_hat)`.
    pub psi_hat: f64,
    /// `h(beta_hat)`.
    pub objective_hat: f64,
    /// `||J_hat||_inf`.
    pub inf_norm_hat: f64,
    pub iterations: usize,
    pub stopped_early: bool,
    /// `||J_hat||_inf <= 3M`.
    pub within_3m: bool,
    /// `2M < ||J_hat||_inf`.
    pub exceeds_2m: bool,
    pub schedule: Schedule,
}

/// Precomputed state for evaluating `h` and its subgradient in `O(kn + k nnz)`.
///
/// `A_beta x = sum_i beta_i (A_i x)`, so the smooth part only needs the `k`
/// vectors `A_i x`. Row sums of `|A_beta|` run over the union support of the
/// basis, whose entries store all `k` coefficients contiguously.
pub(crate) struct Engine {
    n: usize,
    k: usize,
    x: Vec<f64>,
    ax: Vec<f64>,
    row_offsets: Vec<usize>,
    coefs: Vec<f64>,
    u: Vec<f64>,
    resid: Vec<f64>,
}

pub(crate) struct Eval {
    pub inf_norm: f64,
}

impl Engine {
    pub fn new(basis: &MatrixBasis, x: &SpinConfiguration) -> Result<Self> {
        let n = basis.dim();
        check_dim(n, x.len())?;
        let k = basis.rank();
        let xf = x.as_f64();
        let mut ax = Vec::with_capacity(k * n);
        for a in basis.ortho() {
            ax.extend(a.mul_vec(&xf));
        }
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut coefs = Vec::new();
        row_offsets.push(0);
        let mut entries = 0;
        for r in 0..n {
            for v in 0..n {
                if basis.ortho().iter().any(|a| a[(r, v)] != 0.0) {
                    coefs.extend(basis.ortho().iter().map(|a| a[(r, v)]));
                    entries += 1;
                }
            }
            row_offsets.push(entries);
        }
        Ok(Engine {
            n,
            k,
            x: xf,
            ax,
            row_offsets,
            coefs,
            u: vec![0.0; n],
            resid: vec![0.0; n],
        })
    }

    fn fields(&mut self, beta: &[f64]) {
        self.u.iter_mut().for_each(|u| *u = 0.0);
        for (i, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                let col = &self.ax[i * self.n..(i + 1) * self.n];
                self.u.iter_mut().zip(col).for_each(|(u, c)| *u += b * c);
            }
        }
    }

    #[inline]
    fn entry(&self, e: usize, beta: &[f64]) -> f64 {
        let c = &self.coefs[e * self.k..(e + 1) * self.k];
        dot(c, beta)
    }

    fn inf_norm_row(&self, beta: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for r in 0..self.n {
            let s: f64 = (self.row_offsets[r]..self.row_offsets[r + 1])
                .map(|e| self.entry(e, beta).abs())
                .sum();
            if s > best.1 {
                best = (r, s);
            }
        }
        if self.n == 0 {
            best.1 = 0.0;
        }
        best
    }

    /// `h(beta)`.
    pub fn objective(&mut self, beta: &[f64], m: f64, lambda: f64) -> f64 {
        self.fields(beta);
        let phi = phi_from_fields(&self.u, &self.x);
        let (_, norm) = self.inf_norm_row(beta);
        phi + lambda * (norm - m).max(0.0)
    }

    /// Writes a subgradient of `h` at `beta` into `grad`.
    pub fn subgradient(&mut self, beta: &[f64], m: f64, lambda: f64, grad: &mut [f64]) -> Eval {
        self.fields(beta);
        for ((r, &u), &s) in self.resid.iter_mut().zip(&self.u).zip(&self.x) {
            *r = u.tanh() - s;
        }
        for (i, g) in grad.iter_mut().enumerate() {
            *g = dot(&self.ax[i * self.n..(i + 1) * self.n], &self.resid);
        }
        let (row, norm) = self.inf_norm_row(beta);
        if norm > m && lambda > 0.0 {
            for e in self.row_offsets[row]..self.row_offsets[row + 1] {
                let s = sign(self.entry(e, beta));
                if s != 0.0 {
                    let c = &self.coefs[e * self.k..(e + 1) * self.k];
                    grad.iter_mut().zip(c).for_each(|(g, &ci)| *g += lambda * s * ci);
                }
            }
        }
        Eval { inf_norm: norm }
    }
}

/// Averaged subgradient descent on `h` from `beta = 0` with a fixed step.
///
/// Runs `T` steps `beta <- beta - eta g(beta)` and returns the average of the
/// `T` points at which subgradients were taken, together with a certificate
/// recomputed on the dense representation.
pub fn fit(basis: &MatrixBasis, x: &SpinConfiguration, cfg: &MpleConfig) -> Result<EstimationResult> {
    let n = basis.dim();
    let k = basis.rank();
    let sched = cfg.schedule(n, k)?;
    let mut engine = Engine::new(basis, x)?;
    let (m, lambda, eta) = (sched.m, sched.lambda, sched.eta);
    let total = sched.iterations;
    let trace_every = (total / cfg.trace_points.max(1)).max(1);

    let mut beta = vec![0.0; k];
    let mut sum = vec![0.0; k];
    let mut grad = vec![0.0; k];
    let mut trace = Vec::new();
    let mut best = (f64::INFINITY, beta.clone());
    let mut steps = 0;
    let mut stopped_early = false;

    for t in 0..total {
        if t % trace_every == 0 {
            let h = engine.objective(&beta, m, lambda);
            if !h.is_finite() {
                return Err(Error::NonFinite { iteration: t });
            }
            trace.push(TracePoint {
                iteration: t,
                objective: h,
            });
            if h < best.0 {
                best = (h, beta.clone());
            }
        }
        let eval = engine.subgradient(&beta, m, lambda, &mut grad);
        sum.iter_mut().zip(&beta).for_each(|(s, b)| *s += b);
        steps += 1;
        if cfg.grad_tol > 0.0 && eval.inf_norm <= m {
            let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if gnorm <= cfg.grad_tol {
                stopped_early = true;
                break;
            }
        }
        for (b, g) in beta.iter_mut().zip(&grad) {
            *b -= eta * g;
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite { iteration: t + 1 });
        }
    }

    let beta_hat = BetaVector(sum.iter().map(|s| s / steps as f64).collect());
    let j_hat = combine(basis, &beta_hat)?;
    let psi_hat = neg_log_pl(&j_hat, x)?;
    let inf_norm_hat = j_hat.infinity_norm();
    let objective_hat = psi_hat + lambda * (inf_norm_hat - m).max(0.0);
    if !objective_hat.is_finite() {
        return Err(Error::NonFinite { iteration: steps });
    }
    trace.push(TracePoint {
        iteration: steps,
        objective: engine.objective(&beta, m, lambda),
    });
    Ok(EstimationResult {
        beta_hat,
        beta_best: BetaVector(best.1),
        j_hat,
        objective_trace: trace,
        psi_hat,
        objective_hat,
        inf_norm_hat,
        iterations: steps,
        stopped_early,
        within_3m: inf_norm_hat <= 3.0 * m,
        exceeds_2m: inf_norm_hat > 2.0 * m,
        schedule: sched,
    })
}
