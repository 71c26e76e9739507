//! Estimation of Ising interaction matrices from a single sample.
//!
//! The model is `Pr[x] ∝ exp(x'Jx/2 + h'x)` over `x ∈ {±1}^n`, with `J`
//! assumed to lie in a known subspace `span(J_1, .., J_k)`. The estimator
//! minimizes the negative log pseudo-likelihood over that subspace with a
//! penalty on `||J||_inf`, using averaged subgradient descent.
//!
//! Modules:
//! - [`matrix`], [`model`]: core types, norms, local fields, conditioning.
//! - [`sampler`]: exact enumeration for small `n` and Glauber dynamics.
//! - [`basis`]: trace-orthonormal bases and recovery diagnostics.
//! - [`mple`]: the objective, its derivatives, and [`mple::fit`].
//! - [`conditioning`]: subset covers whose conditional models are
//!   high-temperature.
//! - [`one_param`]: the scalar estimator and its error certificate.
//! - [`metrics`]: exact TV / chi-square / variance oracles.
//! - [`experiment`]: instance generators and the sweep runner.
//! - [`io`]: JSON file formats.

pub mod basis;
pub mod conditioning;
pub mod error;
pub mod experiment;
pub mod io;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod mple;
pub mod one_param;
pub mod sampler;

pub use basis::{BetaVector, MatrixBasis};
pub use error::{Error, Result};
pub use matrix::{InteractionMatrix, SquareMatrix};
pub use model::{ExternalField, IsingSpec, SpinConfiguration};
