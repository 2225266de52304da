//! Thinned count autoregressions: simulation, moment-based estimation,
//! quantification of the bias from ignored under-reporting, and Bayesian
//! reconstruction of true epidemic curves from reported case counts.
//!
//! The data-generating model is a Poisson autoregression observed through
//! binomial thinning: latent counts evolve as `X_t | X_{t-1} ~ Pois(nu + phi X_{t-1})`
//! and only `Y_t | X_t ~ Bin(X_t, pi)` is reported. This crate provides
//!
//! * forward simulation of the canonical and covariate-driven models ([`simulate`]),
//! * moment maps between latent and reported series plus Yule–Walker style
//!   estimation ([`moments`]),
//! * closed-form probability limits of naive Poisson-AR fits applied to
//!   under-reported data, with derivative and bound checks ([`consequences`]),
//! * a declarative model layer with a normal–normal approximate posterior and
//!   the exact joint density ([`models`]),
//! * adaptive random-walk Metropolis, Hamiltonian Monte Carlo and integer
//!   latent-count samplers with convergence diagnostics ([`mcmc`]),
//! * the latent Gaussian transform mapping approximate-posterior draws back to
//!   integer epidemic curves, prevalence rollups and survey smoothing
//!   ([`reconstruct`]).
//!
//! The `examples/` directory contains one runnable example per capability; the
//! thin `thinar` binary exposes the same pipelines as subcommands.

pub mod cli;
pub mod consequences;
pub mod data;
pub mod error;
pub mod mcmc;
pub mod models;
pub mod moments;
pub mod numerics;
pub mod reconstruct;
pub mod rng;
pub mod simulate;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
