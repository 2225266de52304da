//! Samplers and convergence diagnostics: adaptive random-walk Metropolis,
//! Hamiltonian Monte Carlo with dual-averaged step size, the integer
//! latent-count sweep for the exact model, split R-hat and bulk ESS.

mod diagnostics;
mod hmc;
mod latent;
mod run;
mod rwm;
mod store;

pub use diagnostics::{ess_bulk, split_rhat, summarize, ParamSummary, ESS_SENTINEL};
pub use latent::{run_exact_mcmc, update_latent_counts, latent_proposal_width};
pub use run::run_chains;
#[doc(hidden)]
pub use run::debug_single_chain;
pub use store::DrawStore;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Which sampler [`run_chains`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Rwm,
    #[default]
    Hmc,
}

/// Chain shape and tuning.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChainConfig {
    pub n_chains: usize,
    /// Total iterations per chain, warmup included.
    pub n_iter: usize,
    pub n_warmup: usize,
    pub thin: usize,
    pub seed: u64,
    pub sampler: SamplerKind,
    /// Defaults: 0.44 for componentwise RWM, 0.8 for HMC.
    pub target_accept: Option<f64>,
    /// Base leapfrog trajectory length (jittered +-20% per iteration).
    pub leapfrog_steps: usize,
}

impl ChainConfig {
    pub fn new(n_chains: usize, n_iter: usize, n_warmup: usize, seed: u64) -> Self {
        ChainConfig {
            n_chains,
            n_iter,
            n_warmup,
            thin: 1,
            seed,
            sampler: SamplerKind::Hmc,
            target_accept: None,
            leapfrog_steps: 32,
        }
    }

    pub fn with_sampler(mut self, sampler: SamplerKind) -> Self {
        self.sampler = sampler;
        self
    }

    pub fn with_thin(mut self, thin: usize) -> Self {
        self.thin = thin;
        self
    }

    pub fn target_accept(&self) -> f64 {
        self.target_accept.unwrap_or(match self.sampler {
            SamplerKind::Rwm => 0.44,
            SamplerKind::Hmc => 0.8,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 {
            return Err(Error::Validation("need at least one chain".into()));
        }
        if self.n_warmup >= self.n_iter {
            return Err(Error::Validation(format!(
                "n_warmup = {} must be below n_iter = {}",
                self.n_warmup, self.n_iter
            )));
        }
        if self.thin == 0 {
            return Err(Error::Validation("thin must be >= 1".into()));
        }
        let ta = self.target_accept();
        if !(ta > 0.0 && ta < 1.0) {
            return Err(Error::Validation(format!("target_accept = {ta} outside (0, 1)")));
        }
        if self.leapfrog_steps == 0 {
            return Err(Error::Validation("leapfrog_steps must be >= 1".into()));
        }
        Ok(())
    }
}

/// A log-density the samplers can draw from.
///
/// `logp` must return `-inf` (never panic) outside the support; when a
/// gradient buffer is supplied and the point is in-support, it must be filled
/// with the analytic gradient.
pub trait Target: Sync {
    fn dim(&self) -> usize;
    fn logp(&self, u: &[f64], grad: Option<&mut [f64]>) -> f64;
    fn has_gradient(&self) -> bool {
        true
    }
    /// Map a draw to constrained space for storage.
    fn constrain(&self, u: &[f64]) -> Vec<f64> {
        u.to_vec()
    }
    fn constrained_names(&self) -> Vec<String> {
        (0..self.dim()).map(|i| format!("p{i}")).collect()
    }
    /// Deterministic starting point; chains jitter around it.
    fn initial_point(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }
    /// Coordinates the HMC mass matrix should treat as one dense covariance
    /// block (typically the structural parameters, whose posterior is
    /// correlated); everything else stays diagonal.
    fn dense_mass_indices(&self) -> Vec<usize> {
        Vec::new()
    }
}

impl Target for crate::models::ApproxModel {
    fn dim(&self) -> usize {
        ApproxModel::dim(self)
    }

    fn logp(&self, u: &[f64], grad: Option<&mut [f64]>) -> f64 {
        self.log_posterior(u, grad)
    }

    fn constrain(&self, u: &[f64]) -> Vec<f64> {
        self.transform_params(u).map(|(v, _)| v).unwrap_or_else(|_| vec![f64::NAN; 0])
    }

    fn constrained_names(&self) -> Vec<String> {
        ApproxModel::constrained_names(self).to_vec()
    }

    fn initial_point(&self) -> Vec<f64> {
        ApproxModel::initial_point(self)
    }

    fn dense_mass_indices(&self) -> Vec<usize> {
        self.structural_indices()
    }
}

use crate::models::ApproxModel;
