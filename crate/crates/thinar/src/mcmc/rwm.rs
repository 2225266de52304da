//! Componentwise random-walk Metropolis with Robbins–Monro scale adaptation.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Target;

pub(super) struct RwmChain {
    pub u: Vec<f64>,
    pub logp: f64,
    scales: Vec<f64>,
    target_accept: f64,
    adapt_count: usize,
    frozen: bool,
}

impl RwmChain {
    pub fn new(u: Vec<f64>, logp: f64, target_accept: f64) -> Self {
        let dim = u.len();
        RwmChain {
            u,
            logp,
            scales: vec![0.5; dim],
            target_accept,
            adapt_count: 0,
            frozen: false,
        }
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    /// Recompute the cached log-density at the current position.
    pub fn refresh<T: Target + ?Sized>(&mut self, target: &T) {
        self.logp = target.logp(&self.u, None);
    }

    /// One full sweep over the coordinates; returns the acceptance fraction.
    pub fn sweep<T: Target + ?Sized>(&mut self, target: &T, rng: &mut ChaCha8Rng) -> f64 {
        let dim = self.u.len();
        let mut accepted = 0usize;
        if !self.frozen {
            self.adapt_count += 1;
        }
        let gamma = 1.0 / (self.adapt_count.max(1) as f64).powf(0.6);
        for i in 0..dim {
            let old = self.u[i];
            let step: f64 = StandardNormal.sample(rng);
            self.u[i] = old + self.scales[i] * step;
            let cand_logp = target.logp(&self.u, None);
            let accept = cand_logp - self.logp >= 0.0
                || rng.random::<f64>().ln() < cand_logp - self.logp;
            if accept && cand_logp.is_finite() {
                self.logp = cand_logp;
                accepted += 1;
            } else {
                self.u[i] = old;
            }
            if !self.frozen {
                let a = if accept { 1.0 } else { 0.0 };
                self.scales[i] = (self.scales[i].ln() + gamma * (a - self.target_accept))
                    .exp()
                    .clamp(1e-8, 1e4);
            }
        }
        accepted as f64 / dim as f64
    }
}
