//! Hamiltonian Monte Carlo with dual-averaged step size and a warmup-adapted
//! mass matrix: diagonal over latent-field coordinates, dense over the
//! (usually strongly correlated) structural block the target nominates.
//! Trajectories are a fixed leapfrog length with +-20% jitter.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Target;

/// Kinetic-energy metric: per-coordinate variances plus an optional dense
/// covariance block (`idx` are the block's coordinate indices, `chol` the
/// lower Cholesky factor of its covariance).
struct MassMatrix {
    diag_inv: Vec<f64>,
    dense_idx: Vec<usize>,
    dense_mask: Vec<bool>,
    chol: Vec<f64>,
}

impl MassMatrix {
    fn unit(dim: usize, dense_idx: Vec<usize>) -> Self {
        let k = dense_idx.len();
        let mut chol = vec![0.0; k * k];
        for i in 0..k {
            chol[i * k + i] = 1.0;
        }
        let mut dense_mask = vec![false; dim];
        for &i in &dense_idx {
            dense_mask[i] = true;
        }
        MassMatrix { diag_inv: vec![1.0; dim], dense_idx, dense_mask, chol }
    }

    /// Draw `p ~ N(0, M)` with `M` the inverse of this covariance structure.
    fn sample_momentum(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut p: Vec<f64> = self
            .diag_inv
            .iter()
            .map(|&v| {
                let z: f64 = StandardNormal.sample(rng);
                z / v.sqrt()
            })
            .collect();
        let k = self.dense_idx.len();
        if k > 0 {
            // p_block = L^{-T} z: solve L^T p = z by back substitution
            let z: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
            let mut pb = vec![0.0; k];
            for i in (0..k).rev() {
                let mut s = z[i];
                for j in i + 1..k {
                    s -= self.chol[j * k + i] * pb[j];
                }
                pb[i] = s / self.chol[i * k + i];
            }
            for (b, &coord) in self.dense_idx.iter().enumerate() {
                p[coord] = pb[b];
            }
        }
        p
    }

    /// `p^T M^{-1} p / 2` where `M^{-1}` is the estimated covariance.
    fn kinetic(&self, p: &[f64]) -> f64 {
        let mut ke = 0.0;
        let k = self.dense_idx.len();
        if k > 0 {
            // 1/2 |L^T p_block|^2
            for j in 0..k {
                let mut s = 0.0;
                for i in j..k {
                    s += self.chol[i * k + j] * p[self.dense_idx[i]];
                }
                ke += 0.5 * s * s;
            }
        }
        for (i, (&pi, &vi)) in p.iter().zip(&self.diag_inv).enumerate() {
            if !self.dense_mask[i] {
                ke += 0.5 * pi * pi * vi;
            }
        }
        ke
    }

    /// `M^{-1} p` (the position-update velocity).
    fn velocity(&self, p: &[f64], out: &mut [f64]) {
        for i in 0..p.len() {
            out[i] = self.diag_inv[i] * p[i];
        }
        let k = self.dense_idx.len();
        if k > 0 {
            // Sigma p = L (L^T p_block)
            let mut tmp = vec![0.0; k];
            for j in 0..k {
                let mut s = 0.0;
                for i in j..k {
                    s += self.chol[i * k + j] * p[self.dense_idx[i]];
                }
                tmp[j] = s;
            }
            for i in 0..k {
                let mut s = 0.0;
                for j in 0..=i {
                    s += self.chol[i * k + j] * tmp[j];
                }
                out[self.dense_idx[i]] = s;
            }
        }
    }
}

/// In-place lower Cholesky of a row-major `k x k` matrix; false when not
/// positive definite.
fn cholesky_in_place(a: &mut [f64], k: usize) -> bool {
    for i in 0..k {
        for j in 0..=i {
            let mut s = a[i * k + j];
            for m in 0..j {
                s -= a[i * k + m] * a[j * k + m];
            }
            if i == j {
                if s <= 0.0 {
                    return false;
                }
                a[i * k + i] = s.sqrt();
            } else {
                a[i * k + j] = s / a[j * k + j];
            }
        }
        for j in i + 1..k {
            a[i * k + j] = 0.0;
        }
    }
    true
}

pub(super) struct HmcChain {
    pub u: Vec<f64>,
    pub logp: f64,
    grad: Vec<f64>,
    mass: MassMatrix,
    base_steps: usize,
    target_accept: f64,
    // dual averaging state
    log_eps: f64,
    log_eps_bar: f64,
    h_bar: f64,
    mu: f64,
    adapt_iter: usize,
    frozen: bool,
    // warmup draw accumulation (means, marginal second moments, dense block
    // cross-products)
    acc_sum: Vec<f64>,
    acc_sumsq: Vec<f64>,
    acc_cross: Vec<f64>,
    acc_n: usize,
}

const DA_GAMMA: f64 = 0.05;
const DA_T0: f64 = 10.0;
const DA_KAPPA: f64 = 0.75;

impl HmcChain {
    pub fn new<T: Target + ?Sized>(
        target: &T,
        u: Vec<f64>,
        base_steps: usize,
        target_accept: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let dim = u.len();
        let mut grad = vec![0.0; dim];
        let logp = target.logp(&u, Some(&mut grad));
        debug_assert!(logp.is_finite());
        let dense_idx = target.dense_mass_indices();
        let k = dense_idx.len();
        let mut chain = HmcChain {
            u,
            logp,
            grad,
            mass: MassMatrix::unit(dim, dense_idx),
            base_steps,
            target_accept,
            log_eps: 0.0,
            log_eps_bar: 0.0,
            h_bar: 0.0,
            mu: 0.0,
            adapt_iter: 0,
            frozen: false,
            acc_sum: vec![0.0; dim],
            acc_sumsq: vec![0.0; dim],
            acc_cross: vec![0.0; k * k],
            acc_n: 0,
        };
        let eps0 = chain.find_reasonable_eps(target, rng);
        chain.reset_dual_averaging(eps0);
        chain
    }

    fn reset_dual_averaging(&mut self, eps0: f64) {
        self.log_eps = eps0.ln();
        self.log_eps_bar = eps0.ln();
        self.mu = (10.0 * eps0).ln();
        self.h_bar = 0.0;
        self.adapt_iter = 0;
    }

    fn eps(&self) -> f64 {
        if self.frozen {
            self.log_eps_bar.exp()
        } else {
            self.log_eps.exp()
        }
    }

    /// Double/halve a trial step until the single-step acceptance probability
    /// crosses 1/2.
    fn find_reasonable_eps<T: Target + ?Sized>(
        &mut self,
        target: &T,
        rng: &mut ChaCha8Rng,
    ) -> f64 {
        let mut eps = 0.1;
        let p = self.mass.sample_momentum(rng);
        let alpha = |eps: f64| -> f64 {
            let mut q = self.u.clone();
            let mut mom = p.clone();
            let mut grad = self.grad.clone();
            let h0 = -self.logp + self.mass.kinetic(&mom);
            let lp = leapfrog(target, &mut q, &mut mom, &mut grad, eps, 1, &self.mass);
            if !lp.is_finite() {
                return 0.0;
            }
            let h1 = -lp + self.mass.kinetic(&mom);
            (-(h1 - h0)).exp().min(1.0)
        };
        let a0 = alpha(eps);
        let going_up = a0 > 0.5;
        for _ in 0..40 {
            eps *= if going_up { 2.0 } else { 0.5 };
            let a = alpha(eps);
            if (going_up && a <= 0.5) || (!going_up && a >= 0.5) {
                break;
            }
            if eps > 1e6 || eps < 1e-10 {
                break;
            }
        }
        eps
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn debug_eps(&self) -> f64 {
        self.eps()
    }

    pub fn debug_diag_min(&self) -> f64 {
        self.mass.diag_inv.iter().cloned().fold(f64::MAX, f64::min)
    }

    pub fn debug_diag_max(&self) -> f64 {
        self.mass.diag_inv.iter().cloned().fold(0.0, f64::max)
    }

    /// Recompute the cached log-density and gradient at the current position
    /// (needed when the target itself moved, e.g. within Gibbs).
    pub fn refresh<T: Target + ?Sized>(&mut self, target: &T) {
        self.logp = target.logp(&self.u, Some(&mut self.grad));
    }

    pub fn record_warmup_draw(&mut self) {
        for (i, &v) in self.u.iter().enumerate() {
            self.acc_sum[i] += v;
            self.acc_sumsq[i] += v * v;
        }
        let k = self.mass.dense_idx.len();
        for a in 0..k {
            let va = self.u[self.mass.dense_idx[a]];
            for b in 0..=a {
                self.acc_cross[a * k + b] += va * self.u[self.mass.dense_idx[b]];
            }
        }
        self.acc_n += 1;
    }

    /// Estimate the mass matrix from the draws recorded in the current window
    /// and restart step-size adaptation around the current value.
    pub fn adopt_mass<T: Target + ?Sized>(&mut self, target: &T, rng: &mut ChaCha8Rng) {
        if self.acc_n < 10 {
            return;
        }
        let n = self.acc_n as f64;
        let shrink = n / (n + 5.0);
        for i in 0..self.mass.diag_inv.len() {
            let mean = self.acc_sum[i] / n;
            let var = (self.acc_sumsq[i] / n - mean * mean).max(0.0);
            self.mass.diag_inv[i] = shrink * var + (1.0 - shrink) * 1e-3;
        }
        let k = self.mass.dense_idx.len();
        if k > 0 {
            let mut cov = vec![0.0; k * k];
            for a in 0..k {
                let ma = self.acc_sum[self.mass.dense_idx[a]] / n;
                for b in 0..=a {
                    let mb = self.acc_sum[self.mass.dense_idx[b]] / n;
                    let mut c = shrink * (self.acc_cross[a * k + b] / n - ma * mb);
                    if a == b {
                        c += (1.0 - shrink) * 1e-3;
                    }
                    cov[a * k + b] = c;
                    cov[b * k + a] = c;
                }
            }
            // jittered Cholesky: inflate the diagonal until positive definite
            let mut jitter = 0.0f64;
            loop {
                let mut trial = cov.clone();
                for i in 0..k {
                    trial[i * k + i] += jitter;
                }
                if cholesky_in_place(&mut trial, k) {
                    self.mass.chol = trial;
                    break;
                }
                jitter = if jitter == 0.0 { 1e-8 } else { jitter * 10.0 };
                if jitter > 1.0 {
                    break;
                }
            }
        }
        self.acc_sum.fill(0.0);
        self.acc_sumsq.fill(0.0);
        self.acc_cross.fill(0.0);
        self.acc_n = 0;
        let eps0 = self.find_reasonable_eps(target, rng);
        self.reset_dual_averaging(eps0);
    }

    /// One HMC transition; returns the acceptance probability of the proposal.
    pub fn step<T: Target + ?Sized>(&mut self, target: &T, rng: &mut ChaCha8Rng) -> f64 {
        let p = self.mass.sample_momentum(rng);
        let h0 = -self.logp + self.mass.kinetic(&p);
        let jitter = 0.8 + 0.4 * rng.random::<f64>();
        let steps = ((self.base_steps as f64 * jitter).round() as usize).max(1);
        let mut q = self.u.clone();
        let mut mom = p;
        let mut grad = self.grad.clone();
        let eps = self.eps();
        let lp = leapfrog(target, &mut q, &mut mom, &mut grad, eps, steps, &self.mass);
        let alpha = if lp.is_finite() {
            let h1 = -lp + self.mass.kinetic(&mom);
            (-(h1 - h0)).exp().min(1.0)
        } else {
            0.0
        };
        if alpha > 0.0 && rng.random::<f64>() < alpha {
            self.u = q;
            self.logp = lp;
            self.grad = grad;
        }
        if !self.frozen {
            self.adapt_iter += 1;
            let m = self.adapt_iter as f64;
            self.h_bar = (1.0 - 1.0 / (m + DA_T0)) * self.h_bar
                + (self.target_accept - alpha) / (m + DA_T0);
            self.log_eps = self.mu - m.sqrt() / DA_GAMMA * self.h_bar;
            let w = m.powf(-DA_KAPPA);
            self.log_eps_bar = w * self.log_eps + (1.0 - w) * self.log_eps_bar;
        }
        alpha
    }
}

/// Expanding variance-estimation windows inside warmup (Stan-style): a
/// step-size-only buffer, doubling covariance windows, then a final
/// step-size-only buffer. Each window end triggers a mass-matrix update and a
/// step-size restart.
pub(super) fn mass_windows(n_warmup: usize) -> Vec<(usize, usize)> {
    if n_warmup < 40 {
        return Vec::new();
    }
    let init = ((n_warmup * 15) / 100).clamp(10, 75);
    let term = (n_warmup / 10).clamp(10, 50);
    let mut base = ((n_warmup - init - term) / 8).max(15);
    let last = n_warmup - term;
    let mut out = Vec::new();
    let mut start = init;
    while start < last {
        let mut end = start + base;
        // absorb a remainder too small for another doubling
        if end + 2 * base > last || end > last {
            end = last;
        }
        out.push((start, end));
        start = end;
        base *= 2;
    }
    out
}

/// Leapfrog integration of `steps` steps; returns the final log-density (or
/// `-inf` on divergence). `q`, `p` and `grad` are updated in place.
fn leapfrog<T: Target + ?Sized>(
    target: &T,
    q: &mut [f64],
    p: &mut [f64],
    grad: &mut Vec<f64>,
    eps: f64,
    steps: usize,
    mass: &MassMatrix,
) -> f64 {
    let mut lp = f64::NEG_INFINITY;
    let mut vel = vec![0.0; q.len()];
    for _ in 0..steps {
        for i in 0..p.len() {
            p[i] += 0.5 * eps * grad[i];
        }
        mass.velocity(p, &mut vel);
        for i in 0..q.len() {
            q[i] += eps * vel[i];
        }
        lp = target.logp(q, Some(grad));
        if !lp.is_finite() {
            return f64::NEG_INFINITY;
        }
        for i in 0..p.len() {
            p[i] += 0.5 * eps * grad[i];
        }
    }
    lp
}
