//! Forward simulation of binomially thinned Poisson autoregressions.
//!
//! The canonical model draws `X_t | X_{t-1} ~ Pois(nu + phi X_{t-1})` and
//! reports `Y_t | X_t ~ Bin(X_t, pi)`. [`simulate_panel`] generalises this to
//! per-(stratum, t) parameter values and a serial-interval simplex; the
//! model-driven wrapper in [`crate::models`] builds such panels from link
//! coefficients and covariates.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};

use crate::rng::stream_rng;
use crate::{Error, Result};

/// Parameters of the canonical thinned Poisson autoregression.
///
/// `nu` is the expected number of exogenous cases per step, `phi` the
/// reproduction-rate factor, `pi` the reporting probability. Stationarity of
/// the moment formulas additionally requires `phi < 1` and is checked where
/// those formulas are used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThinnedArParams {
    pub nu: f64,
    pub phi: f64,
    pub pi: f64,
}

impl ThinnedArParams {
    pub fn new(nu: f64, phi: f64, pi: f64) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::Domain(format!("nu = {nu} must be positive")));
        }
        if !(phi > 0.0) || !phi.is_finite() {
            return Err(Error::Domain(format!("phi = {phi} must be positive")));
        }
        if !(pi > 0.0 && pi <= 1.0) {
            return Err(Error::Domain(format!("pi = {pi} must lie in (0, 1]")));
        }
        Ok(ThinnedArParams { nu, phi, pi })
    }
}

/// One simulated series: true counts `x`, reported counts `y`, and the seed
/// that produced them. `0 <= y_t <= x_t` holds for every `t`.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub x: Vec<u64>,
    pub y: Vec<u64>,
    pub seed: u64,
}

/// Per-(stratum, t) parameter values for general simulation.
///
/// `theta` is the serial-interval simplex over lags `1..=J`; strata evolve
/// independently on disjoint RNG streams.
#[derive(Debug, Clone)]
pub struct ParamPanel {
    pub nu: Vec<Vec<f64>>,
    pub phi: Vec<Vec<f64>>,
    pub pi: Vec<Vec<f64>>,
    pub theta: Vec<f64>,
    /// Lag-buffer start level; the stationary mean implied by the t = 1
    /// parameter values when absent (models without an exogenous term have no
    /// stationary mean and must set this).
    pub init_level: Option<u64>,
}

impl ParamPanel {
    fn validate(&self, t_len: usize) -> Result<()> {
        let strata = self.nu.len();
        if strata == 0 || self.phi.len() != strata || self.pi.len() != strata {
            return Err(Error::Validation("parameter panel strata do not align".into()));
        }
        for i in 0..strata {
            if self.nu[i].len() < t_len || self.phi[i].len() < t_len || self.pi[i].len() < t_len {
                return Err(Error::Validation(format!(
                    "parameter panel shorter than t_len = {t_len} in stratum {i}"
                )));
            }
        }
        validate_simplex(&self.theta)?;
        Ok(())
    }
}

pub(crate) fn validate_simplex(theta: &[f64]) -> Result<()> {
    if theta.is_empty() {
        return Err(Error::Validation("serial-interval weights are empty".into()));
    }
    if theta.iter().any(|&w| w < 0.0 || !w.is_finite()) {
        return Err(Error::Validation("serial-interval weights must be nonnegative".into()));
    }
    let total: f64 = theta.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Validation(format!(
            "serial-interval weights sum to {total}, not 1 (within 1e-12)"
        )));
    }
    Ok(())
}

/// Simulate the canonical model for `t_len` steps after discarding `burn_in`
/// steps, deterministically for a given seed.
///
/// The chain starts at the stationary mean `round(nu / (1 - phi))` when
/// `phi < 1` (at `round(nu)` otherwise, with a warning: the process is then
/// explosive and the moment formulas do not apply).
pub fn simulate_thinned_pois_ar(
    params: ThinnedArParams,
    t_len: usize,
    burn_in: usize,
    seed: u64,
) -> Result<SimOutput> {
    if t_len == 0 {
        return Err(Error::Domain("t_len must be positive".into()));
    }
    if params.phi >= 1.0 {
        log::warn!("phi = {} >= 1: simulating a nonstationary autoregression", params.phi);
    }
    let mut rng = stream_rng(seed, 0);
    let mut out = sim_stream(
        &vec![params.nu; t_len],
        &vec![params.phi; t_len],
        &vec![params.pi; t_len],
        &[1.0],
        None,
        t_len,
        burn_in,
        &mut rng,
    );
    out.seed = seed;
    Ok(out)
}

/// Simulate one independent series per stratum from a parameter panel.
pub fn simulate_panel(
    panel: &ParamPanel,
    t_len: usize,
    burn_in: usize,
    seed: u64,
) -> Result<Vec<SimOutput>> {
    if t_len == 0 {
        return Err(Error::Domain("t_len must be positive".into()));
    }
    panel.validate(t_len)?;
    let mut runs = Vec::with_capacity(panel.nu.len());
    for i in 0..panel.nu.len() {
        let mut rng = stream_rng(seed, i as u64);
        let mut out = sim_stream(
            &panel.nu[i],
            &panel.phi[i],
            &panel.pi[i],
            &panel.theta,
            panel.init_level,
            t_len,
            burn_in,
            &mut rng,
        );
        out.seed = seed;
        runs.push(out);
    }
    Ok(runs)
}

/// Core stepping loop. One Poisson draw per step; one Binomial draw per kept
/// step. The lag buffer is seeded at the stationary mean implied by the t = 1
/// parameter values, and burn-in steps reuse those values.
fn sim_stream(
    nu: &[f64],
    phi: &[f64],
    pi: &[f64],
    theta: &[f64],
    init: Option<u64>,
    t_len: usize,
    burn_in: usize,
    rng: &mut ChaCha8Rng,
) -> SimOutput {
    let j = theta.len();
    let init = init.unwrap_or_else(|| init_level(nu[0], phi[0]));
    let mut lags = vec![init; j]; // lags[0] is X_{t-1}
    let mut x = Vec::with_capacity(t_len);
    let mut y = Vec::with_capacity(t_len);
    for step in 0..(burn_in + t_len) {
        let t = step.saturating_sub(burn_in); // parameter index; 0 during burn-in
        let weighted: f64 = theta.iter().zip(&lags).map(|(w, &l)| w * l as f64).sum();
        let lambda = nu[t] + phi[t] * weighted;
        let xt = sample_poisson(lambda, rng);
        lags.rotate_right(1);
        lags[0] = xt;
        if step >= burn_in {
            let yt = sample_binomial(xt, pi[t], rng);
            x.push(xt);
            y.push(yt);
        }
    }
    SimOutput { x, y, seed: 0 }
}

fn init_level(nu: f64, phi: f64) -> u64 {
    let level = if phi < 1.0 { nu / (1.0 - phi) } else { nu };
    level.round().max(0.0) as u64
}

fn sample_poisson(lambda: f64, rng: &mut ChaCha8Rng) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("positive rate").sample(rng) as u64
}

fn sample_binomial(n: u64, p: f64, rng: &mut ChaCha8Rng) -> u64 {
    if n == 0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    if p <= 0.0 {
        return 0;
    }
    Binomial::new(n, p).expect("p in (0,1)").sample(rng)
}
