//! Moment maps between the latent and reported series, Yule–Walker style
//! parameter estimation, and the quantile study of those estimators.
//!
//! For a stationary thinned autoregression the reported-series moments are
//! `mu~ = pi mu`, `sigma~^2 = pi^2 sigma^2 + pi (1 - pi) mu` and
//! `rho~(1) = (1 - (1 - pi) mu~ / sigma~^2) phi`; inverting that map at the
//! sample moments gives consistent estimators of `(phi, pi, nu)`.

use rayon::prelude::*;

use crate::rng::derive_seed;
use crate::simulate::{simulate_thinned_pois_ar, ThinnedArParams};
use crate::{Error, Result};

/// Mean, variance and lag-1 autocorrelation of a series.
///
/// Sample versions use the `1/T` convention for both the variance and the
/// lag-1 autocovariance so their ratio is a proper correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesMoments {
    pub mean: f64,
    pub variance: f64,
    pub acf1: f64,
}

/// Sample moments of an integer series (length >= 3, non-constant).
pub fn sample_moments(y: &[u64]) -> Result<SeriesMoments> {
    if y.len() < 3 {
        return Err(Error::Validation(format!(
            "series of length {} is too short for moment estimation (need >= 3)",
            y.len()
        )));
    }
    let t = y.len() as f64;
    let mean = y.iter().map(|&v| v as f64).sum::<f64>() / t;
    let mut var = 0.0;
    let mut acv1 = 0.0;
    for i in 0..y.len() {
        let d = y[i] as f64 - mean;
        var += d * d;
        if i + 1 < y.len() {
            acv1 += d * (y[i + 1] as f64 - mean);
        }
    }
    var /= t;
    acv1 /= t;
    if var == 0.0 {
        return Err(Error::Degenerate(
            "constant series: lag-1 autocorrelation is undefined".into(),
        ));
    }
    Ok(SeriesMoments { mean, variance: var, acf1: acv1 / var })
}

/// Stationary mean, variance and lag-1 autocorrelation of the latent Poisson
/// autoregression: `mu = nu / (1 - phi)`, `sigma^2 = mu / (1 - phi^2)`,
/// `rho(1) = phi`. Requires `0 < phi < 1`.
pub fn stationary_latent_moments(nu: f64, phi: f64) -> Result<SeriesMoments> {
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("nu = {nu} must be positive")));
    }
    if !(phi > 0.0 && phi < 1.0) {
        return Err(Error::Nonstationary(format!(
            "stationary moments need phi in (0, 1); got {phi}"
        )));
    }
    let mean = nu / (1.0 - phi);
    let variance = mean / (1.0 - phi * phi);
    Ok(SeriesMoments { mean, variance, acf1: phi })
}

/// Map latent moments to the moments of the binomially thinned series.
pub fn observed_moments_from_latent(
    latent: &SeriesMoments,
    phi: f64,
    pi: f64,
) -> Result<SeriesMoments> {
    if !(pi > 0.0 && pi <= 1.0) {
        return Err(Error::Domain(format!("pi = {pi} must lie in (0, 1]")));
    }
    let mean = pi * latent.mean;
    let variance = pi * pi * latent.variance + pi * (1.0 - pi) * latent.mean;
    if variance == 0.0 {
        return Err(Error::Degenerate("observed variance is zero".into()));
    }
    let acf1 = (1.0 - (1.0 - pi) * mean / variance) * phi;
    Ok(SeriesMoments { mean, variance, acf1 })
}

/// Flags marking method-of-moments estimates outside their parameter spaces.
/// Out-of-space values are reported as-is, never clipped.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MomFlags {
    pub phi_out_of_space: bool,
    pub pi_out_of_space: bool,
    pub nu_out_of_space: bool,
}

impl MomFlags {
    pub fn any(&self) -> bool {
        self.phi_out_of_space || self.pi_out_of_space || self.nu_out_of_space
    }
}

/// Raw method-of-moments estimates plus out-of-space flags.
#[derive(Debug, Clone, Copy)]
pub struct MomEstimate {
    pub phi_hat: f64,
    pub pi_hat: f64,
    pub nu_hat: f64,
    pub flags: MomFlags,
}

/// Invert the moment map at given (typically sample) moments, solving for
/// `phi`, then `pi`, then `nu`.
pub fn mom_estimate_from_moments(m: &SeriesMoments) -> Result<MomEstimate> {
    if m.acf1 == 0.0 {
        return Err(Error::Estimation(
            "lag-1 autocorrelation is zero: moment equations are singular".into(),
        ));
    }
    if m.mean == 0.0 || m.variance == 0.0 {
        return Err(Error::Degenerate("zero mean or variance in moment inversion".into()));
    }
    let phi_hat = (1.0 - m.mean / m.variance) / m.acf1;
    if phi_hat == 0.0 || !phi_hat.is_finite() {
        return Err(Error::Estimation(format!(
            "phi estimate {phi_hat} leaves the remaining moment equations singular"
        )));
    }
    let pi_hat = 1.0 - (m.variance / m.mean) * (1.0 - m.acf1 / phi_hat);
    if pi_hat == 0.0 || !pi_hat.is_finite() {
        return Err(Error::Estimation(format!("pi estimate {pi_hat} is unusable")));
    }
    let nu_hat = (1.0 - phi_hat) * m.mean / pi_hat;
    let flags = MomFlags {
        phi_out_of_space: !(phi_hat > 0.0 && phi_hat < 1.0),
        pi_out_of_space: !(pi_hat > 0.0 && pi_hat <= 1.0),
        nu_out_of_space: !(nu_hat > 0.0),
    };
    Ok(MomEstimate { phi_hat, pi_hat, nu_hat, flags })
}

/// Method-of-moments estimation from a reported series.
pub fn mom_estimate(y: &[u64]) -> Result<MomEstimate> {
    mom_estimate_from_moments(&sample_moments(y)?)
}

/// One row of the estimator study: quantiles of an estimand over replicate
/// simulations at a given `(phi, pi)` cell and series length.
#[derive(Debug, Clone)]
pub struct MomStudyRow {
    pub phi: f64,
    pub pi: f64,
    pub t_len: usize,
    pub estimand: &'static str,
    pub q10: f64,
    pub q50: f64,
    pub q90: f64,
}

/// Simulation study of the moment estimators.
///
/// For each `(phi, pi)` grid cell and series length, simulates `reps` series
/// (50-point burn-in) and reports the 10th/50th/90th percentiles of each raw
/// estimate. Deterministic for a given seed; estimation failures are dropped
/// from the quantiles with a warning.
pub fn mom_study(
    grid: &[(f64, f64)],
    nu: f64,
    lengths: &[usize],
    reps: usize,
    seed: u64,
) -> Result<Vec<MomStudyRow>> {
    if grid.is_empty() || lengths.is_empty() || reps == 0 {
        return Err(Error::Validation("mom_study needs a nonempty grid, lengths and reps".into()));
    }
    let cells: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|c| (0..lengths.len()).map(move |l| (c, l)))
        .collect();
    let rows: Result<Vec<Vec<MomStudyRow>>> = cells
        .par_iter()
        .map(|&(c, l)| {
            let (phi, pi) = grid[c];
            let t_len = lengths[l];
            let params = ThinnedArParams::new(nu, phi, pi)?;
            let mut phis = Vec::with_capacity(reps);
            let mut pis = Vec::with_capacity(reps);
            let mut nus = Vec::with_capacity(reps);
            let mut failures = 0usize;
            for rep in 0..reps {
                let rep_seed = derive_seed(seed, &[c as u64, l as u64, rep as u64]);
                let out = simulate_thinned_pois_ar(params, t_len, 50, rep_seed)?;
                match mom_estimate(&out.y) {
                    Ok(est) => {
                        phis.push(est.phi_hat);
                        pis.push(est.pi_hat);
                        nus.push(est.nu_hat);
                    }
                    Err(_) => failures += 1,
                }
            }
            if failures > 0 {
                log::warn!(
                    "mom_study cell (phi={phi}, pi={pi}, T={t_len}): {failures}/{reps} estimates failed"
                );
            }
            let mut cell_rows = Vec::with_capacity(3);
            for (name, vals) in
                [("phi", &mut phis), ("pi", &mut pis), ("nu", &mut nus)]
            {
                if vals.is_empty() {
                    continue;
                }
                vals.sort_by(|a, b| a.total_cmp(b));
                cell_rows.push(MomStudyRow {
                    phi,
                    pi,
                    t_len,
                    estimand: name,
                    q10: quantile_type7(vals, 0.10),
                    q50: quantile_type7(vals, 0.50),
                    q90: quantile_type7(vals, 0.90),
                });
            }
            Ok(cell_rows)
        })
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}

/// Type-7 (linear interpolation) quantile of an ascending-sorted slice.
pub(crate) fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&p));
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}
