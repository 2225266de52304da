//! Integer latent-count updates for the exact model, and the
//! Metropolis-within-Gibbs driver that alternates them with gradient updates
//! of the continuous parameters.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::hmc::HmcChain;
use super::run::find_initial_point;
use super::rwm::RwmChain;
use super::{ChainConfig, DrawStore, SamplerKind, Target};
use crate::data::ObservedSeries;
use crate::models::{ExactPosterior, ExactScalarPriors, LinkTerm, ModelSpec, X1Mode};
use crate::numerics::{binomial_ln_pmf, ln_factorial};
use crate::rng::stream_rng;
use crate::simulate::ThinnedArParams;
use crate::{Error, Result};

/// Proposal half-width matching the discrete-uniform variance `w(w+1)/3` to
/// the plug-in stationary latent variance: `w = round(sqrt(3 sigma^2))`.
pub fn latent_proposal_width(nu: f64, phi: f64, fallback_var: f64) -> u64 {
    let var = if phi > 0.0 && phi < 1.0 {
        (nu / (1.0 - phi)) / (1.0 - phi * phi)
    } else {
        fallback_var
    };
    ((3.0 * var.max(0.5)).sqrt().round() as u64).max(1)
}

/// One single-site Metropolis sweep over the latent counts.
///
/// Site `t` proposes uniformly on `{x_t - w, ..., x_t + w} \ {x_t}`; proposals
/// below `y_t` are auto-rejected. When `x1_fixed`, the first entry is treated
/// as known data and skipped. Returns the number of accepted moves.
pub fn update_latent_counts(
    x: &mut [u64],
    y: &[u64],
    params: &ThinnedArParams,
    width: u64,
    x1_fixed: bool,
    rng: &mut ChaCha8Rng,
) -> usize {
    debug_assert_eq!(x.len(), y.len());
    debug_assert!(width >= 1);
    let t_n = x.len();
    let w = width as i64;
    let (nu, phi, pi) = (params.nu, params.phi, params.pi);
    let exact_reporting = pi >= 1.0;
    let ln_1mpi = if exact_reporting { f64::NEG_INFINITY } else { (-pi).ln_1p() };
    let mut accepted = 0usize;
    let start = usize::from(x1_fixed);
    for t in start..t_n {
        let xt = x[t] as i64;
        let d = rng.random_range(1..=2 * w);
        let delta = if d <= w { -d } else { d - w };
        let xp = xt + delta;
        if xp < y[t] as i64 {
            continue;
        }
        let xp = xp as u64;
        let xt = x[t];
        let mut dlp = if exact_reporting {
            binomial_ln_pmf(y[t], xp, pi) - binomial_ln_pmf(y[t], xt, pi)
        } else {
            // ln C(x', y) - ln C(x, y) + (x' - x) ln(1 - pi); the y! and
            // pi^y factors cancel
            (ln_factorial(xp) - ln_factorial(xp - y[t]))
                - (ln_factorial(xt) - ln_factorial(xt - y[t]))
                + (xp as f64 - xt as f64) * ln_1mpi
        };
        if t >= 1 {
            let lambda = nu + phi * x[t - 1] as f64;
            dlp += (xp as f64 - xt as f64) * lambda.ln()
                - (ln_factorial(xp) - ln_factorial(xt));
        }
        if t + 1 < t_n {
            let lam_old = nu + phi * xt as f64;
            let lam_new = nu + phi * xp as f64;
            dlp += x[t + 1] as f64 * (lam_new.ln() - lam_old.ln()) - (lam_new - lam_old);
        }
        if dlp >= 0.0 || rng.random::<f64>().ln() < dlp {
            x[t] = xp;
            accepted += 1;
        }
    }
    accepted
}

/// Pull the scalar value priors out of a canonical-shaped spec.
fn canonical_priors(spec: &ModelSpec) -> Result<(ExactScalarPriors, f64)> {
    let value_prior = |block: &crate::models::LinkBlock, name: &str| match block.terms.as_slice() {
        [LinkTerm::Intercept { prior, on: crate::models::PriorTarget::Value }] => Ok(*prior),
        _ => Err(Error::Validation(format!(
            "exact sampler needs a scalar value-prior {name} link"
        ))),
    };
    if spec.strata != 1 || spec.serial_len != 1 {
        return Err(Error::Validation(
            "exact sampler covers the canonical model only (1 stratum, serial_len 1)".into(),
        ));
    }
    let x1 = match spec.x1 {
        X1Mode::Known { value } => {
            if value.fract() != 0.0 {
                return Err(Error::Validation("known x_1 must be an integer count".into()));
            }
            value
        }
        X1Mode::Prior { .. } => {
            return Err(Error::Validation(
                "exact sampler treats x_1 as known; use the approximate model otherwise".into(),
            ));
        }
    };
    Ok((
        ExactScalarPriors {
            nu: value_prior(&spec.nu_link, "nu")?,
            phi: value_prior(&spec.phi_link, "phi")?,
            pi: value_prior(&spec.pi_link, "pi")?,
        },
        x1,
    ))
}

/// Conditional target over the continuous parameters given the latent counts.
struct ExactConditional<'a> {
    post: &'a ExactPosterior,
    x: &'a [u64],
}

impl Target for ExactConditional<'_> {
    fn dim(&self) -> usize {
        3
    }

    fn logp(&self, u: &[f64], grad: Option<&mut [f64]>) -> f64 {
        self.post.logp_given_x(u, self.x, grad)
    }

    fn initial_point(&self) -> Vec<f64> {
        self.post.initial_point().to_vec()
    }

    fn dense_mass_indices(&self) -> Vec<usize> {
        vec![0, 1, 2]
    }
}

/// Exact-model MCMC for the canonical thinned autoregression: alternates one
/// gradient (or RWM) update of `(pi, phi, nu)` given the latent counts with a
/// full single-site sweep of [`update_latent_counts`].
///
/// Draw columns: `pi`, `phi`, `nu`, then `x[1]..=x[T]` (with `x[1]` the known
/// initial count). The latent proposal width is refit every 100 warmup
/// iterations from the current parameter draw and frozen afterwards.
pub fn run_exact_mcmc(
    spec: &ModelSpec,
    data: &ObservedSeries,
    config: &ChainConfig,
) -> Result<DrawStore> {
    config.validate()?;
    spec.validate()?;
    if data.strata != 1 || data.t_len != spec.t_len {
        return Err(Error::Validation("exact sampler expects one aligned stratum".into()));
    }
    let (priors, x1) = canonical_priors(spec)?;
    let y = data.y[0].clone();
    let x1 = x1 as u64;
    let t_n = y.len();

    let mut names = vec!["pi".to_string(), "phi".to_string(), "nu".to_string()];
    names.extend((1..=t_n).map(|t| format!("x[{t}]")));

    let chains: Result<Vec<(Vec<f64>, f64)>> = (0..config.n_chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(config.seed, c as u64);
            let post = ExactPosterior::new(y.clone(), x1, priors)?;
            run_exact_chain(&post, spec.t_len, config, &mut rng)
        })
        .collect();
    let chains = chains?;
    let mut store = DrawStore::new(names, config.n_chains);
    for (c, (draws, acc)) in chains.into_iter().enumerate() {
        store.chains[c] = draws;
        store.acceptance[c] = acc;
    }
    Ok(store)
}

fn run_exact_chain(
    post: &ExactPosterior,
    t_n: usize,
    config: &ChainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, f64)> {
    // latent counts start at max(y_t, y_t / prior-median reporting rate)
    let pi0 = post.pi_prior_median();
    let mut x: Vec<u64> = post
        .y
        .iter()
        .map(|&yt| ((yt as f64 / pi0).round() as u64).max(yt))
        .collect();
    x[0] = post.x1;

    let y_var = {
        let m = post.y.iter().map(|&v| v as f64).sum::<f64>() / t_n as f64;
        post.y.iter().map(|&v| (v as f64 - m).powi(2)).sum::<f64>() / t_n as f64
    };

    let (u0, lp0) = {
        let cond = ExactConditional { post, x: &x };
        find_initial_point(&cond, rng)?
    };

    enum Cont {
        Hmc(HmcChain),
        Rwm(RwmChain),
    }
    let mut cont = match config.sampler {
        SamplerKind::Hmc => {
            let cond = ExactConditional { post, x: &x };
            Cont::Hmc(HmcChain::new(
                &cond,
                u0,
                config.leapfrog_steps.min(16),
                config.target_accept(),
                rng,
            ))
        }
        SamplerKind::Rwm => Cont::Rwm(RwmChain::new(u0, lp0, config.target_accept())),
    };

    let mut width = 3u64;
    let mut draws = Vec::new();
    let mut acc_sum = 0.0;
    let mut acc_n = 0usize;
    let windows = super::hmc::mass_windows(config.n_warmup);
    let mut window_idx = 0usize;
    for iter in 0..config.n_iter {
        // refit the proposal width from the current parameter values during
        // warmup, frozen afterwards
        if iter <= config.n_warmup && iter % 100 == 0 {
            let params = match &cont {
                Cont::Hmc(c) => post.constrain(&c.u),
                Cont::Rwm(c) => post.constrain(&c.u),
            };
            let fallback = y_var / (params.pi * params.pi).max(1e-4);
            width = latent_proposal_width(params.nu, params.phi, fallback);
        }
        let acc = {
            let cond = ExactConditional { post, x: &x };
            match &mut cont {
                Cont::Hmc(chain) => {
                    if iter == config.n_warmup {
                        chain.freeze();
                    }
                    chain.refresh(&cond);
                    let a = chain.step(&cond, rng);
                    if iter < config.n_warmup {
                        if let Some(&(lo, hi)) = windows.get(window_idx) {
                            if iter >= lo && iter < hi {
                                chain.record_warmup_draw();
                            }
                            if iter + 1 == hi {
                                chain.adopt_mass(&cond, rng);
                                window_idx += 1;
                            }
                        }
                    }
                    a
                }
                Cont::Rwm(chain) => {
                    if iter == config.n_warmup {
                        chain.freeze();
                    }
                    chain.refresh(&cond);
                    chain.sweep(&cond, rng)
                }
            }
        };
        let params = match &cont {
            Cont::Hmc(c) => post.constrain(&c.u),
            Cont::Rwm(c) => post.constrain(&c.u),
        };
        update_latent_counts(&mut x, &post.y, &params, width, true, rng);
        if iter >= config.n_warmup {
            acc_sum += acc;
            acc_n += 1;
            if (iter - config.n_warmup) % config.thin == 0 {
                draws.push(params.pi);
                draws.push(params.phi);
                draws.push(params.nu);
                draws.extend(x.iter().map(|&v| v as f64));
            }
        }
    }
    Ok((draws, acc_sum / acc_n.max(1) as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::log_joint_exact;
    use crate::simulate::simulate_thinned_pois_ar;
    use std::collections::HashMap;

    #[test]
    fn width_rule_matches_variance_identity() {
        // nu = 10, phi = 0.4: stationary latent variance 19.84, so
        // w = round(sqrt(3 * 19.84)) = 8
        assert_eq!(latent_proposal_width(10.0, 0.4, 0.0), 8);
        assert_eq!(latent_proposal_width(1e-3, 1e-3, 0.0), 1);
        // nonstationary parameters fall back to the supplied variance
        assert_eq!(latent_proposal_width(5.0, 1.2, 12.0), 6);
    }

    #[test]
    fn full_reporting_absorbs_at_y() {
        let params = ThinnedArParams::new(5.0, 0.5, 1.0).unwrap();
        let y = vec![4u64, 6, 3, 7, 5];
        let mut x = vec![4u64, 9, 5, 8, 6];
        x[0] = y[0];
        let mut rng = stream_rng(3, 0);
        for _ in 0..500 {
            update_latent_counts(&mut x, &y, &params, 3, true, &mut rng);
        }
        assert_eq!(x, y);
        // once there, every proposal is rejected
        let acc = update_latent_counts(&mut x, &y, &params, 3, true, &mut rng);
        assert_eq!(acc, 0);
        assert_eq!(x, y);
    }

    #[test]
    fn sweep_matches_enumeration_on_tiny_posterior() {
        // T = 3, x_1 = 2 known: enumerate the exact conditional over (x_2, x_3)
        let params = ThinnedArParams::new(2.0, 0.5, 0.5).unwrap();
        let y = vec![1u64, 1, 1];
        let cap = 30u64;
        let mut exact = HashMap::new();
        let mut total = 0.0f64;
        for x2 in 1..=cap {
            for x3 in 1..=cap {
                let x = [2u64, x2, x3];
                let w = log_joint_exact(&params, &x, &y).exp();
                exact.insert((x2, x3), w);
                total += w;
            }
        }
        let mut rng = stream_rng(11, 0);
        let mut x = vec![2u64, 2, 2];
        let mut visits: HashMap<(u64, u64), f64> = HashMap::new();
        let sweeps = 400_000;
        for it in 0..sweeps {
            update_latent_counts(&mut x, &y, &params, 3, true, &mut rng);
            if it >= 1000 {
                *visits.entry((x[1], x[2])).or_insert(0.0) += 1.0;
            }
        }
        let n = (sweeps - 1000) as f64;
        let mut tv = 0.0;
        for (state, w) in &exact {
            let p_exact = w / total;
            let p_emp = visits.get(state).copied().unwrap_or(0.0) / n;
            tv += (p_exact - p_emp).abs();
        }
        tv *= 0.5;
        assert!(tv <= 0.02, "total variation {tv}");
    }

    fn canonical_spec_and_data(
        nu: f64,
        phi: f64,
        pi: f64,
        t_len: usize,
        seed: u64,
    ) -> (ModelSpec, ObservedSeries) {
        let params = ThinnedArParams::new(nu, phi, pi).unwrap();
        let sim = simulate_thinned_pois_ar(params, t_len, 100, seed).unwrap();
        let spec = ModelSpec::canonical(t_len, sim.x[0] as f64);
        let data = ObservedSeries::univariate(sim.y).unwrap();
        (spec, data)
    }

    #[test]
    fn exact_mcmc_recovers_roughly_and_is_deterministic() {
        let (spec, data) = canonical_spec_and_data(10.0, 0.6, 0.6, 40, 21);
        let config = ChainConfig::new(2, 4_000, 1_000, 77).with_thin(2);
        let store = run_exact_mcmc(&spec, &data, &config).unwrap();
        let store2 = run_exact_mcmc(&spec, &data, &config).unwrap();
        assert_eq!(store, store2);
        let summaries = super::super::summarize(&store).unwrap();
        let pi = summaries.iter().find(|s| s.name == "pi").unwrap();
        let phi = summaries.iter().find(|s| s.name == "phi").unwrap();
        assert!(pi.median > 0.2 && pi.median < 0.95, "pi median {}", pi.median);
        assert!(phi.median > 0.2 && phi.median < 0.95, "phi median {}", phi.median);
        // x[1] is the known initial count: a constant column
        let x1 = summaries.iter().find(|s| s.name == "x[1]").unwrap();
        assert_eq!(x1.q2_5, x1.q97_5);
    }

    #[test]
    fn degenerate_all_zero_series_still_runs() {
        let spec = ModelSpec::canonical(12, 0.0);
        let data = ObservedSeries::univariate(vec![0; 12]).unwrap();
        let config = ChainConfig::new(2, 600, 200, 5);
        let store = run_exact_mcmc(&spec, &data, &config).unwrap();
        for c in 0..2 {
            assert!(store.chains[c].iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn non_canonical_spec_is_rejected() {
        let mut spec = ModelSpec::canonical(20, 3.0);
        spec.x1 = X1Mode::Prior { mean: 5.0, sd: 2.0 };
        let data = ObservedSeries::univariate(vec![1; 20]).unwrap();
        let config = ChainConfig::new(2, 100, 50, 1);
        assert!(run_exact_mcmc(&spec, &data, &config).is_err());
    }
}
