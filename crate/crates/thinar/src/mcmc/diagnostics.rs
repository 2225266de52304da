//! Convergence diagnostics: split R-hat, bulk ESS, posterior summaries.

use super::DrawStore;
use crate::moments::quantile_type7;
use crate::{Error, Result};

/// Reported ESS for a constant (zero-variance) parameter column.
pub const ESS_SENTINEL: f64 = f64::INFINITY;

/// Split R-hat (non-rank-normalized).
///
/// Each chain is split in half; with within-half-chain variance `W` and
/// between-half-chain variance `B`, `Rhat = sqrt((W + B/n) / W)`. Returns
/// `+inf` when the within-variance is exactly zero.
pub fn split_rhat(chains: &[&[f64]]) -> Result<f64> {
    if chains.len() < 2 {
        return Err(Error::Validation("split_rhat needs >= 2 chains".into()));
    }
    let mut halves: Vec<&[f64]> = Vec::with_capacity(chains.len() * 2);
    for chain in chains {
        if chain.len() < 4 {
            return Err(Error::Validation("split_rhat needs >= 4 draws per chain".into()));
        }
        let n = chain.len() / 2;
        halves.push(&chain[..n]);
        halves.push(&chain[chain.len() - n..]);
    }
    let m = halves.len() as f64;
    let n = halves[0].len() as f64;
    let means: Vec<f64> = halves.iter().map(|h| mean(h)).collect();
    let grand = mean(&means);
    let b = n / (m - 1.0) * means.iter().map(|mu| (mu - grand).powi(2)).sum::<f64>();
    let w = halves
        .iter()
        .zip(&means)
        .map(|(h, mu)| h.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0))
        .sum::<f64>()
        / m;
    if w == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(((w + b / n) / w).sqrt())
}

/// Bulk effective sample size via the initial-positive-sequence truncation of
/// the chain-averaged autocorrelation (chains centred by their own means).
///
/// Constant columns report [`ESS_SENTINEL`].
pub fn ess_bulk(chains: &[&[f64]]) -> Result<f64> {
    if chains.is_empty() || chains[0].len() < 4 {
        return Err(Error::Validation("ess_bulk needs chains with >= 4 draws".into()));
    }
    let n = chains[0].len();
    let m = chains.len();
    let total = (n * m) as f64;
    // per-chain centred autocovariances, averaged across chains
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let var0: f64 = avg_autocov(chains, &means, 0);
    if var0 == 0.0 {
        return Ok(ESS_SENTINEL);
    }
    let mut tau = 1.0;
    let mut k = 1;
    while k + 1 < n {
        let rho_a = avg_autocov(chains, &means, k) / var0;
        let rho_b = avg_autocov(chains, &means, k + 1) / var0;
        if rho_a + rho_b <= 0.0 {
            break;
        }
        tau += 2.0 * (rho_a + rho_b);
        k += 2;
    }
    Ok((total / tau).min(total))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn avg_autocov(chains: &[&[f64]], means: &[f64], lag: usize) -> f64 {
    let n = chains[0].len();
    let mut acc = 0.0;
    for (c, chain) in chains.iter().enumerate() {
        let mu = means[c];
        let mut s = 0.0;
        for t in 0..n - lag {
            s += (chain[t] - mu) * (chain[t + lag] - mu);
        }
        acc += s / n as f64;
    }
    acc / chains.len() as f64
}

/// Posterior summary of one parameter.
#[derive(Debug, Clone)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub q2_5: f64,
    pub q5: f64,
    pub q95: f64,
    pub q97_5: f64,
    pub ess: f64,
    pub rhat: f64,
    /// Monte-Carlo standard error of the posterior mean.
    pub mcse: f64,
}

/// Mean, sd, quantiles (type-7), bulk ESS and split R-hat per parameter.
pub fn summarize(store: &DrawStore) -> Result<Vec<ParamSummary>> {
    if store.n_chains() == 0 || store.n_draws(0) == 0 {
        return Err(Error::Validation("empty draw store".into()));
    }
    let mut out = Vec::with_capacity(store.n_params);
    for p in 0..store.n_params {
        let per_chain: Vec<Vec<f64>> = (0..store.n_chains()).map(|c| store.column(c, p)).collect();
        let refs: Vec<&[f64]> = per_chain.iter().map(|v| v.as_slice()).collect();
        let mut pooled = store.pooled(p);
        let mu = mean(&pooled);
        let var = pooled.iter().map(|x| (x - mu).powi(2)).sum::<f64>()
            / (pooled.len() as f64 - 1.0).max(1.0);
        let sd = var.sqrt();
        pooled.sort_by(|a, b| a.total_cmp(b));
        let ess = ess_bulk(&refs)?;
        let rhat = if store.n_chains() >= 2 { split_rhat(&refs)? } else { f64::NAN };
        let mcse = if ess.is_finite() { sd / ess.sqrt() } else { 0.0 };
        out.push(ParamSummary {
            name: store.names[p].clone(),
            mean: mu,
            sd,
            median: quantile_type7(&pooled, 0.5),
            q2_5: quantile_type7(&pooled, 0.025),
            q5: quantile_type7(&pooled, 0.05),
            q95: quantile_type7(&pooled, 0.95),
            q97_5: quantile_type7(&pooled, 0.975),
            ess,
            rhat,
            mcse,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn identical_chains_with_equal_halves_give_exactly_one() {
        // periodic sequence: both halves identical, so B = 0 and Rhat = 1
        let base: Vec<f64> = (0..1000).map(|i| ((i % 500) as f64 * 0.7).sin()).collect();
        let rhat = split_rhat(&[&base, &base, &base, &base]).unwrap();
        assert!((rhat - 1.0).abs() < 1e-12, "rhat = {rhat}");
    }

    #[test]
    fn separated_chains_blow_up_rhat() {
        let mut rng = stream_rng(5, 0);
        let a: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..1000)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                10.0 + z
            })
            .collect();
        let rhat = split_rhat(&[&a, &b]).unwrap();
        assert!(rhat > 1.5, "rhat = {rhat}");
    }

    #[test]
    fn iid_chains_look_converged() {
        let chains: Vec<Vec<f64>> = (0..4)
            .map(|c| {
                let mut rng = stream_rng(6, c);
                (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect()
            })
            .collect();
        let refs: Vec<&[f64]> = chains.iter().map(|v| v.as_slice()).collect();
        let rhat = split_rhat(&refs).unwrap();
        assert!(rhat < 1.01, "rhat = {rhat}");
        let ess = ess_bulk(&refs).unwrap();
        let total = 40_000.0;
        assert!(
            (ess - total).abs() < 0.10 * total,
            "iid ESS {ess} vs draw count {total}"
        );
    }

    #[test]
    fn zero_within_variance_is_a_sentinel() {
        let a = vec![2.0; 100];
        let b = vec![3.0; 100];
        let rhat = split_rhat(&[&a, &b]).unwrap();
        assert!(rhat.is_infinite());
        let ess = ess_bulk(&[&a[..], &b[..]]).unwrap();
        assert_eq!(ess, ESS_SENTINEL);
    }

    #[test]
    fn ar1_ess_matches_analytic_rate() {
        // AR(1) with coefficient 0.9: ESS/N -> (1-0.9)/(1+0.9)
        let rho = 0.9f64;
        let n = 200_000;
        let chains: Vec<Vec<f64>> = (0..2)
            .map(|c| {
                let mut rng = stream_rng(7, c);
                let mut x = 0.0f64;
                let innov_sd = (1.0 - rho * rho).sqrt();
                (0..n)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        x = rho * x + innov_sd * z;
                        x
                    })
                    .collect()
            })
            .collect();
        let refs: Vec<&[f64]> = chains.iter().map(|v| v.as_slice()).collect();
        let ess = ess_bulk(&refs).unwrap();
        let expected = (2 * n) as f64 * (1.0 - rho) / (1.0 + rho);
        assert!(
            (ess - expected).abs() < 0.25 * expected,
            "ess {ess} vs analytic {expected}"
        );
    }

    #[test]
    fn summary_of_constant_column() {
        let mut store = DrawStore::new(vec!["c".into()], 2);
        for _ in 0..50 {
            store.push_draw(0, &[4.0]);
            store.push_draw(1, &[4.0]);
        }
        let s = summarize(&store).unwrap();
        assert_eq!(s[0].median, 4.0);
        assert_eq!(s[0].q2_5, 4.0);
        assert_eq!(s[0].q97_5, 4.0);
        assert!(s[0].ess.is_infinite());
    }
}
