//! Epidemic-curve reconstruction: map approximate-posterior draws back to
//! integer counts through the latent Gaussian transform
//! `X = F^{-1}(Phi(z*))` with the conditional Poisson CDF per draw, summarise
//! them, score agreement between fits, roll reconstructed incidence up to
//! prevalence, and smooth raw survey proportions.

use rayon::prelude::*;

use crate::data::AuxRow;
use crate::mcmc::{run_chains, ChainConfig, DrawStore, Target};
use crate::models::{ApproxModel, CountFamily};
use crate::numerics::{
    chi_squared_quantile, phi as std_phi, poisson_cdf_raw, Probability, PROB_CLAMP,
};
use crate::{Error, Result};

/// Integer posterior summary of one reconstructed count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountSummary {
    pub median: u64,
    pub lo: u64,
    pub hi: u64,
}

/// Reconstructed series summaries per (stratum, t) at a stated credible
/// level. Medians use the lower-median convention so every reported value is
/// one actually attained by draws; `lo <= median <= hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionSummary {
    pub level: f64,
    pub cells: Vec<Vec<CountSummary>>,
}

/// Integer draws for one stratum plus bookkeeping about clamping/exclusions.
#[derive(Debug, Clone)]
pub struct ReconstructedDraws {
    /// `x[draw][t]`
    pub x: Vec<Vec<u64>>,
    /// Draws dropped because a `lambda` was nonpositive.
    pub excluded_draws: usize,
    /// Cells whose `Phi(z*)` needed clamping into `[1e-12, 1 - 1e-12]`.
    pub clamped_cells: usize,
}

/// Map aligned `(z*, lambda)` draw matrices (`[draw][t]`) to integer counts.
///
/// Each cell computes `X = F^{-1}(clamp(Phi(z*)))` with `F` the Poisson CDF at
/// that draw's `lambda`; monotone in `z*` for fixed `lambda`. Draws containing
/// a nonpositive `lambda` are excluded and counted.
pub fn reconstruct_counts(
    zstar: &[Vec<f64>],
    lambda: &[Vec<f64>],
    family: CountFamily,
) -> Result<ReconstructedDraws> {
    if !matches!(family, CountFamily::Poisson) {
        return Err(Error::Validation(
            "only the Poisson count family has a quantile transform implemented".into(),
        ));
    }
    if zstar.len() != lambda.len() {
        return Err(Error::Validation("z* and lambda draws are not aligned".into()));
    }
    let mut x = Vec::with_capacity(zstar.len());
    let mut excluded = 0usize;
    let mut clamped = 0usize;
    for (zs, ls) in zstar.iter().zip(lambda) {
        if zs.len() != ls.len() {
            return Err(Error::Validation("z* and lambda draws are not aligned".into()));
        }
        if ls.iter().any(|&l| !(l > 0.0)) {
            excluded += 1;
            continue;
        }
        let mut row = Vec::with_capacity(zs.len());
        for (&z, &l) in zs.iter().zip(ls) {
            let (p, was_clamped) = Probability::new(std_phi(z))
                .expect("Phi output is a probability")
                .interior();
            if was_clamped {
                clamped += 1;
            }
            row.push(poisson_quantile_clamped(p, l));
        }
        x.push(row);
    }
    Ok(ReconstructedDraws { x, excluded_draws: excluded, clamped_cells: clamped })
}

fn poisson_quantile_clamped(p: f64, lambda: f64) -> u64 {
    debug_assert!((PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&p));
    crate::numerics::poisson_quantile(Probability::new(p).unwrap(), lambda)
        .expect("clamped probability and positive rate")
}

/// Order-statistic quantile of integer draws: the smallest attained value `q`
/// with `#(draws <= q) >= ceil(p n)`. `p = 0.5` gives the lower median.
fn integer_quantile(sorted: &[u64], p: f64) -> u64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Summarise per-`t` integer draws (`x[draw][t]`) at a credible level.
pub fn summarize_integer_draws(x: &[Vec<u64>], level: f64) -> Result<Vec<CountSummary>> {
    if x.is_empty() {
        return Err(Error::Validation("no reconstruction draws to summarise".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Validation(format!("credible level {level} outside (0, 1)")));
    }
    let t_n = x[0].len();
    let alpha = (1.0 - level) / 2.0;
    let mut out = Vec::with_capacity(t_n);
    for t in 0..t_n {
        let mut col: Vec<u64> = x.iter().map(|row| row[t]).collect();
        col.sort_unstable();
        out.push(CountSummary {
            median: integer_quantile(&col, 0.5),
            lo: integer_quantile(&col, alpha),
            hi: integer_quantile(&col, 1.0 - alpha),
        });
    }
    Ok(out)
}

/// Percentage of `(t, statistic)` cells (statistic in {median, lo, hi}) where
/// two summaries agree exactly. Symmetric in its arguments.
pub fn perfect_match_rate(a: &ReconstructionSummary, b: &ReconstructionSummary) -> Result<f64> {
    if a.level != b.level {
        return Err(Error::Validation(format!(
            "credible levels differ: {} vs {}",
            a.level, b.level
        )));
    }
    if a.cells.len() != b.cells.len()
        || a.cells.iter().zip(&b.cells).any(|(x, y)| x.len() != y.len())
    {
        return Err(Error::Validation("reconstruction summaries have different shapes".into()));
    }
    let mut matched = 0usize;
    let mut total = 0usize;
    for (sa, sb) in a.cells.iter().zip(&b.cells) {
        for (ca, cb) in sa.iter().zip(sb) {
            matched += usize::from(ca.median == cb.median)
                + usize::from(ca.lo == cb.lo)
                + usize::from(ca.hi == cb.hi);
            total += 3;
        }
    }
    Ok(100.0 * matched as f64 / total as f64)
}

/// Windowed cumulative sums of reconstructed incidence divided by population:
/// `P_t = sum_{k=0}^{w-1} X_{t-k} / pop`, with partial windows at the start.
/// Values above 1 are reported as-is (a misspecification signal, not an
/// error). Linear in the draws.
pub fn prevalence_rollup(x: &[Vec<u64>], window: usize, population: f64) -> Result<Vec<Vec<f64>>> {
    if window == 0 {
        return Err(Error::Validation("rollup window must be >= 1".into()));
    }
    if !(population > 0.0) {
        return Err(Error::Validation("population must be positive".into()));
    }
    let mut out = Vec::with_capacity(x.len());
    for row in x {
        let mut acc = 0.0f64;
        let mut rolled = Vec::with_capacity(row.len());
        for t in 0..row.len() {
            acc += row[t] as f64;
            if t >= window {
                acc -= row[t - window] as f64;
            }
            rolled.push(acc / population);
        }
        out.push(rolled);
    }
    Ok(out)
}

/// Chi-squared goodness-of-fit of integer draws against `Poisson(lambda)`:
/// bins with expected count >= 5 (tails pooled). Returns
/// `(statistic, critical value)` at the given test level.
pub fn poisson_gof_chi_squared(xs: &[u64], lambda: f64, test_level: f64) -> Result<(f64, f64)> {
    if xs.is_empty() {
        return Err(Error::Validation("no draws for the goodness-of-fit test".into()));
    }
    let n = xs.len() as f64;
    let hi_cap = (lambda + 12.0 * lambda.sqrt()).ceil() as usize + 2;
    let mut observed = vec![0.0f64; hi_cap + 1];
    for &v in xs {
        let idx = (v as usize).min(hi_cap);
        observed[idx] += 1.0;
    }
    // expected counts; pool cells below 5 into their neighbours
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut acc_obs = 0.0;
    let mut acc_exp = 0.0;
    for k in 0..=hi_cap {
        let pk = if k == hi_cap {
            let (_, sf) = poisson_cdf_raw(k as u64 - 1, lambda);
            sf
        } else {
            crate::numerics::poisson_pmf(k as f64, lambda)
        };
        acc_obs += observed[k];
        acc_exp += n * pk;
        if acc_exp >= 5.0 {
            bins.push((acc_obs, acc_exp));
            acc_obs = 0.0;
            acc_exp = 0.0;
        }
    }
    if acc_exp > 0.0 || acc_obs > 0.0 {
        if let Some(last) = bins.last_mut() {
            last.0 += acc_obs;
            last.1 += acc_exp;
        }
    }
    if bins.len() < 2 {
        return Err(Error::Degenerate("too few bins for a chi-squared test".into()));
    }
    let stat: f64 = bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let crit = chi_squared_quantile(1.0 - test_level, (bins.len() - 1) as f64)?;
    Ok((stat, crit))
}

/// Reconstruction of a fitted approximate model: per draw, rebuild the latent
/// panels and apply the quantile transform; summarise at `level`.
pub fn reconstruct_from_fit(
    model: &ApproxModel,
    store: &DrawStore,
    level: f64,
) -> Result<(ReconstructionSummary, ReconstructedStats)> {
    let strata = model.spec.strata;
    let t_len = model.spec.t_len;
    let rows: Vec<Vec<f64>> = (0..store.n_chains())
        .flat_map(|c| {
            store.chains[c]
                .chunks(store.n_params)
                .map(|r| r.to_vec())
                .collect::<Vec<_>>()
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::Validation("draw store is empty".into()));
    }
    // per-draw latent panels (parallel over draws)
    let panels: Result<Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>)>> = rows
        .par_iter()
        .map(|row| {
            let u = model.untransform_params(row)?;
            let states = model.latent_states(&u)?;
            Ok((states.zstar, states.lambda))
        })
        .collect();
    let panels = panels?;
    let x1_known = match model.spec.x1 {
        crate::models::X1Mode::Known { value } => Some(value.round() as u64),
        crate::models::X1Mode::Prior { .. } => None,
    };
    let mut cells = Vec::with_capacity(strata);
    let mut stats = ReconstructedStats::default();
    for i in 0..strata {
        let start = usize::from(x1_known.is_some());
        let zs: Vec<Vec<f64>> =
            panels.iter().map(|(z, _)| z[i][start..].to_vec()).collect();
        let ls: Vec<Vec<f64>> =
            panels.iter().map(|(_, l)| l[i][start..].to_vec()).collect();
        let recon = reconstruct_counts(&zs, &ls, model.spec.count_family)?;
        stats.excluded_draws += recon.excluded_draws;
        stats.clamped_cells += recon.clamped_cells;
        let mut summary = summarize_integer_draws(&recon.x, level)?;
        if let Some(x1) = x1_known {
            summary.insert(0, CountSummary { median: x1, lo: x1, hi: x1 });
        }
        debug_assert_eq!(summary.len(), t_len);
        cells.push(summary);
    }
    Ok((ReconstructionSummary { level, cells }, stats))
}

/// Clamping/exclusion counters from a full-fit reconstruction.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReconstructedStats {
    pub excluded_draws: usize,
    pub clamped_cells: usize,
}

/// Reconstruction summary straight from exact-model latent draws (columns
/// `x[1]..=x[T]` of an exact fit's draw store).
pub fn exact_reconstruction(
    store: &DrawStore,
    t_len: usize,
    level: f64,
) -> Result<ReconstructionSummary> {
    let first = store
        .param_index("x[1]")
        .ok_or_else(|| Error::Validation("draw store has no latent count columns".into()))?;
    let mut draws: Vec<Vec<u64>> = Vec::new();
    for c in 0..store.n_chains() {
        for row in store.chains[c].chunks(store.n_params) {
            draws.push(row[first..first + t_len].iter().map(|&v| v.round() as u64).collect());
        }
    }
    let cells = summarize_integer_draws(&draws, level)?;
    Ok(ReconstructionSummary { level, cells: vec![cells] })
}

// ---------------------------------------------------------------------------
// survey-prevalence smoothing
// ---------------------------------------------------------------------------

/// Random-walk smoother for raw survey proportions:
/// `P ~ Bin(R, xi_d)`, `logit(xi_d) ~ N(logit(xi_{d-1}), sigma)`,
/// `logit(xi_1) ~ N(0, 5)`, `sigma ~ Exponential(0.01)`.
struct LogitRandomWalk<'a> {
    /// rows grouped per stratum, each sorted by day
    groups: Vec<Vec<&'a AuxRow>>,
    dim: usize,
}

impl<'a> LogitRandomWalk<'a> {
    fn new(rows: &'a [AuxRow]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Validation("empty survey".into()));
        }
        let strata = rows.iter().map(|r| r.stratum).max().unwrap() + 1;
        let mut groups: Vec<Vec<&AuxRow>> = vec![Vec::new(); strata];
        for row in rows {
            if row.positives > row.tests {
                return Err(Error::Validation("survey row has positives > tests".into()));
            }
            groups[row.stratum].push(row);
        }
        for g in &mut groups {
            g.sort_by_key(|r| r.day);
        }
        if groups.iter().any(|g| g.is_empty()) {
            return Err(Error::Validation(
                "every stratum up to the maximum index needs at least one survey row".into(),
            ));
        }
        let dim = rows.len() + 1;
        Ok(LogitRandomWalk { groups, dim })
    }

    fn eta_offsets(&self) -> Vec<usize> {
        let mut offs = Vec::with_capacity(self.groups.len());
        let mut acc = 0;
        for g in &self.groups {
            offs.push(acc);
            acc += g.len();
        }
        offs
    }
}

impl Target for LogitRandomWalk<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn logp(&self, u: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        let sigma_u = u[self.dim - 1];
        let sigma = sigma_u.exp();
        if !sigma.is_finite() || sigma <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if let Some(g) = grad.as_deref_mut() {
            g.fill(0.0);
        }
        let mut logp = 0.0;
        let mut dsigma = 0.0;
        let mut off = 0usize;
        for group in &self.groups {
            for (k, row) in group.iter().enumerate() {
                let eta = u[off + k];
                let xi = crate::numerics::logistic(eta);
                logp += row.positives as f64 * xi.max(1e-300).ln()
                    + (row.tests - row.positives) as f64 * (-xi).ln_1p().max(-700.0);
                if let Some(g) = grad.as_deref_mut() {
                    g[off + k] += row.positives as f64 - row.tests as f64 * xi;
                }
                if k == 0 {
                    logp += crate::numerics::normal_ln_pdf(eta, 0.0, 5.0);
                    if let Some(g) = grad.as_deref_mut() {
                        g[off + k] += -eta / 25.0;
                    }
                } else {
                    let prev = u[off + k - 1];
                    let resid = (eta - prev) / sigma;
                    logp += -0.5 * resid * resid - sigma_u - 0.5 * crate::numerics::LN_2PI;
                    if let Some(g) = grad.as_deref_mut() {
                        g[off + k] += -resid / sigma;
                        g[off + k - 1] += resid / sigma;
                    }
                    dsigma += (resid * resid - 1.0) / sigma;
                }
            }
            off += group.len();
        }
        // sigma ~ Exponential(0.01), plus the exp-transform Jacobian
        logp += crate::numerics::exponential_ln_pdf(sigma, 0.01) + sigma_u;
        if let Some(g) = grad.as_deref_mut() {
            g[self.dim - 1] = (dsigma - 0.01) * sigma + 1.0;
        }
        logp
    }

    fn constrained_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dim);
        for (i, group) in self.groups.iter().enumerate() {
            for row in group {
                names.push(format!("xi[{}].s{i}", row.day));
            }
        }
        names.push("sigma_xi".into());
        names
    }

    fn constrain(&self, u: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> =
            u[..self.dim - 1].iter().map(|&e| crate::numerics::logistic(e)).collect();
        out.push(u[self.dim - 1].exp());
        out
    }

    fn initial_point(&self) -> Vec<f64> {
        let mut u = Vec::with_capacity(self.dim);
        for group in &self.groups {
            for row in group {
                let p = (row.positives as f64 + 0.5) / (row.tests as f64 + 1.0);
                u.push(crate::numerics::logit(p.clamp(1e-4, 1.0 - 1e-4)));
            }
        }
        u.push(0.1f64.ln());
        u
    }
}

/// One smoothed survey point.
#[derive(Debug, Clone, Copy)]
pub struct SmoothedPoint {
    pub stratum: usize,
    pub day: usize,
    pub median: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Posterior draws and 95% interval summaries of the survey smoother.
pub struct SmoothedPrevalence {
    pub store: DrawStore,
    pub points: Vec<SmoothedPoint>,
}

/// Fit the random-walk smoother to survey rows with the crate's samplers.
pub fn smooth_prevalence(rows: &[AuxRow], config: &ChainConfig) -> Result<SmoothedPrevalence> {
    let target = LogitRandomWalk::new(rows)?;
    let store = run_chains(&target, config)?;
    let summaries = crate::mcmc::summarize(&store)?;
    let mut points = Vec::new();
    let offsets = target.eta_offsets();
    for (i, group) in target.groups.iter().enumerate() {
        for (k, row) in group.iter().enumerate() {
            let s = &summaries[offsets[i] + k];
            points.push(SmoothedPoint {
                stratum: row.stratum,
                day: row.day,
                median: s.median,
                lo: s.q2_5,
                hi: s.q97_5,
            });
        }
    }
    Ok(SmoothedPrevalence { store, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn median_of_poisson_ten() {
        let recon = reconstruct_counts(&[vec![0.0]], &[vec![10.0]], CountFamily::Poisson).unwrap();
        assert_eq!(recon.x[0][0], 10);
    }

    #[test]
    fn extreme_lower_tail_maps_to_zero() {
        for &lambda in &[0.5f64, 2.0, 5.0] {
            let recon =
                reconstruct_counts(&[vec![-8.0]], &[vec![lambda]], CountFamily::Poisson).unwrap();
            assert_eq!(recon.x[0][0], 0, "lambda = {lambda}");
            assert_eq!(recon.clamped_cells, 1);
        }
    }

    #[test]
    fn monotone_in_zstar() {
        let zs: Vec<f64> = (-40..=40).map(|k| k as f64 / 10.0).collect();
        let draws: Vec<Vec<f64>> = zs.iter().map(|&z| vec![z]).collect();
        let lams: Vec<Vec<f64>> = zs.iter().map(|_| vec![50.0]).collect();
        let recon = reconstruct_counts(&draws, &lams, CountFamily::Poisson).unwrap();
        for w in recon.x.windows(2) {
            assert!(w[0][0] <= w[1][0]);
        }
    }

    #[test]
    fn nonpositive_lambda_draws_are_excluded() {
        let recon = reconstruct_counts(
            &[vec![0.0], vec![0.0]],
            &[vec![10.0], vec![-1.0]],
            CountFamily::Poisson,
        )
        .unwrap();
        assert_eq!(recon.x.len(), 1);
        assert_eq!(recon.excluded_draws, 1);
    }

    #[test]
    fn negbin_family_is_an_unimplemented_hook() {
        assert!(reconstruct_counts(&[], &[], CountFamily::NegBin { psi: 3.0 }).is_err());
    }

    #[test]
    fn transform_preserves_the_poisson_marginal() {
        // standard-normal draws through the transform pass a chi-squared GOF
        // against Poisson(lambda)
        let mut rng = stream_rng(77, 0);
        let n = 100_000;
        for &lambda in &[50.0] {
            let zs: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![StandardNormal.sample(&mut rng)])
                .collect();
            let ls = vec![vec![lambda]; n];
            let recon = reconstruct_counts(&zs, &ls, CountFamily::Poisson).unwrap();
            let xs: Vec<u64> = recon.x.iter().map(|r| r[0]).collect();
            let (stat, crit) = poisson_gof_chi_squared(&xs, lambda, 0.01).unwrap();
            assert!(stat <= crit, "lambda {lambda}: chi2 {stat} > {crit}");
        }
    }

    fn toy_summary(shift_hi: u64) -> ReconstructionSummary {
        ReconstructionSummary {
            level: 0.9,
            cells: vec![(0..10)
                .map(|t| CountSummary { median: 5 + t, lo: 2 + t, hi: 9 + t + shift_hi })
                .collect()],
        }
    }

    #[test]
    fn match_rate_examples() {
        let a = toy_summary(0);
        assert_eq!(perfect_match_rate(&a, &a).unwrap(), 100.0);
        let b = toy_summary(1);
        let rate = perfect_match_rate(&a, &b).unwrap();
        assert!((rate - 200.0 / 3.0).abs() < 1e-9);
        // symmetric
        assert_eq!(
            perfect_match_rate(&a, &b).unwrap(),
            perfect_match_rate(&b, &a).unwrap()
        );
        // shape and level validation
        let mut c = toy_summary(0);
        c.level = 0.95;
        assert!(perfect_match_rate(&a, &c).is_err());
        let mut d = toy_summary(0);
        d.cells[0].pop();
        assert!(perfect_match_rate(&a, &d).is_err());
    }

    #[test]
    fn lower_median_is_attained() {
        // even number of draws: report the lower middle order statistic
        let draws = vec![vec![3u64], vec![5], vec![4], vec![6]];
        let s = summarize_integer_draws(&draws, 0.5).unwrap();
        assert_eq!(s[0].median, 4);
    }

    #[test]
    fn rollup_examples() {
        let x = vec![vec![2u64, 3, 4, 5, 6]];
        // window 1: plain scaling
        let r = prevalence_rollup(&x, 1, 100.0).unwrap();
        assert_eq!(r[0], vec![0.02, 0.03, 0.04, 0.05, 0.06]);
        // constant series saturates at window * c / pop
        let c = vec![vec![7u64; 40]];
        let r = prevalence_rollup(&c, 14, 1000.0).unwrap();
        assert!((r[0][20] - 14.0 * 7.0 / 1000.0).abs() < 1e-15);
        // partial window at the start
        assert!((r[0][0] - 7.0 / 1000.0).abs() < 1e-15);
        // brute-force convolution oracle on random draws
        let mut rng = stream_rng(5, 1);
        let xs: Vec<Vec<u64>> = (0..20)
            .map(|_| {
                (0..30)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        (z.abs() * 8.0) as u64
                    })
                    .collect()
            })
            .collect();
        let rolled = prevalence_rollup(&xs, 7, 500.0).unwrap();
        for (row, out) in xs.iter().zip(&rolled) {
            for t in 0..row.len() {
                let direct: u64 = row[t.saturating_sub(6)..=t].iter().sum();
                assert!((out[t] - direct as f64 / 500.0).abs() < 1e-12);
            }
        }
        // linearity in the draws
        let doubled: Vec<Vec<u64>> = xs.iter().map(|r| r.iter().map(|v| v * 2).collect()).collect();
        let rolled2 = prevalence_rollup(&doubled, 7, 500.0).unwrap();
        for (a, b) in rolled.iter().zip(&rolled2) {
            for (x1, x2) in a.iter().zip(b) {
                assert!((x2 - 2.0 * x1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn smoother_single_week_centres_on_half() {
        let rows = vec![AuxRow { stratum: 0, day: 1, tests: 100, positives: 50 }];
        let config = ChainConfig::new(2, 3_000, 1_000, 3);
        let sm = smooth_prevalence(&rows, &config).unwrap();
        assert_eq!(sm.points.len(), 1);
        assert!((sm.points[0].median - 0.5).abs() < 0.05, "median {}", sm.points[0].median);
    }

    #[test]
    fn smoother_shrinks_constant_signal_flat() {
        let rows: Vec<AuxRow> = (1..=8)
            .map(|w| AuxRow { stratum: 0, day: w * 7, tests: 400, positives: 20 })
            .collect();
        let config = ChainConfig::new(2, 4_000, 1_500, 4);
        let sm = smooth_prevalence(&rows, &config).unwrap();
        let medians: Vec<f64> = sm.points.iter().map(|p| p.median).collect();
        let spread =
            medians.iter().cloned().fold(f64::MIN, f64::max) - medians.iter().cloned().fold(f64::MAX, f64::min);
        // posterior sd of a single xi under Bin(400, 0.05)
        let sd = (0.05f64 * 0.95 / 400.0).sqrt();
        assert!(spread < 2.0 * sd, "medians vary by {spread} (sd {sd})");
    }

    #[test]
    fn smoother_covers_a_simulated_path() {
        // light calibration check: one simulated random-walk path
        let mut rng = stream_rng(21, 0);
        let sigma = 0.1;
        let mut eta = crate::numerics::logit(0.08);
        let mut rows = Vec::new();
        let mut truth = Vec::new();
        for w in 1..=12 {
            let z: f64 = StandardNormal.sample(&mut rng);
            eta += sigma * z;
            let xi = crate::numerics::logistic(eta);
            truth.push(xi);
            let tests = 600u64;
            // binomial draw via normal approximation is fine for the fixture
            let zz: f64 = StandardNormal.sample(&mut rng);
            let pos = ((tests as f64 * xi) + zz * (tests as f64 * xi * (1.0 - xi)).sqrt())
                .round()
                .clamp(0.0, tests as f64) as u64;
            rows.push(AuxRow { stratum: 0, day: w * 7, tests, positives: pos });
        }
        let config = ChainConfig::new(2, 5_000, 2_000, 8);
        let sm = smooth_prevalence(&rows, &config).unwrap();
        let covered = sm
            .points
            .iter()
            .zip(&truth)
            .filter(|(p, &t)| p.lo <= t && t <= p.hi)
            .count();
        assert!(covered >= 10, "only {covered}/12 weeks covered");
    }
}
