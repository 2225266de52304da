//! What happens when under-reporting is ignored: probability limits of naive
//! Poisson-autoregression estimates applied to thinned data, their derivatives
//! in the reporting probability, closed-form over/under-estimation bounds, and
//! the naive conditional-likelihood fitter itself.
//!
//! Throughout, `mu = nu / (1 - phi)` and `sigma^2 = mu / (1 - phi^2)` are the
//! stationary latent moments, and `phi(pi) = tau~(pi) phi` is the limiting
//! naive autoregressive estimate with
//! `tau~ = pi sigma^2 / (pi sigma^2 + (1 - pi) mu)`.

use crate::moments::{observed_moments_from_latent, sample_moments, stationary_latent_moments};
use crate::simulate::ThinnedArParams;
use crate::{Error, Result};

/// Probability limits of the naive estimators under thinning.
///
/// `phi_lim = tau_tilde * phi` equals the lag-1 autocorrelation of the
/// reported series; `nu_lim = (1 - phi_lim) pi mu` is where any consistent
/// naive estimator of `nu` converges.
#[derive(Debug, Clone, Copy)]
pub struct NaiveLimit {
    pub phi_lim: f64,
    pub nu_lim: f64,
    pub tau_tilde: f64,
}

/// Limiting values of naive `(phi, nu)` estimates for a thinned model.
pub fn naive_limits(params: ThinnedArParams) -> Result<NaiveLimit> {
    let latent = stationary_latent_moments(params.nu, params.phi)?;
    let obs = observed_moments_from_latent(&latent, params.phi, params.pi)?;
    let tau_tilde = 1.0 - (1.0 - params.pi) * obs.mean / obs.variance;
    let phi_lim = obs.acf1; // = tau_tilde * phi
    let nu_lim = (1.0 - phi_lim) * obs.mean;
    Ok(NaiveLimit { phi_lim, nu_lim, tau_tilde })
}

/// Derivatives of the limiting naive estimates with respect to `pi`.
#[derive(Debug, Clone, Copy)]
pub struct LimitDerivatives {
    pub phi_prime: f64,
    pub nu_prime: f64,
}

/// `phi'(pi)` and `nu'(pi)` at the parameter point.
///
/// `phi'(pi) = phi mu sigma^2 / (pi sigma^2 + (1 - pi) mu)^2` and
/// `nu'(pi) = mu (1 - phi(pi)) - pi mu phi'(pi)`, the derivative of
/// `nu(pi) = (1 - phi(pi)) pi mu`.
pub fn derivative_formulas(params: ThinnedArParams) -> Result<LimitDerivatives> {
    let latent = stationary_latent_moments(params.nu, params.phi)?;
    let (mu, var, pi, phi) = (latent.mean, latent.variance, params.pi, params.phi);
    let denom = pi * var + (1.0 - pi) * mu;
    let phi_prime = phi * mu * var / (denom * denom);
    let tau = pi * var / denom;
    let nu_prime = mu * (1.0 - tau * phi) - pi * mu * phi_prime;
    Ok(LimitDerivatives { phi_prime, nu_prime })
}

/// Closed-form bound checks at a `(pi, phi)` point. All quantities here are
/// free of `nu`.
#[derive(Debug, Clone, Copy)]
pub struct PropBounds {
    /// Boundary of the over-estimation region: for `pi < 1`, naive `nu`
    /// overestimates iff `phi` lies strictly above this value, the positive
    /// root of `phi^2 + pi phi - 1`.
    pub prop1_threshold: f64,
    pub overestimates_nu: bool,
    /// Sign of `nu'(pi)` from the quadratic form.
    pub nu_prime_negative: bool,
    /// The two printed variants of the quadratic's constant term disagree here.
    pub quadratic_forms_disagree: bool,
    /// Quadratic sign contradicted the derivative formula (should not happen).
    pub consistency_warning: bool,
}

/// Positive root of `phi^2 + pi phi - 1 = 0`: the `phi` above which the
/// limiting naive `nu` estimate exceeds the truth.
///
/// Derived by expanding `(1 - tau~ phi) pi nu / (1 - phi) > nu` with the
/// stationary moments substituted; equivalently the crossing satisfies
/// `pi = (1 - phi^2) / phi`.
pub fn prop1_overestimation_threshold(pi: f64) -> f64 {
    0.5 * ((pi * pi + 4.0).sqrt() - pi)
}

/// An alternative printed form of the same boundary,
/// `sqrt(1 - 1/((1 - pi) + 1/pi))`, kept for side-by-side comparison: it does
/// not agree with the sign of `nu_lim - nu` (see `prop_bounds`), which is why
/// the root form above is the one used for decisions.
pub fn prop1_printed_threshold(pi: f64) -> f64 {
    (1.0 - 1.0 / ((1.0 - pi) + 1.0 / pi)).max(0.0).sqrt()
}

/// Quadratic form whose sign decides `nu'(pi) < 0`.
///
/// `q(pi, phi; c) = (1-phi) (pi s)^2 + (2 - 2 pi - 2 phi + phi pi) (pi s) + c (1-pi)^2`
/// with `s = 1/(1-phi^2)`. The two printed constants are `c = 1` and `c = 4`;
/// `c = 1` satisfies the identity `q = (nu'(pi)/mu) (pi s + 1 - pi)^2` exactly.
pub fn prop2_quadratic(pi: f64, phi: f64, constant: f64) -> f64 {
    let s = 1.0 / (1.0 - phi * phi);
    let ps = pi * s;
    (1.0 - phi) * ps * ps
        + (2.0 - 2.0 * pi - 2.0 * phi + phi * pi) * ps
        + constant * (1.0 - pi) * (1.0 - pi)
}

/// Evaluate both propositions' bounds at `(pi, phi)`.
///
/// For `pi < 1`, naive `nu` is overestimated in the limit iff `phi` lies above
/// [`prop1_overestimation_threshold`]; at `pi = 1` the naive estimator is
/// consistent and nothing is over- or under-estimated. The sign of `nu'(pi)`
/// is taken from the quadratic with constant 1 (the variant that is an exact
/// algebraic identity for the derivative) and cross-checked against
/// `derivative_formulas`; a disagreement is logged and flagged.
pub fn prop_bounds(pi: f64, phi: f64) -> Result<PropBounds> {
    if !(pi > 0.0 && pi <= 1.0) {
        return Err(Error::Domain(format!("pi = {pi} must lie in (0, 1]")));
    }
    if !(phi > 0.0 && phi < 1.0) {
        return Err(Error::Domain(format!("phi = {phi} must lie in (0, 1)")));
    }
    let prop1_threshold = prop1_overestimation_threshold(pi);
    let overestimates_nu = pi < 1.0 && phi > prop1_threshold;
    let q_unit = prop2_quadratic(pi, phi, 1.0);
    let q_quad = prop2_quadratic(pi, phi, 4.0);
    let nu_prime_negative = q_unit < 0.0;
    let quadratic_forms_disagree = (q_unit < 0.0) != (q_quad < 0.0);
    // nu-free sign cross-check against the derivative formula
    let deriv = derivative_formulas(ThinnedArParams { nu: 1.0, phi, pi })?;
    let consistency_warning = (deriv.nu_prime < 0.0) != nu_prime_negative;
    if consistency_warning {
        log::warn!(
            "prop_bounds internal inconsistency at (pi={pi}, phi={phi}): \
             quadratic sign {nu_prime_negative} vs derivative {}",
            deriv.nu_prime
        );
    }
    Ok(PropBounds {
        prop1_threshold,
        overestimates_nu,
        nu_prime_negative,
        quadratic_forms_disagree,
        consistency_warning,
    })
}

/// Result of the naive conditional Poisson-AR maximum-likelihood fit.
#[derive(Debug, Clone, Copy)]
pub struct NaiveFit {
    pub nu_hat: f64,
    pub phi_hat: f64,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Asymptotic standard errors from the observed information (NaN when the
    /// Hessian is not invertible at the final iterate).
    pub se_nu: f64,
    pub se_phi: f64,
}

/// Maximise the conditional likelihood `prod_t Pois(y_t; nu + phi y_{t-1})`
/// over `nu > 0`, `phi >= 0`.
///
/// Newton iterations on `(ln nu, ln phi)` with step halving; converged when
/// the gradient infinity-norm drops below 1e-8. Estimates pinned at the lower
/// bound (or failing to converge) come back with `converged = false` rather
/// than as an error. Deterministic given `init`.
pub fn naive_pois_ar_mle(y: &[u64], init: Option<(f64, f64)>) -> Result<NaiveFit> {
    if y.len() < 3 {
        return Err(Error::Validation(format!(
            "series of length {} is too short for the naive fit",
            y.len()
        )));
    }
    const LOG_FLOOR: f64 = -15.0;
    const TOL: f64 = 1e-8;
    const MAX_ITER: usize = 200;

    let (nu0, phi0) = match init {
        Some((n, p)) => {
            if !(n > 0.0) || !(p > 0.0) {
                return Err(Error::Domain("naive fit initial values must be positive".into()));
            }
            (n, p)
        }
        None => default_init(y),
    };
    let mut a = nu0.ln();
    let mut b = phi0.ln();
    let mut ll = naive_loglik(y, a.exp(), b.exp());
    let mut converged = false;
    let mut iterations = 0;
    for iter in 0..MAX_ITER {
        iterations = iter + 1;
        let (g, h) = naive_grad_hess_log(y, a.exp(), b.exp());
        if g[0].abs().max(g[1].abs()) < TOL {
            converged = true;
            break;
        }
        // Newton direction; gradient ascent when the Hessian is unusable
        let det = h[0] * h[2] - h[1] * h[1];
        let (mut da, mut db) = if det.abs() > 1e-300 && h[0] < 0.0 && det > 0.0 {
            (
                -(h[2] * g[0] - h[1] * g[1]) / det,
                -(h[0] * g[1] - h[1] * g[0]) / det,
            )
        } else {
            (g[0], g[1])
        };
        // cap the step to keep exp() sane
        let scale = da.abs().max(db.abs());
        if scale > 4.0 {
            da *= 4.0 / scale;
            db *= 4.0 / scale;
        }
        if scale < 1e-3 {
            // near the optimum the likelihood change falls below f64
            // resolution; take the contracting Newton step directly
            a += da;
            b += db;
            ll = naive_loglik(y, a.exp(), b.exp());
        } else {
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let (na, nb) = (a + step * da, b + step * db);
                let cand = naive_loglik(y, na.exp(), nb.exp());
                if cand > ll {
                    a = na;
                    b = nb;
                    ll = cand;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if a < LOG_FLOOR || b < LOG_FLOOR {
            break;
        }
    }
    if a < LOG_FLOOR || b < LOG_FLOOR {
        converged = false;
    }
    let (nu_hat, phi_hat) = (a.exp(), b.exp());
    let (se_nu, se_phi) = natural_scale_se(y, nu_hat, phi_hat);
    Ok(NaiveFit { nu_hat, phi_hat, loglik: ll, converged, iterations, se_nu, se_phi })
}

fn default_init(y: &[u64]) -> (f64, f64) {
    let (mean, acf1) = match sample_moments(y) {
        Ok(m) => (m.mean, m.acf1.clamp(0.05, 0.95)),
        Err(_) => (y.iter().map(|&v| v as f64).sum::<f64>() / y.len() as f64, 0.3),
    };
    let nu0 = (mean * (1.0 - acf1)).max(1e-3);
    (nu0, acf1)
}

fn naive_loglik(y: &[u64], nu: f64, phi: f64) -> f64 {
    let mut ll = 0.0;
    for t in 1..y.len() {
        let lambda = nu + phi * y[t - 1] as f64;
        if lambda <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let yt = y[t] as f64;
        ll += yt * lambda.ln() - lambda - crate::numerics::ln_factorial(y[t]);
    }
    ll
}

/// Gradient and Hessian of the conditional log-likelihood in `(ln nu, ln phi)`.
/// Hessian returned as `[h_aa, h_ab, h_bb]`.
fn naive_grad_hess_log(y: &[u64], nu: f64, phi: f64) -> ([f64; 2], [f64; 3]) {
    let mut g_nu = 0.0;
    let mut g_phi = 0.0;
    let mut h_nn = 0.0;
    let mut h_np = 0.0;
    let mut h_pp = 0.0;
    for t in 1..y.len() {
        let prev = y[t - 1] as f64;
        let lambda = nu + phi * prev;
        let yt = y[t] as f64;
        let resid = yt / lambda - 1.0;
        let curv = -yt / (lambda * lambda);
        g_nu += resid;
        g_phi += prev * resid;
        h_nn += curv;
        h_np += prev * curv;
        h_pp += prev * prev * curv;
    }
    let g = [nu * g_nu, phi * g_phi];
    let h = [
        nu * g_nu + nu * nu * h_nn,
        nu * phi * h_np,
        phi * g_phi + phi * phi * h_pp,
    ];
    (g, h)
}

fn natural_scale_se(y: &[u64], nu: f64, phi: f64) -> (f64, f64) {
    let mut h_nn = 0.0;
    let mut h_np = 0.0;
    let mut h_pp = 0.0;
    for t in 1..y.len() {
        let prev = y[t - 1] as f64;
        let lambda = nu + phi * prev;
        let curv = y[t] as f64 / (lambda * lambda);
        h_nn += curv;
        h_np += prev * curv;
        h_pp += prev * prev * curv;
    }
    let det = h_nn * h_pp - h_np * h_np;
    if det <= 0.0 {
        return (f64::NAN, f64::NAN);
    }
    ((h_pp / det).sqrt(), (h_nn / det).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::simulate_thinned_pois_ar;

    fn params(nu: f64, phi: f64, pi: f64) -> ThinnedArParams {
        ThinnedArParams::new(nu, phi, pi).unwrap()
    }

    #[test]
    fn full_reporting_is_consistent() {
        let lim = naive_limits(params(10.0, 0.4, 1.0)).unwrap();
        assert!((lim.phi_lim - 0.4).abs() < 1e-14);
        assert!((lim.nu_lim - 10.0).abs() < 1e-12);
        assert!((lim.tau_tilde - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reference_point_limits() {
        let lim = naive_limits(params(10.0, 0.4, 0.4)).unwrap();
        assert!((lim.phi_lim - 0.176991).abs() < 1e-6);
        assert!((lim.nu_lim - 5.48673).abs() < 1e-5);
    }

    #[test]
    fn vanishing_phi_mean_thinning() {
        let lim = naive_limits(params(10.0, 1e-9, 0.4)).unwrap();
        assert!((lim.nu_lim - 4.0).abs() < 1e-6);
    }

    #[test]
    fn nonstationary_rejected() {
        assert!(naive_limits(params(10.0, 1.2, 0.4)).is_err());
    }

    #[test]
    fn phi_prime_positive_on_grid() {
        for &phi in &[0.2, 0.5, 0.8] {
            for i in 1..=99 {
                let pi = i as f64 / 100.0;
                let d = derivative_formulas(params(5.0, phi, pi)).unwrap();
                assert!(d.phi_prime > 0.0, "phi'({pi}) at phi={phi}");
            }
        }
    }

    #[test]
    fn phi_prime_matches_finite_difference() {
        let h = 1e-5;
        for &phi in &[0.3, 0.6, 0.8] {
            for &pi in &[0.2, 0.5, 0.9] {
                let d = derivative_formulas(params(5.0, phi, pi)).unwrap();
                let up = naive_limits(params(5.0, phi, pi + h)).unwrap().phi_lim;
                let dn = naive_limits(params(5.0, phi, pi - h)).unwrap().phi_lim;
                let fd = (up - dn) / (2.0 * h);
                assert!(
                    (d.phi_prime - fd).abs() < 1e-6,
                    "phi'={} fd={} at (phi={phi}, pi={pi})",
                    d.phi_prime,
                    fd
                );
            }
        }
    }

    #[test]
    fn nu_prime_matches_finite_difference() {
        let h = 1e-5;
        for &phi in &[0.3, 0.6, 0.8] {
            for &pi in &[0.2, 0.5, 0.9] {
                let d = derivative_formulas(params(5.0, phi, pi)).unwrap();
                let up = naive_limits(params(5.0, phi, pi + h)).unwrap().nu_lim;
                let dn = naive_limits(params(5.0, phi, pi - h)).unwrap().nu_lim;
                let fd = (up - dn) / (2.0 * h);
                assert!(
                    (d.nu_prime - fd).abs() < 1e-5 * fd.abs().max(1.0),
                    "nu'={} fd={} at (phi={phi}, pi={pi})",
                    d.nu_prime,
                    fd
                );
            }
        }
    }

    #[test]
    fn nu_prime_negative_near_full_reporting() {
        let d = derivative_formulas(params(5.0, 0.8, 0.999)).unwrap();
        assert!(d.nu_prime < 0.0, "nu'(pi ~ 1) = {}", d.nu_prime);
    }

    #[test]
    fn prop1_threshold_values() {
        // consistent at full reporting: no over-estimation regardless of phi
        for &phi in &[0.1, 0.618, 0.9] {
            let b = prop_bounds(1.0, phi).unwrap();
            assert!(!b.overestimates_nu);
            let lim = naive_limits(params(7.0, phi, 1.0)).unwrap();
            assert!((lim.nu_lim - 7.0).abs() < 1e-10);
        }
        // boundary at pi = 0.8, cross-checked by the sign change of
        // nu_lim - nu over a phi grid
        let b = prop_bounds(0.8, 0.5).unwrap();
        assert!((b.prop1_threshold - 0.6770330).abs() < 1e-6);
        let just_below = naive_limits(params(7.0, b.prop1_threshold - 1e-4, 0.8)).unwrap();
        let just_above = naive_limits(params(7.0, b.prop1_threshold + 1e-4, 0.8)).unwrap();
        assert!(just_below.nu_lim < 7.0);
        assert!(just_above.nu_lim > 7.0);
        // a point inside the over-estimation region
        let b = prop_bounds(0.9, 0.7).unwrap();
        assert!(b.overestimates_nu);
        let lim = naive_limits(params(7.0, 0.7, 0.9)).unwrap();
        assert!(lim.nu_lim > 7.0);
        // and one outside
        let b = prop_bounds(0.9, 0.3).unwrap();
        assert!(!b.overestimates_nu);
        let lim = naive_limits(params(7.0, 0.3, 0.9)).unwrap();
        assert!(lim.nu_lim < 7.0);
    }

    #[test]
    fn printed_threshold_form_disagrees_with_sign_test() {
        // the alternative printed closed form does not track the actual
        // sign change; keep evidence that the root form is the right one
        let pi = 0.8;
        let printed = prop1_printed_threshold(pi);
        let lim = naive_limits(params(7.0, printed + 1e-3, pi)).unwrap();
        // printed form claims over-estimation ends below this phi, yet the
        // curve still sits under nu here
        assert!(lim.nu_lim < 7.0);
    }

    #[test]
    fn bound_agrees_with_sign_test_on_grid() {
        let nu = 3.7;
        for i in 1..50 {
            for j in 1..50 {
                let pi = i as f64 / 50.0;
                let phi = j as f64 / 50.0;
                let b = prop_bounds(pi, phi).unwrap();
                let lim = naive_limits(params(nu, phi, pi)).unwrap();
                if (lim.nu_lim - nu).abs() > 1e-9 {
                    assert_eq!(
                        b.overestimates_nu,
                        lim.nu_lim > nu,
                        "bound mismatch at (pi={pi}, phi={phi})"
                    );
                }
            }
        }
    }

    #[test]
    fn quadratic_sign_matches_derivative_everywhere() {
        for i in 1..50 {
            for j in 1..50 {
                let pi = i as f64 / 50.0;
                let phi = j as f64 / 50.0;
                let b = prop_bounds(pi, phi).unwrap();
                assert!(!b.consistency_warning, "inconsistency at (pi={pi}, phi={phi})");
            }
        }
    }

    #[test]
    fn nu_limit_scales_linearly_in_nu() {
        let base = naive_limits(params(4.0, 0.6, 0.5)).unwrap();
        let doubled = naive_limits(params(8.0, 0.6, 0.5)).unwrap();
        assert!((doubled.nu_lim - 2.0 * base.nu_lim).abs() < 1e-10);
        assert!((doubled.phi_lim - base.phi_lim).abs() < 1e-14);
    }

    #[test]
    fn mle_recovers_truth_on_fully_reported_data() {
        let p = params(10.0, 0.6, 1.0);
        let sim = simulate_thinned_pois_ar(p, 100_000, 100, 61).unwrap();
        let fit = naive_pois_ar_mle(&sim.y, None).unwrap();
        assert!(fit.converged);
        assert!(
            (fit.nu_hat - 10.0).abs() < 3.0 * fit.se_nu,
            "nu {} +- {}",
            fit.nu_hat,
            fit.se_nu
        );
        assert!(
            (fit.phi_hat - 0.6).abs() < 3.0 * fit.se_phi,
            "phi {} +- {}",
            fit.phi_hat,
            fit.se_phi
        );
    }

    #[test]
    fn mle_on_thinned_data_approaches_naive_limits() {
        let p = params(10.0, 0.8, 0.4);
        let sim = simulate_thinned_pois_ar(p, 200_000, 100, 62).unwrap();
        let fit = naive_pois_ar_mle(&sim.y, None).unwrap();
        let lim = naive_limits(p).unwrap();
        assert!(fit.converged);
        assert!(
            (fit.phi_hat - lim.phi_lim).abs() < 3.0 * fit.se_phi,
            "phi {} vs limit {} (se {})",
            fit.phi_hat,
            lim.phi_lim,
            fit.se_phi
        );
        assert!(
            (fit.nu_hat - lim.nu_lim).abs() < 3.0 * fit.se_nu,
            "nu {} vs limit {} (se {})",
            fit.nu_hat,
            lim.nu_lim,
            fit.se_nu
        );
    }

    #[test]
    fn all_zero_series_is_flagged_not_fatal() {
        let y = vec![0u64; 100];
        let fit = naive_pois_ar_mle(&y, Some((1.0, 0.5))).unwrap();
        assert!(!fit.converged);
        assert!(fit.nu_hat < 1e-3);
    }

    #[test]
    fn deterministic_given_init() {
        let p = params(6.0, 0.5, 0.7);
        let sim = simulate_thinned_pois_ar(p, 5_000, 100, 63).unwrap();
        let a = naive_pois_ar_mle(&sim.y, Some((2.0, 0.3))).unwrap();
        let b = naive_pois_ar_mle(&sim.y, Some((2.0, 0.3))).unwrap();
        assert_eq!(a.nu_hat, b.nu_hat);
        assert_eq!(a.phi_hat, b.phi_hat);
        assert_eq!(a.iterations, b.iterations);
    }
}
