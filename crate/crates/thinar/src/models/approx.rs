//! The normal–normal approximate posterior.
//!
//! Latent counts are replaced by a continuous chain
//! `Z_it | Z_<t ~ N(lambda_it, sd(lambda_it))` with
//! `lambda_it = nu_it + phi_it * sum_j theta_j Z_{i,t-j}`, observed through
//! `Y_it | Z_it ~ N(pi_it Z_it, sqrt(pi_it (1 - pi_it) Z_it))`. The default
//! parametrization is non-centred (`Z = lambda + sd(lambda) z*`,
//! `z* ~ N(0,1)`), which removes the funnel geometry between the latent field
//! and the scale-bearing parameters; the centred variant (latent `Z` directly)
//! is kept for cross-checking the Jacobian bookkeeping.
//!
//! Gradients are analytic, accumulated in reverse through the lag recursion.

use super::layout::{build_layout, LinkId, LinkKind, ParamLayout, SliceKind, ValueTransform};
use super::transform::{stick_breaking, stick_breaking_inverse, stick_breaking_pullback};
use super::{CountFamily, Design, ModelSpec, PriorSpec, ThetaMode, X1Mode};
use crate::data::{AuxPrevalenceBlock, ObservedSeries};
use crate::numerics::{
    binomial_ln_pmf, exponential_ln_pdf, ln_gamma, ln_logistic_jacobian, logistic, logit,
    normal_ln_pdf, std_normal_ln_pdf, trunc_normal_ln_pdf, trunc_normal_median, LN_2PI,
};
use crate::{Error, Result};

/// Hard positivity floor for latent states: any `Z_it <= Z_FLOOR` puts the
/// point in the rejection region (log-density `-inf`).
pub const Z_FLOOR: f64 = 1e-6;

/// Floor on the observation standard deviation `sqrt(pi (1 - pi) Z)`, which
/// otherwise degenerates as `pi -> 1` or `Z -> 0`.
pub const SD_FLOOR: f64 = 1e-3;

const XI_CLAMP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parametrization {
    #[default]
    NonCentred,
    Centred,
}

/// Per-draw latent panels recovered from an unconstrained point; the input to
/// epidemic-curve reconstruction.
#[derive(Debug, Clone)]
pub struct LatentStates {
    /// Conditional means `lambda_it`, `[stratum][t]` (0-based `t`).
    pub lambda: Vec<Vec<f64>>,
    /// Continuous latent states `Z_it`.
    pub z: Vec<Vec<f64>>,
    /// Standardised innovations `z*_it`; zero at a known `t = 1`.
    pub zstar: Vec<Vec<f64>>,
    pub pi: Vec<Vec<f64>>,
    pub nu: Vec<Vec<f64>>,
    pub phi: Vec<Vec<f64>>,
    /// Set when `x_1` is fixed data rather than inferred.
    pub x1_known: Option<f64>,
}

struct Forward {
    theta: Vec<f64>,
    theta_zs: Vec<f64>,
    /// prefix sums of theta, `theta_prefix[m] = sum of first m weights`
    theta_prefix: Vec<f64>,
    nu: Vec<Vec<f64>>,
    phi: Vec<Vec<f64>>,
    pi: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    lam: Vec<Vec<f64>>,
    sd_lat: Vec<Vec<f64>>,
    smix: Vec<Vec<f64>>,
    lam1: Vec<f64>,
    /// log-Jacobian of the stick-breaking block (0 for fixed theta)
    theta_log_jac: f64,
}

/// Compiled approximate model: spec + design + data + parameter layout.
pub struct ApproxModel {
    pub spec: ModelSpec,
    pub design: Design,
    layout: ParamLayout,
    y: Vec<Vec<u64>>,
    aux: Option<AuxPrevalenceBlock>,
    parametrization: Parametrization,
}

impl ApproxModel {
    pub fn new(
        spec: &ModelSpec,
        data: &ObservedSeries,
        aux: Option<AuxPrevalenceBlock>,
    ) -> Result<Self> {
        spec.validate()?;
        if data.strata != spec.strata || data.t_len != spec.t_len {
            return Err(Error::Validation(format!(
                "data shape ({} strata, t_len {}) does not match the spec ({}, {})",
                data.strata, data.t_len, spec.strata, spec.t_len
            )));
        }
        if let Some(aux) = &aux {
            aux.validate(spec.strata, spec.t_len)?;
            if let Some(cfg) = &spec.aux {
                if cfg.window != aux.window || cfg.populations != aux.populations {
                    return Err(Error::Validation(
                        "aux data block disagrees with the spec's aux config".into(),
                    ));
                }
            }
        } else if spec.aux.is_some() {
            return Err(Error::Validation(
                "spec declares an aux block but no survey data was supplied".into(),
            ));
        }
        let design = super::build_design(spec, &data.covariates)?;
        let layout = build_layout(spec, &design, false);
        Ok(ApproxModel {
            spec: spec.clone(),
            design,
            layout,
            y: data.y.clone(),
            aux,
            parametrization: Parametrization::NonCentred,
        })
    }

    pub fn with_parametrization(mut self, p: Parametrization) -> Self {
        self.parametrization = p;
        self.layout = build_layout(&self.spec, &self.design, p == Parametrization::Centred);
        self
    }

    pub fn parametrization(&self) -> Parametrization {
        self.parametrization
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn constrained_names(&self) -> &[String] {
        &self.layout.constrained_names
    }

    fn var_of(&self, lambda: f64) -> f64 {
        self.spec.latent_variance(lambda)
    }

    fn var_prime(&self, lambda: f64) -> f64 {
        match self.spec.count_family {
            CountFamily::Poisson => 1.0,
            CountFamily::NegBin { psi } => 1.0 + 2.0 * lambda / psi,
        }
    }

    /// Forward pass; `None` marks the rejection region.
    fn forward(&self, u: &[f64]) -> Option<Forward> {
        let spec = &self.spec;
        let lay = &self.layout;
        let (s_n, t_n, j_n) = (spec.strata, spec.t_len, spec.serial_len);
        let centred = self.parametrization == Parametrization::Centred;
        let start = lay.latent_start;

        let (theta, theta_zs, theta_log_jac) = match (&spec.theta, lay.theta_slice) {
            (ThetaMode::Fixed { weights }, _) => (weights.clone(), Vec::new(), 0.0),
            (ThetaMode::Estimated, Some(slice)) => {
                let (th, zs, lj) = stick_breaking(lay.values(slice, u));
                (th, zs, lj)
            }
            _ => unreachable!(),
        };
        let mut theta_prefix = vec![0.0; j_n + 1];
        for j in 0..j_n {
            theta_prefix[j + 1] = theta_prefix[j] + theta[j];
        }

        let mut fwd = Forward {
            theta,
            theta_zs,
            theta_prefix,
            nu: Vec::with_capacity(s_n),
            phi: Vec::with_capacity(s_n),
            pi: Vec::with_capacity(s_n),
            z: Vec::with_capacity(s_n),
            lam: Vec::with_capacity(s_n),
            sd_lat: Vec::with_capacity(s_n),
            smix: Vec::with_capacity(s_n),
            lam1: vec![0.0; s_n],
            theta_log_jac,
        };

        for i in 0..s_n {
            let nu_t = self.link_panel(LinkId::Nu, i, u)?;
            let phi_t = self.link_panel(LinkId::Phi, i, u)?;
            let pi_t = self.link_panel(LinkId::Pi, i, u)?;

            let latent = lay.values(lay.latent_slice[i], u);
            let mut z = vec![0.0; t_n];
            let mut lam = vec![0.0; t_n];
            let mut sd_lat = vec![0.0; t_n];
            let mut smix = vec![0.0; t_n];

            match spec.x1 {
                X1Mode::Known { value } => {
                    z[0] = value;
                }
                X1Mode::Prior { .. } => {
                    let slice = lay.lambda1_slice[i].expect("layout");
                    let l1 = lay.values(slice, u)[0].exp();
                    if !l1.is_finite() || l1 <= 0.0 {
                        return None;
                    }
                    fwd.lam1[i] = l1;
                    let sd = self.var_of(l1).sqrt();
                    lam[0] = l1;
                    sd_lat[0] = sd;
                    z[0] = if centred { latent[0] } else { l1 + sd * latent[0] };
                    if !z[0].is_finite() || z[0] <= Z_FLOOR {
                        return None;
                    }
                }
            }

            for tau in 1..t_n {
                let m = tau.min(j_n);
                let mut wsum = 0.0;
                for j in 1..=m {
                    wsum += fwd.theta[j - 1] * z[tau - j];
                }
                let tsum = fwd.theta_prefix[m];
                let s = if tsum > 0.0 { wsum / tsum } else { 0.0 };
                let l = nu_t[tau] + phi_t[tau] * s;
                if !l.is_finite() || l <= 0.0 {
                    return None;
                }
                let sd = self.var_of(l).sqrt();
                smix[tau] = s;
                lam[tau] = l;
                sd_lat[tau] = sd;
                z[tau] = if centred { latent[tau - start] } else { l + sd * latent[tau - start] };
                if !z[tau].is_finite() || z[tau] <= Z_FLOOR {
                    return None;
                }
            }

            fwd.nu.push(nu_t);
            fwd.phi.push(phi_t);
            fwd.pi.push(pi_t);
            fwd.z.push(z);
            fwd.lam.push(lam);
            fwd.sd_lat.push(sd_lat);
            fwd.smix.push(smix);
        }
        Some(fwd)
    }

    /// Materialise one link's per-t parameter values for a stratum.
    fn link_panel(&self, link: LinkId, stratum: usize, u: &[f64]) -> Option<Vec<f64>> {
        let lay = &self.layout;
        let li = link.index();
        let t_n = self.spec.t_len;
        match &lay.link_kind[li] {
            LinkKind::Absent => {
                let fill = if link == LinkId::Pi { 1.0 } else { 0.0 };
                Some(vec![fill; t_n])
            }
            LinkKind::ValueScalar { transform, .. } => {
                let u0 = lay.values(lay.coef_slice[li][stratum], u)[0];
                if !u0.is_finite() {
                    return None;
                }
                let v = match transform {
                    ValueTransform::Logistic => logistic(u0),
                    ValueTransform::Exp => u0.exp(),
                };
                if !v.is_finite() {
                    return None;
                }
                Some(vec![v; t_n])
            }
            LinkKind::Linear => {
                let design = match link {
                    LinkId::Nu => &self.design.nu,
                    LinkId::Phi => &self.design.phi,
                    LinkId::Pi => &self.design.pi,
                };
                let coef = lay.values(lay.coef_slice[li][stratum], u);
                let sigma_eps = lay.sigma_slice[li][stratum].map(|s| {
                    let sigma = lay.values(s, u)[0].exp();
                    let eps = lay.values(lay.eps_slice[li][stratum].expect("layout"), u);
                    (sigma, eps)
                });
                let mut out = Vec::with_capacity(t_n);
                for t in 0..t_n {
                    let mut eta: f64 =
                        design.row(stratum, t).iter().zip(coef).map(|(x, c)| x * c).sum();
                    if let Some((sigma, eps)) = &sigma_eps {
                        eta += sigma * eps[t];
                    }
                    let v = if link == LinkId::Pi { logistic(eta) } else { eta.exp() };
                    if !v.is_finite() {
                        return None;
                    }
                    out.push(v);
                }
                Some(out)
            }
        }
    }

    /// Log-posterior density on the unconstrained scale (priors, Jacobians and
    /// the latent/observation layers included). `-inf` marks the rejection
    /// region and is a legal return, in which case `grad` contents are
    /// meaningless and must be ignored.
    pub fn log_posterior(&self, u: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        debug_assert_eq!(u.len(), self.layout.dim);
        if u.iter().any(|v| !v.is_finite()) {
            return f64::NEG_INFINITY;
        }
        if let Some(g) = grad.as_deref_mut() {
            debug_assert_eq!(g.len(), self.layout.dim);
            g.fill(0.0);
        }
        let Some(fwd) = self.forward(u) else {
            return f64::NEG_INFINITY;
        };

        let spec = &self.spec;
        let lay = &self.layout;
        let centred = self.parametrization == Parametrization::Centred;
        let (s_n, t_n, j_n) = (spec.strata, spec.t_len, spec.serial_len);
        let start = lay.latent_start;
        let want_grad = grad.is_some();

        let mut logp = fwd.theta_log_jac;
        if lay.theta_slice.is_some() {
            // uniform Dirichlet prior normalising constant
            logp += ln_gamma(j_n as f64);
        }

        let mut dtheta = vec![0.0; if lay.theta_slice.is_some() { j_n } else { 0 }];
        let mut dval = [vec![0.0; s_n], vec![0.0; s_n], vec![0.0; s_n]];
        let mut dsigma_lik = [vec![0.0; s_n], vec![0.0; s_n], vec![0.0; s_n]];
        let mut dlam1_lik = vec![0.0; s_n];

        for i in 0..s_n {
            let z = &fwd.z[i];
            let lam = &fwd.lam[i];
            let sd_lat = &fwd.sd_lat[i];
            let smix = &fwd.smix[i];
            let pi_t = &fwd.pi[i];
            let nu_t = &fwd.nu[i];
            let phi_t = &fwd.phi[i];

            let mut dz = vec![0.0; t_n];
            let mut deta = [vec![0.0; t_n], vec![0.0; t_n], vec![0.0; t_n]];

            // observation layer
            for tau in 0..t_n {
                let p = pi_t[tau];
                let mean = p * z[tau];
                let v_raw = p * (1.0 - p) * z[tau];
                let floored = v_raw < SD_FLOOR * SD_FLOOR;
                let sd = if floored { SD_FLOOR } else { v_raw.sqrt() };
                let resid = (self.y[i][tau] as f64 - mean) / sd;
                logp += -0.5 * resid * resid - sd.ln() - 0.5 * LN_2PI;
                if want_grad {
                    let dmean = resid / sd;
                    let dv = if floored { 0.0 } else { (resid * resid - 1.0) / (2.0 * sd * sd) };
                    dz[tau] += dmean * p + dv * p * (1.0 - p);
                    let dpi = dmean * z[tau] + dv * (1.0 - 2.0 * p) * z[tau];
                    match &lay.link_kind[LinkId::Pi.index()] {
                        LinkKind::Absent => {}
                        LinkKind::ValueScalar { .. } => dval[LinkId::Pi.index()][i] += dpi,
                        LinkKind::Linear => deta[LinkId::Pi.index()][tau] += dpi * p * (1.0 - p),
                    }
                }
            }

            // centred z-layer density
            if centred {
                for tau in 0..t_n {
                    if tau == 0 && start == 1 {
                        continue;
                    }
                    let sd = sd_lat[tau];
                    let zres = (z[tau] - lam[tau]) / sd;
                    logp += -0.5 * zres * zres - sd.ln() - 0.5 * LN_2PI;
                }
            }

            // prevalence-survey block
            if let Some(aux) = &self.aux {
                let w = aux.window;
                let pop = aux.populations[i];
                let mut prefix = vec![0.0; t_n + 1];
                for tau in 0..t_n {
                    prefix[tau + 1] = prefix[tau] + z[tau];
                }
                for row in aux.rows.iter().filter(|r| r.stratum == i) {
                    let tau = row.day - 1;
                    let lo = tau + 1 - w.min(tau + 1);
                    let rolled = prefix[tau + 1] - prefix[lo];
                    let xi_raw = rolled / pop;
                    let xi = xi_raw.clamp(XI_CLAMP, 1.0 - XI_CLAMP);
                    logp += binomial_ln_pmf(row.positives, row.tests, xi);
                    if want_grad && xi_raw > XI_CLAMP && xi_raw < 1.0 - XI_CLAMP {
                        let dxi = row.positives as f64 / xi
                            - (row.tests - row.positives) as f64 / (1.0 - xi);
                        let dwindow = dxi / pop;
                        for t in lo..=tau {
                            dz[t] += dwindow;
                        }
                    }
                }
            }

            // backward through the lag recursion
            let latent = lay.values(lay.latent_slice[i], u);
            let latent_off = lay.slice(lay.latent_slice[i]).offset;
            for tau in (0..t_n).rev() {
                if tau == 0 {
                    match spec.x1 {
                        X1Mode::Known { .. } => {}
                        X1Mode::Prior { .. } => {
                            if centred {
                                let sd = sd_lat[0];
                                let zres = (z[0] - lam[0]) / sd;
                                if want_grad {
                                    let g = grad.as_deref_mut().unwrap();
                                    // own z-layer term + accumulated dz
                                    g[latent_off] += dz[0] - zres / sd;
                                    let dsd = self.var_prime(lam[0]) / (2.0 * sd);
                                    dlam1_lik[i] +=
                                        zres / sd + (zres * zres - 1.0) / sd * dsd;
                                }
                            } else if want_grad {
                                let g = grad.as_deref_mut().unwrap();
                                let dsd = self.var_prime(lam[0]) / (2.0 * sd_lat[0]);
                                g[latent_off] += dz[0] * sd_lat[0];
                                dlam1_lik[i] += dz[0] * (1.0 + latent[0] * dsd);
                            }
                        }
                    }
                    continue;
                }
                let m = tau.min(j_n);
                let tsum = fwd.theta_prefix[m];
                let glam = if centred {
                    let sd = sd_lat[tau];
                    let zres = (z[tau] - lam[tau]) / sd;
                    if want_grad {
                        let g = grad.as_deref_mut().unwrap();
                        g[latent_off + tau - start] += dz[tau] - zres / sd;
                    }
                    let dsd = self.var_prime(lam[tau]) / (2.0 * sd);
                    // direct d/d lambda of the z-layer term
                    zres / sd + (zres * zres - 1.0) / sd * dsd
                } else {
                    let zs = latent[tau - start];
                    let dsd = self.var_prime(lam[tau]) / (2.0 * sd_lat[tau]);
                    if want_grad {
                        let g = grad.as_deref_mut().unwrap();
                        g[latent_off + tau - start] += dz[tau] * sd_lat[tau];
                    }
                    dz[tau] * (1.0 + zs * dsd)
                };
                if !want_grad {
                    continue;
                }
                match &lay.link_kind[LinkId::Nu.index()] {
                    LinkKind::Absent => {}
                    LinkKind::ValueScalar { .. } => dval[LinkId::Nu.index()][i] += glam,
                    LinkKind::Linear => deta[LinkId::Nu.index()][tau] += glam * nu_t[tau],
                }
                match &lay.link_kind[LinkId::Phi.index()] {
                    LinkKind::Absent => {}
                    LinkKind::ValueScalar { .. } => {
                        dval[LinkId::Phi.index()][i] += glam * smix[tau]
                    }
                    LinkKind::Linear => {
                        deta[LinkId::Phi.index()][tau] += glam * smix[tau] * phi_t[tau]
                    }
                }
                let gphi = glam * phi_t[tau];
                for j in 1..=m {
                    dz[tau - j] += gphi * fwd.theta[j - 1] / tsum;
                    if lay.theta_slice.is_some() {
                        dtheta[j - 1] += gphi * (z[tau - j] - smix[tau]) / tsum;
                    }
                }
            }

            // centred dz for tau = 0 handled above; in centred mode the
            // accumulated dz for stochastic tau was already written into grad.

            // linear-link coefficient, eps and sigma chains
            if want_grad {
                let g = grad.as_deref_mut().unwrap();
                for link in LinkId::ALL {
                    let li = link.index();
                    if !matches!(lay.link_kind[li], LinkKind::Linear) {
                        continue;
                    }
                    let design = match link {
                        LinkId::Nu => &self.design.nu,
                        LinkId::Phi => &self.design.phi,
                        LinkId::Pi => &self.design.pi,
                    };
                    let coef_off = lay.slice(lay.coef_slice[li][i]).offset;
                    for tau in 0..t_n {
                        let d = deta[li][tau];
                        if d == 0.0 {
                            continue;
                        }
                        for (c, x) in design.row(i, tau).iter().enumerate() {
                            g[coef_off + c] += d * x;
                        }
                    }
                    if let Some(sig_slice) = lay.sigma_slice[li][i] {
                        let sigma = lay.values(sig_slice, u)[0].exp();
                        let eps_slice = lay.eps_slice[li][i].expect("layout");
                        let eps_off = lay.slice(eps_slice).offset;
                        let eps = lay.values(eps_slice, u);
                        let mut dsig = 0.0;
                        for tau in 0..t_n {
                            g[eps_off + tau] += deta[li][tau] * sigma;
                            dsig += deta[li][tau] * eps[tau];
                        }
                        dsigma_lik[li][i] += dsig;
                    }
                }
            }
        }

        // priors, value transforms and their Jacobians
        for (idx, slice) in lay.slices.iter().enumerate() {
            match &slice.kind {
                SliceKind::Coef { link, stratum } => {
                    let li = link.index();
                    match &lay.link_kind[li] {
                        LinkKind::ValueScalar { prior, transform } => {
                            let u0 = u[slice.offset];
                            let (val, dval_du, djac_du, jac) = match transform {
                                ValueTransform::Logistic => {
                                    let v = logistic(u0);
                                    (v, v * (1.0 - v), 1.0 - 2.0 * v, ln_logistic_jacobian(u0))
                                }
                                ValueTransform::Exp => {
                                    let v = u0.exp();
                                    (v, v, 1.0, u0)
                                }
                            };
                            logp += prior_ln_pdf(prior, val) + jac;
                            if let Some(g) = grad.as_deref_mut() {
                                g[slice.offset] += (dval[li][*stratum] + prior_dlnpdf(prior, val))
                                    * dval_du
                                    + djac_du;
                            }
                        }
                        LinkKind::Linear => {
                            for (c, prior) in lay.coef_priors[li].iter().enumerate() {
                                let uc = u[slice.offset + c];
                                logp += prior_ln_pdf(prior, uc);
                                if let Some(g) = grad.as_deref_mut() {
                                    g[slice.offset + c] += prior_dlnpdf(prior, uc);
                                }
                            }
                        }
                        LinkKind::Absent => unreachable!(),
                    }
                }
                SliceKind::Sigma { link, stratum } => {
                    let li = link.index();
                    let prior = lay.sigma_priors[li].as_ref().expect("layout");
                    let sigma = u[slice.offset].exp();
                    logp += prior_ln_pdf(prior, sigma) + u[slice.offset];
                    if let Some(g) = grad.as_deref_mut() {
                        g[slice.offset] +=
                            (dsigma_lik[li][*stratum] + prior_dlnpdf(prior, sigma)) * sigma + 1.0;
                    }
                }
                SliceKind::Theta => {
                    if let Some(g) = grad.as_deref_mut() {
                        let off = slice.offset;
                        stick_breaking_pullback(
                            &dtheta,
                            &fwd.theta_zs,
                            &mut g[off..off + slice.len],
                        );
                    }
                }
                SliceKind::Lambda1 { stratum } => {
                    let (mean, sd) = match spec.x1 {
                        X1Mode::Prior { mean, sd } => (mean, sd),
                        X1Mode::Known { .. } => unreachable!(),
                    };
                    let l1 = fwd.lam1[*stratum];
                    logp += trunc_normal_ln_pdf(l1, mean, sd, 0.0, f64::INFINITY)
                        + u[slice.offset];
                    if let Some(g) = grad.as_deref_mut() {
                        g[slice.offset] +=
                            (dlam1_lik[*stratum] - (l1 - mean) / (sd * sd)) * l1 + 1.0;
                    }
                }
                SliceKind::Latent { .. } => {
                    if !centred {
                        let vals = lay.values(idx, u);
                        for (k, &zv) in vals.iter().enumerate() {
                            logp += std_normal_ln_pdf(zv);
                            if let Some(g) = grad.as_deref_mut() {
                                g[slice.offset + k] += -zv;
                            }
                        }
                    }
                }
                SliceKind::Eps { .. } => {
                    let vals = lay.values(idx, u);
                    for (k, &ev) in vals.iter().enumerate() {
                        logp += std_normal_ln_pdf(ev);
                        if let Some(g) = grad.as_deref_mut() {
                            g[slice.offset + k] += -ev;
                        }
                    }
                }
            }
        }
        logp
    }

    /// Constrained parameter values (aligned with [`Self::constrained_names`])
    /// plus the total log-Jacobian of the change of variables.
    pub fn transform_params(&self, u: &[f64]) -> Result<(Vec<f64>, f64)> {
        if u.len() != self.layout.dim {
            return Err(Error::Validation(format!(
                "parameter vector has length {}, expected {}",
                u.len(),
                self.layout.dim
            )));
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite unconstrained parameter".into()));
        }
        let lay = &self.layout;
        let mut out = Vec::with_capacity(lay.constrained_dim);
        let mut log_jac = 0.0;
        for (idx, slice) in lay.slices.iter().enumerate() {
            let vals = lay.values(idx, u);
            match &slice.kind {
                SliceKind::Coef { link, .. } => match &lay.link_kind[link.index()] {
                    LinkKind::ValueScalar { transform, .. } => {
                        let u0 = vals[0];
                        match transform {
                            ValueTransform::Logistic => {
                                let v = logistic(u0);
                                log_jac += ln_logistic_jacobian(u0);
                                out.push(v);
                            }
                            ValueTransform::Exp => {
                                log_jac += u0;
                                out.push(u0.exp());
                            }
                        }
                    }
                    _ => out.extend_from_slice(vals),
                },
                SliceKind::Sigma { .. } => {
                    log_jac += vals[0];
                    out.push(vals[0].exp());
                }
                SliceKind::Theta => {
                    let (theta, _, lj) = stick_breaking(vals);
                    log_jac += lj;
                    out.extend_from_slice(&theta);
                }
                SliceKind::Lambda1 { .. } => {
                    log_jac += vals[0];
                    out.push(vals[0].exp());
                }
                SliceKind::Latent { .. } | SliceKind::Eps { .. } => out.extend_from_slice(vals),
            }
        }
        Ok((out, log_jac))
    }

    /// Inverse of [`Self::transform_params`] (constrained -> unconstrained).
    pub fn untransform_params(&self, constrained: &[f64]) -> Result<Vec<f64>> {
        let lay = &self.layout;
        if constrained.len() != lay.constrained_dim {
            return Err(Error::Validation(format!(
                "constrained vector has length {}, expected {}",
                constrained.len(),
                lay.constrained_dim
            )));
        }
        let mut u = vec![0.0; lay.dim];
        let mut pos = 0usize;
        for slice in &lay.slices {
            match &slice.kind {
                SliceKind::Coef { link, .. } => match &lay.link_kind[link.index()] {
                    LinkKind::ValueScalar { transform, .. } => {
                        let v = constrained[pos];
                        pos += 1;
                        u[slice.offset] = match transform {
                            ValueTransform::Logistic => logit(v),
                            ValueTransform::Exp => v.ln(),
                        };
                    }
                    _ => {
                        u[slice.offset..slice.offset + slice.len]
                            .copy_from_slice(&constrained[pos..pos + slice.len]);
                        pos += slice.len;
                    }
                },
                SliceKind::Sigma { .. } | SliceKind::Lambda1 { .. } => {
                    u[slice.offset] = constrained[pos].ln();
                    pos += 1;
                }
                SliceKind::Theta => {
                    let k = slice.len + 1;
                    let back = stick_breaking_inverse(&constrained[pos..pos + k]);
                    u[slice.offset..slice.offset + slice.len].copy_from_slice(&back);
                    pos += k;
                }
                SliceKind::Latent { .. } | SliceKind::Eps { .. } => {
                    u[slice.offset..slice.offset + slice.len]
                        .copy_from_slice(&constrained[pos..pos + slice.len]);
                    pos += slice.len;
                }
            }
        }
        Ok(u)
    }

    /// Latent panels at an unconstrained point (for reconstruction and
    /// component summaries).
    pub fn latent_states(&self, u: &[f64]) -> Result<LatentStates> {
        let fwd = self
            .forward(u)
            .ok_or_else(|| Error::Domain("point lies in the rejection region".into()))?;
        let lay = &self.layout;
        let start = lay.latent_start;
        let t_n = self.spec.t_len;
        let centred = self.parametrization == Parametrization::Centred;
        let mut zstar = Vec::with_capacity(self.spec.strata);
        for i in 0..self.spec.strata {
            let latent = lay.values(lay.latent_slice[i], u);
            let mut zs = vec![0.0; t_n];
            for tau in start..t_n {
                zs[tau] = if centred {
                    (fwd.z[i][tau] - fwd.lam[i][tau]) / fwd.sd_lat[i][tau]
                } else {
                    latent[tau - start]
                };
            }
            zstar.push(zs);
        }
        Ok(LatentStates {
            lambda: fwd.lam,
            z: fwd.z,
            zstar,
            pi: fwd.pi,
            nu: fwd.nu,
            phi: fwd.phi,
            x1_known: match self.spec.x1 {
                X1Mode::Known { value } => Some(value),
                X1Mode::Prior { .. } => None,
            },
        })
    }

    /// A deterministic, finite starting point: prior centres for scalar
    /// parameters, data-scaled intercepts for linear links, zero innovations.
    /// Samplers jitter around it.
    pub fn initial_point(&self) -> Vec<f64> {
        let lay = &self.layout;
        let mut u = vec![0.0; lay.dim];
        for slice in &lay.slices {
            match &slice.kind {
                SliceKind::Coef { link, stratum } => {
                    if let LinkKind::ValueScalar { prior, transform } =
                        &lay.link_kind[link.index()]
                    {
                        let center = prior_center(prior, *transform);
                        u[slice.offset] = match transform {
                            ValueTransform::Logistic => logit(center.clamp(0.01, 0.99)),
                            ValueTransform::Exp => center.max(1e-3).ln(),
                        };
                    } else if matches!(lay.link_kind[link.index()], LinkKind::Linear) {
                        // a data-scaled intercept keeps the first forward pass
                        // within a few e-folds of the observations
                        let design = match link {
                            LinkId::Nu => &self.design.nu,
                            LinkId::Phi => &self.design.phi,
                            LinkId::Pi => &self.design.pi,
                        };
                        if let Some(c) = design.col_names.iter().position(|n| n == "intercept") {
                            let mean_y = self.y[*stratum]
                                .iter()
                                .map(|&v| v as f64)
                                .sum::<f64>()
                                / self.y[*stratum].len().max(1) as f64;
                            u[slice.offset + c] = match link {
                                LinkId::Nu => mean_y.max(0.5).ln(),
                                LinkId::Phi => 0.6f64.ln(),
                                LinkId::Pi => 0.0,
                            };
                        }
                    }
                }
                SliceKind::Sigma { link, .. } => {
                    let prior = lay.sigma_priors[link.index()].as_ref().expect("layout");
                    let med = match prior {
                        PriorSpec::Exponential { rate } => std::f64::consts::LN_2 / rate,
                        PriorSpec::Normal { mean, sd } | PriorSpec::NormalPos { mean, sd } => {
                            trunc_normal_median(*mean, *sd, 0.0, f64::INFINITY)
                        }
                        PriorSpec::NormalUnit { mean, sd } => {
                            trunc_normal_median(*mean, *sd, 0.0, 1.0)
                        }
                    };
                    u[slice.offset] = med.max(1e-3).ln();
                }
                SliceKind::Lambda1 { .. } => {
                    if let X1Mode::Prior { mean, sd } = self.spec.x1 {
                        u[slice.offset] = trunc_normal_median(mean, sd, 0.0, f64::INFINITY)
                            .max(1e-3)
                            .ln();
                    }
                }
                _ => {}
            }
        }
        if self.parametrization == Parametrization::Centred {
            // replay the zero-innovation recursion to place the latent field
            let nc = ApproxModel {
                spec: self.spec.clone(),
                design: self.design.clone(),
                layout: build_layout(&self.spec, &self.design, false),
                y: self.y.clone(),
                aux: self.aux.clone(),
                parametrization: Parametrization::NonCentred,
            };
            let mut u_nc = vec![0.0; nc.layout.dim];
            for slice in &nc.layout.slices {
                if let Some(src) = lay.slices.iter().find(|s| s.name == slice.name) {
                    let n = slice.len.min(src.len);
                    for k in 0..n {
                        u_nc[slice.offset + k] = u[src.offset + k];
                    }
                }
            }
            if let Some(fwd) = nc.forward(&u_nc) {
                for i in 0..self.spec.strata {
                    let off = lay.slice(lay.latent_slice[i]).offset;
                    for tau in lay.latent_start..self.spec.t_len {
                        u[off + tau - lay.latent_start] = fwd.z[i][tau];
                    }
                }
            }
        }
        u
    }
}

fn prior_ln_pdf(prior: &PriorSpec, x: f64) -> f64 {
    match *prior {
        PriorSpec::Normal { mean, sd } => normal_ln_pdf(x, mean, sd),
        PriorSpec::NormalPos { mean, sd } => trunc_normal_ln_pdf(x, mean, sd, 0.0, f64::INFINITY),
        PriorSpec::NormalUnit { mean, sd } => trunc_normal_ln_pdf(x, mean, sd, 0.0, 1.0),
        PriorSpec::Exponential { rate } => exponential_ln_pdf(x, rate),
    }
}

fn prior_dlnpdf(prior: &PriorSpec, x: f64) -> f64 {
    match *prior {
        PriorSpec::Normal { mean, sd }
        | PriorSpec::NormalPos { mean, sd }
        | PriorSpec::NormalUnit { mean, sd } => -(x - mean) / (sd * sd),
        PriorSpec::Exponential { rate } => -rate,
    }
}

fn prior_center(prior: &PriorSpec, transform: ValueTransform) -> f64 {
    match *prior {
        PriorSpec::Normal { mean, .. } => match transform {
            ValueTransform::Logistic => mean.clamp(0.05, 0.95),
            ValueTransform::Exp => mean.max(0.1),
        },
        PriorSpec::NormalPos { mean, sd } => trunc_normal_median(mean, sd, 0.0, f64::INFINITY),
        PriorSpec::NormalUnit { mean, sd } => trunc_normal_median(mean, sd, 0.0, 1.0),
        PriorSpec::Exponential { rate } => std::f64::consts::LN_2 / rate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{AuxConfig, LinkBlock, LinkTerm, PriorTarget};
    use crate::data::AuxRow;
    use crate::simulate::{simulate_thinned_pois_ar, ThinnedArParams};
    use std::collections::BTreeMap;

    fn splitmix_unit(state: &mut u64) -> f64 {
        *state = state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = *state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64
    }

    fn canonical_model(t_len: usize, seed: u64) -> (ApproxModel, Vec<u64>) {
        let params = ThinnedArParams::new(10.0, 0.6, 0.6).unwrap();
        let sim = simulate_thinned_pois_ar(params, t_len, 100, seed).unwrap();
        let spec = ModelSpec::canonical(t_len, sim.x[0] as f64);
        let data = ObservedSeries::univariate(sim.y.clone()).unwrap();
        (ApproxModel::new(&spec, &data, None).unwrap(), sim.y)
    }

    fn normal01() -> PriorSpec {
        PriorSpec::Normal { mean: 0.0, sd: 1.0 }
    }

    /// Exercises every term type: multivariate, estimated theta, random
    /// intercepts, covariates, aux block, free initial condition.
    fn kitchen_sink_model(family: CountFamily) -> ApproxModel {
        let t_len = 24;
        let strata = 2;
        let spec = ModelSpec {
            strata,
            t_len,
            serial_len: 3,
            count_family: family,
            nu_link: LinkBlock {
                terms: vec![
                    LinkTerm::Intercept { prior: normal01(), on: PriorTarget::Coef },
                    LinkTerm::Fourier { period: 13.0, prior: normal01() },
                ],
            },
            phi_link: LinkBlock {
                terms: vec![
                    LinkTerm::Intercept { prior: normal01(), on: PriorTarget::Coef },
                    LinkTerm::Bspline { df: 5, prior: normal01() },
                    LinkTerm::RandomIntercept {
                        scale_prior: PriorSpec::Exponential { rate: 1.0 },
                    },
                ],
            },
            pi_link: LinkBlock {
                terms: vec![
                    LinkTerm::Dow { prior: normal01() },
                    LinkTerm::Covariate { name: "w".into(), prior: normal01() },
                    LinkTerm::RandomIntercept {
                        scale_prior: PriorSpec::Exponential { rate: 2.0 },
                    },
                ],
            },
            theta: ThetaMode::Estimated,
            x1: X1Mode::Prior { mean: 30.0, sd: 10.0 },
            aux: Some(AuxConfig { populations: vec![5.0e4, 6.0e4], window: 5 }),
        };
        let mut cov = BTreeMap::new();
        let mut state = 7u64;
        cov.insert(
            "w".to_string(),
            (0..strata)
                .map(|_| (0..t_len).map(|_| splitmix_unit(&mut state) - 0.5).collect())
                .collect(),
        );
        let y: Vec<Vec<u64>> = (0..strata)
            .map(|i| (0..t_len).map(|t| 12 + ((t * (i + 2) + 3 * i) % 9) as u64).collect())
            .collect();
        let data = ObservedSeries::new(y, cov).unwrap();
        let aux = AuxPrevalenceBlock {
            rows: vec![
                AuxRow { stratum: 0, day: 7, tests: 400, positives: 9 },
                AuxRow { stratum: 0, day: 14, tests: 380, positives: 12 },
                AuxRow { stratum: 1, day: 10, tests: 500, positives: 7 },
                AuxRow { stratum: 1, day: 21, tests: 450, positives: 15 },
            ],
            populations: vec![5.0e4, 6.0e4],
            window: 5,
        };
        ApproxModel::new(&spec, &data, Some(aux)).unwrap()
    }

    fn finite_jittered_point(model: &ApproxModel, scale: f64, seed: u64) -> Vec<f64> {
        let mut state = seed;
        loop {
            let mut u = model.initial_point();
            for v in u.iter_mut() {
                *v += scale * (splitmix_unit(&mut state) - 0.5) * 2.0;
            }
            if model.log_posterior(&u, None).is_finite() {
                return u;
            }
        }
    }

    fn check_gradient(model: &ApproxModel, u: &[f64], tol: f64) {
        let mut grad = vec![0.0; model.dim()];
        let base = model.log_posterior(u, Some(&mut grad));
        assert!(base.is_finite());
        let h = 1e-5;
        for k in 0..model.dim() {
            let mut up = u.to_vec();
            up[k] += h;
            let mut dn = u.to_vec();
            dn[k] -= h;
            let (fp, fm) = (model.log_posterior(&up, None), model.log_posterior(&dn, None));
            assert!(fp.is_finite() && fm.is_finite(), "FD stencil left the support at {k}");
            let fd = (fp - fm) / (2.0 * h);
            let denom = grad[k].abs().max(fd.abs()).max(1.0);
            assert!(
                (grad[k] - fd).abs() <= tol * denom,
                "coord {k} ({}): analytic {} vs fd {}",
                model.layout.slices.iter().find(|s| {
                    (s.offset..s.offset + s.len).contains(&k)
                }).map(|s| s.name.as_str()).unwrap_or("?"),
                grad[k],
                fd
            );
        }
    }

    #[test]
    fn canonical_gradient_matches_finite_differences() {
        let (model, _) = canonical_model(50, 11);
        for rep in 0..20 {
            let u = finite_jittered_point(&model, 0.25, 1000 + rep);
            check_gradient(&model, &u, 1e-5);
        }
    }

    #[test]
    fn kitchen_sink_gradient_poisson() {
        let model = kitchen_sink_model(CountFamily::Poisson);
        for rep in 0..5 {
            let u = finite_jittered_point(&model, 0.15, 33 + rep);
            check_gradient(&model, &u, 2e-5);
        }
    }

    #[test]
    fn kitchen_sink_gradient_negbin() {
        let model = kitchen_sink_model(CountFamily::NegBin { psi: 7.5 });
        for rep in 0..3 {
            let u = finite_jittered_point(&model, 0.15, 77 + rep);
            check_gradient(&model, &u, 2e-5);
        }
    }

    #[test]
    fn centred_gradient_matches_finite_differences() {
        let (model, _) = canonical_model(30, 12);
        let model = model.with_parametrization(Parametrization::Centred);
        for rep in 0..5 {
            let u = finite_jittered_point(&model, 0.2, 4000 + rep);
            check_gradient(&model, &u, 2e-5);
        }
    }

    #[test]
    fn single_point_hand_evaluation() {
        // one time point, lambda_1 = 100, pi = 0.5, z* = 0, y = 50:
        // the likelihood contributes N(50; 50, 5) and N(0; 0, 1)
        let spec = ModelSpec {
            strata: 1,
            t_len: 1,
            serial_len: 1,
            count_family: CountFamily::Poisson,
            nu_link: LinkBlock::empty(),
            phi_link: LinkBlock::scalar_value(PriorSpec::NormalUnit { mean: 0.6, sd: 0.3 }),
            pi_link: LinkBlock::scalar_value(PriorSpec::NormalUnit { mean: 0.5, sd: 10.0 }),
            theta: ThetaMode::Fixed { weights: vec![1.0] },
            x1: X1Mode::Prior { mean: 100.0, sd: 10.0 },
            aux: None,
        };
        let data = ObservedSeries::univariate(vec![50]).unwrap();
        let model = ApproxModel::new(&spec, &data, None).unwrap();
        let lay = model.layout();
        let mut u = vec![0.0; model.dim()];
        // phi at its prior centre, pi = 0.5 (logit 0), lambda1 = 100, z* = 0
        let phi_slice = lay.coef_slice[LinkId::Phi.index()][0];
        u[lay.slice(phi_slice).offset] = logit(0.6);
        let l1_slice = lay.lambda1_slice[0].unwrap();
        u[lay.slice(l1_slice).offset] = 100.0f64.ln();
        let logp = model.log_posterior(&u, None);
        // subtract the prior/Jacobian bookkeeping to isolate the likelihood
        let prior_terms = trunc_normal_ln_pdf(0.6, 0.6, 0.3, 0.0, 1.0)
            + (0.6f64 * 0.4).ln()
            + trunc_normal_ln_pdf(0.5, 0.5, 10.0, 0.0, 1.0)
            + (0.25f64).ln()
            + trunc_normal_ln_pdf(100.0, 100.0, 10.0, 0.0, f64::INFINITY)
            + 100.0f64.ln();
        let expected = normal_ln_pdf(50.0, 50.0, 5.0) + std_normal_ln_pdf(0.0);
        assert!(
            (logp - prior_terms - expected).abs() < 1e-10,
            "likelihood part {} vs {expected}",
            logp - prior_terms
        );
    }

    #[test]
    fn degenerate_thinning_keeps_logp_finite() {
        // pi -> 1: observation sd floors instead of collapsing
        let (model, y) = canonical_model(20, 13);
        let lay = model.layout();
        let mut u = model.initial_point();
        let pi_slice = lay.coef_slice[LinkId::Pi.index()][0];
        u[lay.slice(pi_slice).offset] = 40.0; // logistic(40) == 1.0 in f64
        // move the latent field onto the data so the floored sd is harmless
        let nu_slice = lay.coef_slice[LinkId::Nu.index()][0];
        let phi_slice = lay.coef_slice[LinkId::Phi.index()][0];
        u[lay.slice(nu_slice).offset] = (y[0] as f64).max(1.0).ln();
        u[lay.slice(phi_slice).offset] = logit(0.05);
        let logp = model.log_posterior(&u, None);
        assert!(logp.is_finite());
    }

    #[test]
    fn rejection_region_returns_neg_infinity() {
        let (model, _) = canonical_model(20, 14);
        let lay = model.layout();
        let mut u = model.initial_point();
        // a hugely negative innovation drives Z below the floor
        let latent = lay.latent_slice[0];
        u[lay.slice(latent).offset] = -60.0;
        assert_eq!(model.log_posterior(&u, None), f64::NEG_INFINITY);
        // non-finite input is rejected, not propagated
        u[0] = f64::NAN;
        assert_eq!(model.log_posterior(&u, None), f64::NEG_INFINITY);
    }

    #[test]
    fn centred_and_noncentred_agree_up_to_jacobian() {
        let (model_nc, _) = canonical_model(40, 15);
        let (model_c, _) = canonical_model(40, 15);
        let model_c = model_c.with_parametrization(Parametrization::Centred);
        let u_nc = finite_jittered_point(&model_nc, 0.3, 5001);
        let states = model_nc.latent_states(&u_nc).unwrap();
        // same constrained point, centred coordinates
        let mut u_c = u_nc.clone();
        let lat_nc = model_nc.layout().latent_slice[0];
        let off = model_nc.layout().slice(lat_nc).offset;
        let start = model_nc.layout().latent_start;
        let mut log_sd_sum = 0.0;
        for tau in start..40 {
            u_c[off + tau - start] = states.z[0][tau];
            log_sd_sum += states.lambda[0][tau].sqrt().ln();
        }
        let lp_nc = model_nc.log_posterior(&u_nc, None);
        let lp_c = model_c.log_posterior(&u_c, None);
        assert!(
            (lp_c - (lp_nc - log_sd_sum)).abs() < 1e-10,
            "centred {lp_c} vs non-centred {lp_nc} - {log_sd_sum}"
        );
    }

    #[test]
    fn transform_round_trip_and_zero_point() {
        let model = kitchen_sink_model(CountFamily::Poisson);
        let mut state = 99u64;
        for _ in 0..100 {
            let u: Vec<f64> =
                (0..model.dim()).map(|_| 2.0 * (splitmix_unit(&mut state) - 0.5)).collect();
            let (constrained, _) = model.transform_params(&u).unwrap();
            let back = model.untransform_params(&constrained).unwrap();
            for (a, b) in u.iter().zip(&back) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        // zero vector: logistic terms at 0.5, exp terms at 1, theta uniform
        let (model_canon, _) = canonical_model(10, 16);
        let zeros = vec![0.0; model_canon.dim()];
        let (constrained, _) = model_canon.transform_params(&zeros).unwrap();
        let names = model_canon.constrained_names();
        for (name, v) in names.iter().zip(&constrained) {
            match name.as_str() {
                "pi" | "phi" => assert_eq!(*v, 0.5),
                "nu" => assert_eq!(*v, 1.0),
                _ => {}
            }
        }
        let mut sink_spec = kitchen_sink_model(CountFamily::Poisson);
        let zeros = vec![0.0; sink_spec.dim()];
        let (constrained, _) = sink_spec.transform_params(&zeros).unwrap();
        let names: Vec<String> = sink_spec.constrained_names().to_vec();
        for (name, v) in names.iter().zip(&constrained) {
            if name.starts_with("theta") {
                assert!((v - 1.0 / 3.0).abs() < 1e-12, "{name} = {v}");
            }
            if name.starts_with("sigma") {
                assert_eq!(*v, 1.0);
            }
        }
        let _ = &mut sink_spec;
    }

    #[test]
    fn exp_transform_jacobian_value() {
        // log-Jacobian of a single exp transform at u = 2 is 2
        let spec = ModelSpec::canonical(5, 4.0);
        let data = ObservedSeries::univariate(vec![2, 3, 1, 4, 2]).unwrap();
        let model = ApproxModel::new(&spec, &data, None).unwrap();
        let lay = model.layout();
        let mut u = vec![0.0; model.dim()];
        let nu_slice = lay.coef_slice[LinkId::Nu.index()][0];
        u[lay.slice(nu_slice).offset] = 2.0;
        let (_, jac) = model.transform_params(&u).unwrap();
        // remaining transforms sit at 0: two logistic Jacobians ln(1/4)
        let expected = 2.0 + 2.0 * 0.25f64.ln();
        assert!((jac - expected).abs() < 1e-12);
    }

    #[test]
    fn aux_block_difference_is_exactly_the_binomial_terms() {
        let with_aux = kitchen_sink_model(CountFamily::Poisson);
        let mut spec = with_aux.spec.clone();
        spec.aux = None;
        let data = ObservedSeries::new(
            with_aux.y.clone(),
            {
                // reuse the same covariates
                let mut m = BTreeMap::new();
                m.insert("w".to_string(), vec![
                    with_aux.design.pi.rows[0]
                        .chunks(with_aux.design.pi.n_cols)
                        .map(|r| r[7])
                        .collect::<Vec<f64>>(),
                    with_aux.design.pi.rows[1]
                        .chunks(with_aux.design.pi.n_cols)
                        .map(|r| r[7])
                        .collect::<Vec<f64>>(),
                ]);
                m
            },
        )
        .unwrap();
        let without_aux = ApproxModel::new(&spec, &data, None).unwrap();
        let u = finite_jittered_point(&with_aux, 0.1, 600);
        let lp_with = with_aux.log_posterior(&u, None);
        let lp_without = without_aux.log_posterior(&u, None);
        // recompute the binomial terms directly from the latent states
        let states = with_aux.latent_states(&u).unwrap();
        let aux = with_aux.aux.as_ref().unwrap();
        let mut aux_terms = 0.0;
        for row in &aux.rows {
            let tau = row.day - 1;
            let lo = tau + 1 - aux.window.min(tau + 1);
            let rolled: f64 = states.z[row.stratum][lo..=tau].iter().sum();
            let xi = (rolled / aux.populations[row.stratum]).clamp(XI_CLAMP, 1.0 - XI_CLAMP);
            aux_terms += binomial_ln_pmf(row.positives, row.tests, xi);
        }
        assert!(
            ((lp_with - lp_without) - aux_terms).abs() < 1e-9,
            "{} vs {aux_terms}",
            lp_with - lp_without
        );
    }

    #[test]
    fn gradient_ascent_mode_stays_in_support() {
        let (model, _) = canonical_model(50, 17);
        let mut u = model.initial_point();
        let mut grad = vec![0.0; model.dim()];
        let mut lp = model.log_posterior(&u, Some(&mut grad));
        let lp0 = lp;
        let mut step = 0.01;
        for _ in 0..3000 {
            let cand: Vec<f64> = u.iter().zip(&grad).map(|(v, g)| v + step * g).collect();
            let cand_lp = model.log_posterior(&cand, None);
            if cand_lp > lp {
                u = cand;
                lp = model.log_posterior(&u, Some(&mut grad));
                step *= 1.2;
            } else {
                step *= 0.5;
                if step < 1e-12 {
                    break;
                }
            }
        }
        let states = model.latent_states(&u).expect("mode inside the support");
        for tau in 0..50 {
            assert!(states.z[0][tau] > Z_FLOOR);
        }
        assert!(lp > lp0, "ascent made no progress");
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        assert!(gnorm < 10.0, "gradient norm after ascent: {gnorm}");
    }

    #[test]
    fn misaligned_data_is_a_validation_error() {
        let spec = ModelSpec::canonical(50, 17.0);
        let data = ObservedSeries::univariate(vec![1, 2, 3]).unwrap();
        assert!(matches!(
            ApproxModel::new(&spec, &data, None),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn panels_match_general_simulator_links() {
        // the fitted model and the simulator share link transforms
        let model = kitchen_sink_model(CountFamily::Poisson);
        let u = finite_jittered_point(&model, 0.1, 88);
        let states = model.latent_states(&u).unwrap();
        for i in 0..2 {
            for tau in 0..24 {
                assert!(states.pi[i][tau] > 0.0 && states.pi[i][tau] < 1.0);
                assert!(states.phi[i][tau] > 0.0);
            }
        }
    }
}

impl ApproxModel {
    /// Indices of the structural parameters (everything except the latent
    /// field and random-intercept innovations); used by the samplers to form
    /// a dense preconditioning block.
    pub fn structural_indices(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for slice in &self.layout.slices {
            if !matches!(slice.kind, SliceKind::Latent { .. } | SliceKind::Eps { .. }) {
                out.extend(slice.offset..slice.offset + slice.len);
            }
        }
        out
    }
}
