//! Model-driven forward simulation: evaluate the link panels from supplied
//! coefficients and hand them to the panel simulator.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::layout::{LinkId, LinkKind, ValueTransform};
use super::{build_design, Design, ModelSpec, ThetaMode};
use crate::numerics::logistic;
use crate::rng::stream_rng;
use crate::simulate::{simulate_panel, ParamPanel, SimOutput};
use crate::{Error, Result};

/// Link coefficient values for simulation, aligned with the design columns of
/// each block (`[stratum][column]`). Scales feed the random-intercept draws;
/// `theta` overrides the simplex when the spec says it is estimated.
#[derive(Debug, Clone, Default)]
pub struct LinkCoefficients {
    pub nu: Vec<Vec<f64>>,
    pub phi: Vec<Vec<f64>>,
    pub pi: Vec<Vec<f64>>,
    pub sigma_nu: Vec<f64>,
    pub sigma_phi: Vec<f64>,
    pub sigma_pi: Vec<f64>,
    pub theta: Option<Vec<f64>>,
}

/// Simulate the general model: one series per stratum, using the same link
/// transforms as the fitted model and the same RNG stream discipline as
/// [`crate::simulate::simulate_panel`].
pub fn simulate_general(
    spec: &ModelSpec,
    coeffs: &LinkCoefficients,
    covariates: &BTreeMap<String, Vec<Vec<f64>>>,
    burn_in: usize,
    seed: u64,
) -> Result<Vec<SimOutput>> {
    spec.validate()?;
    let design = build_design(spec, covariates)?;
    let theta = match (&spec.theta, &coeffs.theta) {
        (ThetaMode::Fixed { weights }, None) => weights.clone(),
        (_, Some(weights)) => weights.clone(),
        (ThetaMode::Estimated, None) => {
            return Err(Error::Validation(
                "spec estimates theta: simulation coefficients must supply weights".into(),
            ));
        }
    };
    if theta.len() != spec.serial_len {
        return Err(Error::Validation(format!(
            "theta has {} weights, spec.serial_len = {}",
            theta.len(),
            spec.serial_len
        )));
    }
    let layout = super::layout::build_layout(spec, &design, false);

    // models without an exogenous term have no stationary mean to start
    // from; anchor the lag buffer at the initial-condition location instead
    let init_level = if spec.nu_link.terms.is_empty() {
        Some(match spec.x1 {
            super::X1Mode::Known { value } => value.round().max(1.0) as u64,
            super::X1Mode::Prior { mean, .. } => mean.round().max(1.0) as u64,
        })
    } else {
        None
    };
    let mut panel = ParamPanel {
        nu: Vec::with_capacity(spec.strata),
        phi: Vec::with_capacity(spec.strata),
        pi: Vec::with_capacity(spec.strata),
        theta,
        init_level,
    };
    for i in 0..spec.strata {
        // random-intercept draws come from a stream separate from the count
        // stream so the reduction to the canonical simulator is draw-exact
        let mut eps_rng = stream_rng(seed, (1 << 32) | i as u64);
        let mut fill = |link: LinkId| -> Result<Vec<f64>> {
            let (design_l, coefs, sigmas) = match link {
                LinkId::Nu => (&design.nu, &coeffs.nu, &coeffs.sigma_nu),
                LinkId::Phi => (&design.phi, &coeffs.phi, &coeffs.sigma_phi),
                LinkId::Pi => (&design.pi, &coeffs.pi, &coeffs.sigma_pi),
            };
            let kind = &layout.link_kind[link.index()];
            if matches!(kind, LinkKind::Absent) {
                let fillv = if link == LinkId::Pi { 1.0 } else { 0.0 };
                return Ok(vec![fillv; spec.t_len]);
            }
            let coef = coefs.get(i).ok_or_else(|| {
                Error::Validation(format!(
                    "{} coefficients missing for stratum {i}",
                    link.name()
                ))
            })?;
            if coef.len() != design_l.n_cols {
                return Err(Error::Validation(format!(
                    "{} link expects {} coefficients, got {}",
                    link.name(),
                    design_l.n_cols,
                    coef.len()
                )));
            }
            let sigma = if design_l.has_random_intercept {
                Some(*sigmas.get(i).ok_or_else(|| {
                    Error::Validation(format!(
                        "{} link has a random intercept: sigma missing for stratum {i}",
                        link.name()
                    ))
                })?)
            } else {
                None
            };
            let mut out = Vec::with_capacity(spec.t_len);
            for t in 0..spec.t_len {
                let mut eta: f64 =
                    design_l.row(i, t).iter().zip(coef).map(|(x, c)| x * c).sum();
                if let Some(s) = sigma {
                    let draw: f64 = StandardNormal.sample(&mut eps_rng);
                    eta += s * draw;
                }
                let v = match kind {
                    LinkKind::ValueScalar { transform: ValueTransform::Logistic, .. } => {
                        logistic(eta)
                    }
                    LinkKind::ValueScalar { transform: ValueTransform::Exp, .. } => eta.exp(),
                    LinkKind::Linear if link == LinkId::Pi => logistic(eta),
                    _ => eta.exp(),
                };
                out.push(v);
            }
            Ok(out)
        };
        panel.nu.push(fill(LinkId::Nu)?);
        panel.phi.push(fill(LinkId::Phi)?);
        panel.pi.push(fill(LinkId::Pi)?);
    }
    let _ = &design as &Design;
    simulate_panel(&panel, spec.t_len, burn_in, seed)
}

/// Draw a standard-normal via the stream RNG; used by tests.
#[allow(dead_code)]
pub(crate) fn normal_draw<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{LinkBlock, PriorSpec, ThetaMode, X1Mode};
    use crate::simulate::{simulate_thinned_pois_ar, ThinnedArParams};

    #[test]
    fn reduces_to_canonical_simulator() {
        let spec = ModelSpec::canonical(2_000, 17.0);
        let coeffs = LinkCoefficients {
            nu: vec![vec![10.0f64.ln()]],
            phi: vec![vec![crate::numerics::logit(0.4)]],
            pi: vec![vec![crate::numerics::logit(0.4)]],
            ..Default::default()
        };
        let general = simulate_general(&spec, &coeffs, &BTreeMap::new(), 0, 4242)
            .unwrap()
            .remove(0);
        let params = ThinnedArParams::new(10.0, 0.4, 0.4).unwrap();
        let canonical = simulate_thinned_pois_ar(params, 2_000, 0, 4242).unwrap();
        assert_eq!(general.x, canonical.x);
        assert_eq!(general.y, canonical.y);
    }

    #[test]
    fn estimated_theta_requires_weights() {
        let mut spec = ModelSpec::canonical(50, 17.0);
        spec.serial_len = 3;
        spec.theta = ThetaMode::Estimated;
        let coeffs = LinkCoefficients {
            nu: vec![vec![10.0f64.ln()]],
            phi: vec![vec![crate::numerics::logit(0.4)]],
            pi: vec![vec![crate::numerics::logit(0.4)]],
            ..Default::default()
        };
        assert!(simulate_general(&spec, &coeffs, &BTreeMap::new(), 0, 1).is_err());
    }

    #[test]
    fn seasonal_links_shift_the_mean() {
        let mut spec = ModelSpec::canonical(5_000, 20.0);
        spec.nu_link = LinkBlock {
            terms: vec![
                crate::models::LinkTerm::Intercept {
                    prior: PriorSpec::Normal { mean: 0.0, sd: 1.0 },
                    on: crate::models::PriorTarget::Coef,
                },
                crate::models::LinkTerm::Fourier {
                    period: 52.0,
                    prior: PriorSpec::Normal { mean: 0.0, sd: 1.0 },
                },
            ],
        };
        spec.x1 = X1Mode::Prior { mean: 20.0, sd: 10.0 };
        let coeffs = LinkCoefficients {
            nu: vec![vec![10.0f64.ln(), 0.8, 0.0]],
            phi: vec![vec![crate::numerics::logit(0.3)]],
            pi: vec![vec![crate::numerics::logit(0.5)]],
            ..Default::default()
        };
        let out = simulate_general(&spec, &coeffs, &BTreeMap::new(), 100, 7).unwrap().remove(0);
        // weeks near the sine peak (t ~ 13 mod 52) should exceed the trough
        let peak: f64 = out
            .x
            .iter()
            .enumerate()
            .filter(|(t, _)| (t + 1) % 52 == 13)
            .map(|(_, &v)| v as f64)
            .sum::<f64>();
        let trough: f64 = out
            .x
            .iter()
            .enumerate()
            .filter(|(t, _)| (t + 1) % 52 == 39)
            .map(|(_, &v)| v as f64)
            .sum::<f64>();
        assert!(peak > trough, "peak {peak} vs trough {trough}");
    }
}
