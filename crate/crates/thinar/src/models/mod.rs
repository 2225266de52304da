//! Declarative model layer: the covariate-driven thinned count
//! autoregression, its normal–normal approximate posterior, and the exact
//! joint density for the canonical model.
//!
//! A [`ModelSpec`] describes the links `log nu_it`, `log phi_it` and
//! `logit pi_it` as term lists (intercepts, Fourier seasonality, B-splines,
//! day-of-week indicators, named covariates, random intercepts), the
//! serial-interval simplex, how the initial condition is handled and an
//! optional prevalence-survey block. Specs are read from JSON; see the
//! `configs/` directory for complete examples.

mod approx;
mod design;
mod exact;
mod layout;
mod sim;
mod transform;

pub use approx::{ApproxModel, LatentStates, Parametrization, SD_FLOOR, Z_FLOOR};
pub use design::{build_design, Design, LinkDesign};
pub use exact::{log_joint_exact, ExactPosterior, ExactScalarPriors};
pub use layout::{ParamLayout, ParamSlice, SliceKind};
pub use sim::{simulate_general, LinkCoefficients};
pub use transform::UnconstrainedVector;

use serde::{Deserialize, Serialize};

use crate::simulate::validate_simplex;
use crate::{Error, Result};

/// Supported prior families.
///
/// `NormalPos` and `NormalUnit` are normals truncated to `(0, inf)` and
/// `(0, 1)`; they imply the constrained support of the parameter they are
/// attached to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PriorSpec {
    Normal { mean: f64, sd: f64 },
    NormalPos { mean: f64, sd: f64 },
    NormalUnit { mean: f64, sd: f64 },
    Exponential { rate: f64 },
}

impl PriorSpec {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            PriorSpec::Normal { sd, .. }
            | PriorSpec::NormalPos { sd, .. }
            | PriorSpec::NormalUnit { sd, .. } => sd > 0.0,
            PriorSpec::Exponential { rate } => rate > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!("invalid prior scale in {self:?}")))
        }
    }

    /// Whether the family forces evaluation on the constrained value scale.
    fn requires_value_scale(&self) -> bool {
        !matches!(self, PriorSpec::Normal { .. })
    }
}

/// Where an intercept prior is evaluated: on the linear-scale coefficient or
/// on the transformed (constrained) parameter value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PriorTarget {
    #[default]
    Coef,
    Value,
}

/// One additive term of a link block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "term", rename_all = "snake_case")]
pub enum LinkTerm {
    /// Constant column. With `on = "value"` the prior is placed on the
    /// transformed parameter itself (only allowed when the intercept is the
    /// block's single term).
    Intercept {
        prior: PriorSpec,
        #[serde(default)]
        on: PriorTarget,
    },
    /// `sin(2 pi t / period)` and `cos(2 pi t / period)` columns.
    Fourier { period: f64, prior: PriorSpec },
    /// `df` cubic B-spline columns on equally spaced interior knots over
    /// `[1, t_len]`.
    Bspline { df: usize, prior: PriorSpec },
    /// Seven day-of-week indicator columns (`(t - 1) mod 7`).
    Dow { prior: PriorSpec },
    /// A named covariate column from the data file.
    Covariate { name: String, prior: PriorSpec },
    /// Per-(stratum, t) Gaussian intercept with estimated scale
    /// (non-centred: `eta += sigma * eps_it`, `eps ~ N(0,1)`).
    RandomIntercept { scale_prior: PriorSpec },
}

/// A link block: the list of additive terms for one of `log nu`, `log phi`,
/// `logit pi`. An empty `nu` block means no exogenous component (`nu = 0`);
/// an empty `pi` block means full reporting (`pi = 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct LinkBlock {
    pub terms: Vec<LinkTerm>,
}

impl LinkBlock {
    pub fn empty() -> Self {
        LinkBlock { terms: Vec::new() }
    }

    pub fn scalar_value(prior: PriorSpec) -> Self {
        LinkBlock { terms: vec![LinkTerm::Intercept { prior, on: PriorTarget::Value }] }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let mut random_intercepts = 0;
        for term in &self.terms {
            match term {
                LinkTerm::Intercept { prior, on } => {
                    prior.validate()?;
                    if *on == PriorTarget::Value && self.terms.len() != 1 {
                        return Err(Error::Validation(format!(
                            "{name}: a value-scale intercept prior requires the intercept to \
                             be the block's only term"
                        )));
                    }
                    if *on == PriorTarget::Coef && prior.requires_value_scale() {
                        return Err(Error::Validation(format!(
                            "{name}: truncated/exponential intercept priors must use on = \"value\""
                        )));
                    }
                }
                LinkTerm::Fourier { period, prior } => {
                    prior.validate()?;
                    if !(*period > 0.0) {
                        return Err(Error::Validation(format!(
                            "{name}: fourier period must be positive"
                        )));
                    }
                }
                LinkTerm::Bspline { df, prior } => {
                    prior.validate()?;
                    if *df < 4 {
                        return Err(Error::Validation(format!(
                            "{name}: bspline needs df >= 4 (cubic)"
                        )));
                    }
                }
                LinkTerm::Dow { prior } | LinkTerm::Covariate { prior, .. } => prior.validate()?,
                LinkTerm::RandomIntercept { scale_prior } => {
                    scale_prior.validate()?;
                    random_intercepts += 1;
                }
            }
            if let LinkTerm::Fourier { prior, .. }
            | LinkTerm::Bspline { prior, .. }
            | LinkTerm::Dow { prior }
            | LinkTerm::Covariate { prior, .. } = term
            {
                if prior.requires_value_scale() {
                    return Err(Error::Validation(format!(
                        "{name}: non-intercept coefficients take plain normal priors"
                    )));
                }
            }
        }
        if random_intercepts > 1 {
            return Err(Error::Validation(format!(
                "{name}: at most one random intercept per link"
            )));
        }
        Ok(())
    }
}

/// Serial-interval handling: a fixed simplex or stick-breaking estimation
/// (uniform Dirichlet prior).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ThetaMode {
    Fixed { weights: Vec<f64> },
    Estimated,
}

/// Initial-condition handling: `X_1` known (the canonical simulation-study
/// setup) or a positive `lambda_1` parameter with a truncated-normal prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum X1Mode {
    Known { value: f64 },
    Prior { mean: f64, sd: f64 },
}

/// Count family of the latent layer. The negative binomial supplies only its
/// conditional mean/variance to the normal–normal approximation
/// (`var = lambda + lambda^2 / psi`); it has no exact-model counterpart here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CountFamily {
    Poisson,
    NegBin { psi: f64 },
}

impl Default for CountFamily {
    fn default() -> Self {
        CountFamily::Poisson
    }
}

fn default_window() -> usize {
    14
}

/// Config-side description of the prevalence-survey block; the rows arrive
/// separately with the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxConfig {
    pub populations: Vec<f64>,
    #[serde(default = "default_window")]
    pub window: usize,
}

/// Declarative description of the general model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub strata: usize,
    pub t_len: usize,
    pub serial_len: usize,
    #[serde(default)]
    pub count_family: CountFamily,
    #[serde(default)]
    pub nu_link: LinkBlock,
    pub phi_link: LinkBlock,
    #[serde(default)]
    pub pi_link: LinkBlock,
    pub theta: ThetaMode,
    pub x1: X1Mode,
    #[serde(default)]
    pub aux: Option<AuxConfig>,
}

impl ModelSpec {
    /// The canonical simulation-study model: scalar `(nu, phi, pi)` with
    /// truncated-normal priors and `x_1` known.
    pub fn canonical(t_len: usize, x1: f64) -> Self {
        ModelSpec {
            strata: 1,
            t_len,
            serial_len: 1,
            count_family: CountFamily::Poisson,
            nu_link: LinkBlock::scalar_value(PriorSpec::NormalPos { mean: 9.0, sd: 4.0 }),
            phi_link: LinkBlock::scalar_value(PriorSpec::NormalUnit { mean: 0.6, sd: 0.3 }),
            pi_link: LinkBlock::scalar_value(PriorSpec::NormalUnit { mean: 0.6, sd: 0.3 }),
            theta: ThetaMode::Fixed { weights: vec![1.0] },
            x1: X1Mode::Known { value: x1 },
            aux: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.strata == 0 {
            return Err(Error::Validation("strata must be >= 1".into()));
        }
        if self.t_len == 0 {
            return Err(Error::Validation("t_len must be >= 1".into()));
        }
        if self.serial_len == 0 {
            return Err(Error::Validation("serial_len must be >= 1".into()));
        }
        self.nu_link.validate("nu link")?;
        self.phi_link.validate("phi link")?;
        self.pi_link.validate("pi link")?;
        if self.phi_link.terms.is_empty() {
            return Err(Error::Validation("phi link must have at least one term".into()));
        }
        match &self.theta {
            ThetaMode::Fixed { weights } => {
                if weights.len() != self.serial_len {
                    return Err(Error::Validation(format!(
                        "theta has {} weights but serial_len = {}",
                        weights.len(),
                        self.serial_len
                    )));
                }
                validate_simplex(weights)?;
            }
            ThetaMode::Estimated => {
                if self.serial_len < 2 {
                    return Err(Error::Validation(
                        "estimating theta needs serial_len >= 2".into(),
                    ));
                }
            }
        }
        match self.x1 {
            X1Mode::Known { value } => {
                if !(value >= 0.0) || !value.is_finite() {
                    return Err(Error::Validation(format!(
                        "known x_1 must be a nonnegative count, got {value}"
                    )));
                }
            }
            X1Mode::Prior { sd, .. } => {
                if !(sd > 0.0) {
                    return Err(Error::Validation("x_1 prior sd must be positive".into()));
                }
            }
        }
        if let CountFamily::NegBin { psi } = self.count_family {
            if !(psi > 0.0) {
                return Err(Error::Validation("negbin psi must be positive".into()));
            }
        }
        if let Some(aux) = &self.aux {
            if aux.populations.len() != self.strata {
                return Err(Error::Validation(format!(
                    "aux block needs one population per stratum ({} != {})",
                    aux.populations.len(),
                    self.strata
                )));
            }
            if aux.populations.iter().any(|&p| !(p > 0.0)) {
                return Err(Error::Validation("aux populations must be positive".into()));
            }
            if aux.window == 0 {
                return Err(Error::Validation("aux window must be >= 1".into()));
            }
        }
        Ok(())
    }

    /// Parse and validate a spec from JSON.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ModelSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Conditional variance of the count layer at mean `lambda`.
    pub(crate) fn latent_variance(&self, lambda: f64) -> f64 {
        match self.count_family {
            CountFamily::Poisson => lambda,
            CountFamily::NegBin { psi } => lambda + lambda * lambda / psi,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_spec_validates() {
        let spec = ModelSpec::canonical(50, 17.0);
        assert!(spec.validate().is_ok());
    }

    #[test]
    fn json_round_trip() {
        let spec = ModelSpec::canonical(50, 17.0);
        let text = serde_json::to_string_pretty(&spec).unwrap();
        let back = ModelSpec::from_json(&text).unwrap();
        assert_eq!(spec, back);
    }

    #[test]
    fn bad_simplex_rejected() {
        let mut spec = ModelSpec::canonical(50, 17.0);
        spec.theta = ThetaMode::Fixed { weights: vec![0.6, 0.5] };
        spec.serial_len = 2;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn value_prior_needs_lone_intercept() {
        let mut spec = ModelSpec::canonical(50, 17.0);
        spec.pi_link.terms.push(LinkTerm::Dow {
            prior: PriorSpec::Normal { mean: 0.0, sd: 1.0 },
        });
        assert!(spec.validate().is_err());
    }

    #[test]
    fn truncated_prior_on_coef_rejected() {
        let mut spec = ModelSpec::canonical(50, 17.0);
        spec.phi_link = LinkBlock {
            terms: vec![LinkTerm::Intercept {
                prior: PriorSpec::NormalPos { mean: 0.0, sd: 1.0 },
                on: PriorTarget::Coef,
            }],
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn aux_needs_population_per_stratum() {
        let mut spec = ModelSpec::canonical(50, 17.0);
        spec.aux = Some(AuxConfig { populations: vec![1000.0, 2000.0], window: 14 });
        assert!(spec.validate().is_err());
    }
}
