//! Flat parameter-vector layout for the approximate model.
//!
//! The unconstrained vector is organised as named slices; the constrained
//! counterpart (what [`crate::mcmc::DrawStore`] records) expands the
//! stick-breaking block to the full simplex and maps value-scale intercepts,
//! scales and `lambda_1` through their transforms.

use super::{Design, LinkTerm, ModelSpec, PriorSpec, PriorTarget, ThetaMode, X1Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkId {
    Nu,
    Phi,
    Pi,
}

impl LinkId {
    pub const ALL: [LinkId; 3] = [LinkId::Nu, LinkId::Phi, LinkId::Pi];

    pub fn name(self) -> &'static str {
        match self {
            LinkId::Nu => "nu",
            LinkId::Phi => "phi",
            LinkId::Pi => "pi",
        }
    }

    pub fn index(self) -> usize {
        match self {
            LinkId::Nu => 0,
            LinkId::Phi => 1,
            LinkId::Pi => 2,
        }
    }
}

/// How a value-scale intercept is mapped to its constrained support.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueTransform {
    Logistic,
    Exp,
}

pub fn value_transform(link: LinkId, prior: &PriorSpec) -> ValueTransform {
    match prior {
        PriorSpec::NormalUnit { .. } => ValueTransform::Logistic,
        PriorSpec::NormalPos { .. } | PriorSpec::Exponential { .. } => ValueTransform::Exp,
        PriorSpec::Normal { .. } => {
            if link == LinkId::Pi {
                ValueTransform::Logistic
            } else {
                ValueTransform::Exp
            }
        }
    }
}

/// Shape of one link in the compiled model.
#[derive(Debug, Clone)]
pub enum LinkKind {
    /// No terms: `nu = 0` or `pi = 1`.
    Absent,
    /// A single intercept with a value-scale prior: one constant constrained
    /// scalar per stratum.
    ValueScalar { prior: PriorSpec, transform: ValueTransform },
    /// A linear predictor through the link inverse (`exp` or `logistic`).
    Linear,
}

#[derive(Debug, Clone)]
pub enum SliceKind {
    /// Link coefficients (unconstrained), one slice per (link, stratum).
    Coef { link: LinkId, stratum: usize },
    /// Random-intercept scale, `sigma = exp(u)`.
    Sigma { link: LinkId, stratum: usize },
    /// Stick-breaking serial-interval weights (length `J - 1`).
    Theta,
    /// Initial-condition rate, `lambda_1 = exp(u)`.
    Lambda1 { stratum: usize },
    /// Latent field: `z*` (non-centred) or `Z` (centred).
    Latent { stratum: usize },
    /// Random-intercept innovations (standard-normal a priori).
    Eps { link: LinkId, stratum: usize },
}

#[derive(Debug, Clone)]
pub struct ParamSlice {
    pub name: String,
    pub offset: usize,
    pub len: usize,
    pub kind: SliceKind,
}

/// Complete layout: slice table plus the lookups the evaluators need.
#[derive(Debug, Clone)]
pub struct ParamLayout {
    pub slices: Vec<ParamSlice>,
    pub dim: usize,
    pub link_kind: [LinkKind; 3],
    /// Per-column priors of each link's fixed-effect block.
    pub coef_priors: [Vec<PriorSpec>; 3],
    pub sigma_priors: [Option<PriorSpec>; 3],
    /// Slice indices.
    pub coef_slice: [Vec<usize>; 3],
    pub sigma_slice: [Vec<Option<usize>>; 3],
    pub eps_slice: [Vec<Option<usize>>; 3],
    pub theta_slice: Option<usize>,
    pub lambda1_slice: Vec<Option<usize>>,
    pub latent_slice: Vec<usize>,
    /// First stochastic time index (0-based): 1 when `x_1` is known.
    pub latent_start: usize,
    pub constrained_names: Vec<String>,
    pub constrained_dim: usize,
}

impl ParamLayout {
    pub fn slice(&self, idx: usize) -> &ParamSlice {
        &self.slices[idx]
    }

    pub fn values<'a>(&self, idx: usize, u: &'a [f64]) -> &'a [f64] {
        let s = &self.slices[idx];
        &u[s.offset..s.offset + s.len]
    }

    /// Column index of a constrained parameter by name.
    pub fn constrained_index(&self, name: &str) -> Option<usize> {
        self.constrained_names.iter().position(|n| n == name)
    }
}

pub(super) fn build_layout(spec: &ModelSpec, design: &Design, centred: bool) -> ParamLayout {
    let strata = spec.strata;
    let t_len = spec.t_len;
    let suffix = |i: usize| if strata > 1 { format!(".s{i}") } else { String::new() };

    let mut slices: Vec<ParamSlice> = Vec::new();
    let mut constrained_names: Vec<String> = Vec::new();
    let mut offset = 0usize;
    let mut push = |slices: &mut Vec<ParamSlice>, name: String, len: usize, kind: SliceKind| {
        let idx = slices.len();
        slices.push(ParamSlice { name, offset, len, kind });
        offset += len;
        idx
    };

    let mut link_kind: [LinkKind; 3] = [LinkKind::Absent, LinkKind::Absent, LinkKind::Absent];
    let mut coef_priors: [Vec<PriorSpec>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut sigma_priors: [Option<PriorSpec>; 3] = [None, None, None];
    let mut coef_slice: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut sigma_slice: [Vec<Option<usize>>; 3] =
        [vec![None; strata], vec![None; strata], vec![None; strata]];
    let mut eps_slice: [Vec<Option<usize>>; 3] =
        [vec![None; strata], vec![None; strata], vec![None; strata]];

    for link in LinkId::ALL {
        let (block, ld) = match link {
            LinkId::Nu => (&spec.nu_link, &design.nu),
            LinkId::Phi => (&spec.phi_link, &design.phi),
            LinkId::Pi => (&spec.pi_link, &design.pi),
        };
        let li = link.index();
        // classify
        let value_scalar = match block.terms.as_slice() {
            [LinkTerm::Intercept { prior, on: PriorTarget::Value }] => Some(*prior),
            _ => None,
        };
        link_kind[li] = if block.terms.is_empty() {
            LinkKind::Absent
        } else if let Some(prior) = value_scalar {
            LinkKind::ValueScalar { prior, transform: value_transform(link, &prior) }
        } else {
            LinkKind::Linear
        };
        // per-column priors, term order mirrors the design
        for term in &block.terms {
            match term {
                LinkTerm::Intercept { prior, .. } => coef_priors[li].push(*prior),
                LinkTerm::Fourier { prior, .. } => {
                    coef_priors[li].push(*prior);
                    coef_priors[li].push(*prior);
                }
                LinkTerm::Bspline { df, prior } => {
                    coef_priors[li].extend(std::iter::repeat(*prior).take(*df));
                }
                LinkTerm::Dow { prior } => {
                    coef_priors[li].extend(std::iter::repeat(*prior).take(7));
                }
                LinkTerm::Covariate { prior, .. } => coef_priors[li].push(*prior),
                LinkTerm::RandomIntercept { scale_prior } => sigma_priors[li] = Some(*scale_prior),
            }
        }
        debug_assert_eq!(coef_priors[li].len(), ld.n_cols);
        // coefficient slices
        if ld.n_cols > 0 {
            for i in 0..strata {
                let name = if value_scalar.is_some() {
                    format!("{}{}", link.name(), suffix(i))
                } else {
                    format!("coef.{}{}", link.name(), suffix(i))
                };
                let idx = push(
                    &mut slices,
                    name,
                    ld.n_cols,
                    SliceKind::Coef { link, stratum: i },
                );
                coef_slice[li].push(idx);
                if value_scalar.is_some() {
                    constrained_names.push(format!("{}{}", link.name(), suffix(i)));
                } else {
                    for col in &ld.col_names {
                        constrained_names.push(format!("{}.{}{}", link.name(), col, suffix(i)));
                    }
                }
            }
        }
        // random-intercept scale
        if ld.has_random_intercept {
            for i in 0..strata {
                let name = format!("sigma_{}{}", link.name(), suffix(i));
                let idx = push(&mut slices, name.clone(), 1, SliceKind::Sigma { link, stratum: i });
                sigma_slice[li][i] = Some(idx);
                constrained_names.push(name);
            }
        }
    }

    // serial-interval weights
    let theta_slice = match &spec.theta {
        ThetaMode::Estimated => {
            let idx = push(&mut slices, "theta".into(), spec.serial_len - 1, SliceKind::Theta);
            for j in 1..=spec.serial_len {
                constrained_names.push(format!("theta{j}"));
            }
            Some(idx)
        }
        ThetaMode::Fixed { .. } => None,
    };

    // initial condition
    let mut lambda1_slice = vec![None; strata];
    let latent_start = match spec.x1 {
        X1Mode::Known { .. } => 1,
        X1Mode::Prior { .. } => {
            for (i, slot) in lambda1_slice.iter_mut().enumerate() {
                let name = format!("lambda1{}", suffix(i));
                *slot = Some(push(&mut slices, name.clone(), 1, SliceKind::Lambda1 { stratum: i }));
                constrained_names.push(name);
            }
            0
        }
    };

    // latent field
    let latent_label = if centred { "z" } else { "zstar" };
    let mut latent_slice = Vec::with_capacity(strata);
    for i in 0..strata {
        let len = t_len - latent_start;
        let idx = push(
            &mut slices,
            format!("{latent_label}{}", suffix(i)),
            len,
            SliceKind::Latent { stratum: i },
        );
        latent_slice.push(idx);
        for t in latent_start..t_len {
            constrained_names.push(format!("{latent_label}[{}]{}", t + 1, suffix(i)));
        }
    }

    // random-intercept innovations
    for link in LinkId::ALL {
        let li = link.index();
        if sigma_priors[li].is_some() {
            for i in 0..strata {
                let idx = push(
                    &mut slices,
                    format!("eps_{}{}", link.name(), suffix(i)),
                    t_len,
                    SliceKind::Eps { link, stratum: i },
                );
                eps_slice[li][i] = Some(idx);
                for t in 0..t_len {
                    constrained_names.push(format!("eps_{}[{}]{}", link.name(), t + 1, suffix(i)));
                }
            }
        }
    }

    let constrained_dim = constrained_names.len();
    ParamLayout {
        slices,
        dim: offset,
        link_kind,
        coef_priors,
        sigma_priors,
        coef_slice,
        sigma_slice,
        eps_slice,
        theta_slice,
        lambda1_slice,
        latent_slice,
        latent_start,
        constrained_names,
        constrained_dim,
    }
}
