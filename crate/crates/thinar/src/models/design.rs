//! Design-matrix construction for the three link blocks.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use super::{LinkTerm, ModelSpec};
use crate::{Error, Result};

/// Design matrix of one link, per stratum, row-major `[t * n_cols + c]`.
#[derive(Debug, Clone)]
pub struct LinkDesign {
    pub col_names: Vec<String>,
    pub n_cols: usize,
    pub rows: Vec<Vec<f64>>,
    pub has_random_intercept: bool,
}

impl LinkDesign {
    #[inline]
    pub fn row(&self, stratum: usize, t: usize) -> &[f64] {
        &self.rows[stratum][t * self.n_cols..(t + 1) * self.n_cols]
    }
}

/// Design matrices for the `nu`, `phi` and `pi` links.
#[derive(Debug, Clone)]
pub struct Design {
    pub nu: LinkDesign,
    pub phi: LinkDesign,
    pub pi: LinkDesign,
}

/// Build the per-link design matrices from a spec and raw covariate columns
/// (aligned `[stratum][t]`).
pub fn build_design(
    spec: &ModelSpec,
    covariates: &BTreeMap<String, Vec<Vec<f64>>>,
) -> Result<Design> {
    for col in covariates.values() {
        if col.len() < spec.strata || col.iter().any(|s| s.len() < spec.t_len) {
            return Err(Error::Validation(
                "covariate table shorter than the spec's strata/t_len".into(),
            ));
        }
    }
    Ok(Design {
        nu: build_link(&spec.nu_link.terms, spec, covariates, "nu")?,
        phi: build_link(&spec.phi_link.terms, spec, covariates, "phi")?,
        pi: build_link(&spec.pi_link.terms, spec, covariates, "pi")?,
    })
}

fn build_link(
    terms: &[LinkTerm],
    spec: &ModelSpec,
    covariates: &BTreeMap<String, Vec<Vec<f64>>>,
    link: &str,
) -> Result<LinkDesign> {
    let mut col_names: Vec<String> = Vec::new();
    let mut has_random_intercept = false;
    // generators produce the column values for (stratum, t)
    let mut generators: Vec<Box<dyn Fn(usize, usize) -> f64>> = Vec::new();
    for term in terms {
        match term {
            LinkTerm::Intercept { .. } => {
                col_names.push("intercept".into());
                generators.push(Box::new(|_, _| 1.0));
            }
            LinkTerm::Fourier { period, .. } => {
                let p = *period;
                col_names.push(format!("sin{p}"));
                col_names.push(format!("cos{p}"));
                generators.push(Box::new(move |_, t| (TAU * (t + 1) as f64 / p).sin()));
                generators.push(Box::new(move |_, t| (TAU * (t + 1) as f64 / p).cos()));
            }
            LinkTerm::Bspline { df, .. } => {
                let basis = BsplineBasis::clamped_cubic(1.0, spec.t_len as f64, *df)?;
                // precompute rows once; they are shared across strata
                let values: Vec<Vec<f64>> =
                    (0..spec.t_len).map(|t| basis.eval((t + 1) as f64)).collect();
                for k in 0..*df {
                    col_names.push(format!("bs{}", k + 1));
                    let values = values.clone();
                    generators.push(Box::new(move |_, t| values[t][k]));
                }
            }
            LinkTerm::Dow { .. } => {
                for d in 0..7usize {
                    col_names.push(format!("dow{d}"));
                    generators.push(Box::new(move |_, t| if t % 7 == d { 1.0 } else { 0.0 }));
                }
            }
            LinkTerm::Covariate { name, .. } => {
                let col = covariates.get(name).ok_or_else(|| {
                    Error::Validation(format!("{link} link: unknown covariate '{name}'"))
                })?;
                col_names.push(name.clone());
                let col = col.clone();
                generators.push(Box::new(move |i, t| col[i][t]));
            }
            LinkTerm::RandomIntercept { .. } => has_random_intercept = true,
        }
    }
    let n_cols = generators.len();
    let mut rows = Vec::with_capacity(spec.strata);
    for i in 0..spec.strata {
        let mut flat = Vec::with_capacity(spec.t_len * n_cols);
        for t in 0..spec.t_len {
            for g in &generators {
                flat.push(g(i, t));
            }
        }
        rows.push(flat);
    }
    Ok(LinkDesign { col_names, n_cols, rows, has_random_intercept })
}

/// Clamped cubic B-spline basis on `[lo, hi]` with `df` basis functions
/// (`df - 4` equally spaced interior knots).
pub(crate) struct BsplineBasis {
    knots: Vec<f64>,
    n_basis: usize,
}

impl BsplineBasis {
    const DEGREE: usize = 3;

    pub fn clamped_cubic(lo: f64, hi: f64, df: usize) -> Result<Self> {
        if df < 4 {
            return Err(Error::Validation("cubic B-spline basis needs df >= 4".into()));
        }
        if !(hi > lo) {
            return Err(Error::Validation("degenerate B-spline range".into()));
        }
        let interior = df - 4;
        let mut knots = vec![lo; 4];
        for i in 1..=interior {
            knots.push(lo + i as f64 * (hi - lo) / (interior + 1) as f64);
        }
        knots.extend_from_slice(&[hi; 4]);
        Ok(BsplineBasis { knots, n_basis: df })
    }

    /// All `df` basis values at `x` (Cox–de Boor; rows sum to one on the range).
    pub fn eval(&self, x: f64) -> Vec<f64> {
        let d = Self::DEGREE;
        let x = x.clamp(self.knots[0], *self.knots.last().unwrap());
        // knot span index: largest j with knots[j] <= x, capped to the last
        // non-degenerate span
        let mut span = self.n_basis - 1;
        for j in d..self.n_basis {
            if x < self.knots[j + 1] {
                span = j;
                break;
            }
        }
        let mut n = vec![0.0; d + 1];
        let mut left = vec![0.0; d + 1];
        let mut right = vec![0.0; d + 1];
        n[0] = 1.0;
        for j in 1..=d {
            left[j] = x - self.knots[span + 1 - j];
            right[j] = self.knots[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        let mut out = vec![0.0; self.n_basis];
        for (r, &val) in n.iter().enumerate() {
            out[span - d + r] = val;
        }
        out
    }
}
