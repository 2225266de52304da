//! Observed data containers shared by the model layer and the CLI.

use std::collections::BTreeMap;

use crate::{Error, Result};

/// Reported counts per stratum with aligned covariate columns.
///
/// `y[i][t]` is the count for stratum `i` at (1-based) time `t + 1`; every
/// covariate column carries one value per `(stratum, t)` cell.
#[derive(Debug, Clone)]
pub struct ObservedSeries {
    pub strata: usize,
    pub t_len: usize,
    pub y: Vec<Vec<u64>>,
    pub covariates: BTreeMap<String, Vec<Vec<f64>>>,
}

impl ObservedSeries {
    pub fn new(y: Vec<Vec<u64>>, covariates: BTreeMap<String, Vec<Vec<f64>>>) -> Result<Self> {
        if y.is_empty() || y[0].is_empty() {
            return Err(Error::Validation("observed series is empty".into()));
        }
        let strata = y.len();
        let t_len = y[0].len();
        if y.iter().any(|s| s.len() != t_len) {
            return Err(Error::Validation("strata have unequal lengths".into()));
        }
        for (name, col) in &covariates {
            if col.len() != strata || col.iter().any(|s| s.len() != t_len) {
                return Err(Error::Validation(format!(
                    "covariate '{name}' is not aligned with the series"
                )));
            }
            if col.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!(
                    "covariate '{name}' contains non-finite values"
                )));
            }
        }
        Ok(ObservedSeries { strata, t_len, y, covariates })
    }

    /// Single-stratum series without covariates.
    pub fn univariate(y: Vec<u64>) -> Result<Self> {
        Self::new(vec![y], BTreeMap::new())
    }
}

/// One prevalence-survey observation: `positives` of `tests` PCR tests in
/// `stratum` during the period ending at day `day` (1-based model time).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct AuxRow {
    pub stratum: usize,
    pub day: usize,
    pub tests: u64,
    pub positives: u64,
}

/// Auxiliary prevalence-survey block: survey rows, stratum populations and the
/// rollup window (how long a case keeps testing positive, default 14 days).
#[derive(Debug, Clone)]
pub struct AuxPrevalenceBlock {
    pub rows: Vec<AuxRow>,
    pub populations: Vec<f64>,
    pub window: usize,
}

impl AuxPrevalenceBlock {
    pub fn validate(&self, strata: usize, t_len: usize) -> Result<()> {
        if self.populations.len() != strata {
            return Err(Error::Validation(format!(
                "aux block has {} populations for {} strata",
                self.populations.len(),
                strata
            )));
        }
        if self.populations.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::Validation("aux populations must be positive".into()));
        }
        if self.window == 0 {
            return Err(Error::Validation("aux rollup window must be >= 1".into()));
        }
        for row in &self.rows {
            if row.stratum >= strata {
                return Err(Error::Validation(format!(
                    "aux row refers to stratum {} out of {strata}",
                    row.stratum
                )));
            }
            if row.day == 0 || row.day > t_len {
                return Err(Error::Validation(format!(
                    "aux row day {} outside 1..={t_len}",
                    row.day
                )));
            }
            if row.positives > row.tests {
                return Err(Error::Validation(format!(
                    "aux row (stratum {}, day {}) has positives > tests",
                    row.stratum, row.day
                )));
            }
        }
        Ok(())
    }
}
