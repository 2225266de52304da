//! Data ingestion and output writing for the CLI.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::data::{AuxPrevalenceBlock, AuxRow, ObservedSeries};
use crate::mcmc::ParamSummary;
use crate::reconstruct::ReconstructionSummary;
use crate::{Error, Result};

/// Load a reported-count series from CSV with header
/// `stratum,t,y[,covariate...]`.
///
/// Strata are 0-based and contiguous; `t` must run 1..=T without gaps in each
/// stratum (missing observations are rejected, not imputed). Negative counts
/// are rejected with their row number.
pub fn load_series<P: AsRef<Path>>(path: P) -> Result<ObservedSeries> {
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols.len() < 3 || cols[0] != "stratum" || cols[1] != "t" || cols[2] != "y" {
        return Err(Error::Validation(format!(
            "series CSV must start with header stratum,t,y (got {})",
            cols.join(",")
        )));
    }
    let covariate_names: Vec<String> = cols[3..].iter().map(|s| s.to_string()).collect();
    struct Row {
        stratum: usize,
        t: u64,
        y: u64,
        covs: Vec<f64>,
    }
    let mut rows: Vec<Row> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let rowno = idx + 2; // 1-based, after the header
        let field = |k: usize| -> Result<&str> {
            record.get(k).ok_or_else(|| {
                Error::Validation(format!("row {rowno}: missing column {}", cols[k]))
            })
        };
        let stratum: usize = field(0)?.trim().parse().map_err(|_| {
            Error::Validation(format!("row {rowno}: bad stratum '{}'", field(0).unwrap()))
        })?;
        let t: u64 = field(1)?.trim().parse().map_err(|_| {
            Error::Validation(format!("row {rowno}: bad t '{}'", field(1).unwrap()))
        })?;
        let y_raw: i64 = field(2)?.trim().parse().map_err(|_| {
            Error::Validation(format!("row {rowno}: bad count '{}'", field(2).unwrap()))
        })?;
        if y_raw < 0 {
            return Err(Error::Validation(format!(
                "row {rowno}: negative count y = {y_raw}"
            )));
        }
        let mut covs = Vec::with_capacity(covariate_names.len());
        for (k, name) in covariate_names.iter().enumerate() {
            let v: f64 = field(3 + k)?.trim().parse().map_err(|_| {
                Error::Validation(format!("row {rowno}: bad value for covariate {name}"))
            })?;
            covs.push(v);
        }
        rows.push(Row { stratum, t, y: y_raw as u64, covs });
    }
    if rows.is_empty() {
        return Err(Error::Validation("series CSV has no data rows".into()));
    }
    let strata = rows.iter().map(|r| r.stratum).max().unwrap() + 1;
    let mut per: Vec<Vec<&Row>> = vec![Vec::new(); strata];
    for r in &rows {
        per[r.stratum].push(r);
    }
    let t_len = per[0].len();
    let mut y = vec![vec![0u64; t_len]; strata];
    let mut covs: BTreeMap<String, Vec<Vec<f64>>> = covariate_names
        .iter()
        .map(|n| (n.clone(), vec![vec![0.0; t_len]; strata]))
        .collect();
    for (i, group) in per.iter_mut().enumerate() {
        if group.is_empty() {
            return Err(Error::Validation(format!(
                "stratum {i} has no rows (strata must be 0-based and contiguous)"
            )));
        }
        group.sort_by_key(|r| r.t);
        if group.len() != t_len {
            return Err(Error::Validation(format!(
                "stratum {i} has {} rows, expected {t_len}",
                group.len()
            )));
        }
        for (k, r) in group.iter().enumerate() {
            let expected = k as u64 + 1;
            if r.t != expected {
                return Err(Error::Validation(format!(
                    "stratum {i}: t jumps to {} where {expected} was expected (gaps are unsupported)",
                    r.t
                )));
            }
            y[i][k] = r.y;
            for (name, col) in covs.iter_mut() {
                let ci = covariate_names.iter().position(|n| n == name).unwrap();
                col[i][k] = r.covs[ci];
            }
        }
    }
    ObservedSeries::new(y, covs)
}

/// Load survey rows from CSV with header `stratum,day,tests,positives`.
pub fn load_aux_rows<P: AsRef<Path>>(path: P) -> Result<Vec<AuxRow>> {
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();
    let expect = ["stratum", "day", "tests", "positives"];
    let cols: Vec<&str> = headers.iter().collect();
    if cols != expect {
        return Err(Error::Validation(format!(
            "survey CSV must have header {} (got {})",
            expect.join(","),
            cols.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let rowno = idx + 2;
        let get = |k: usize| -> Result<u64> {
            record
                .get(k)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Validation(format!("survey row {rowno}: bad {}", expect[k])))
        };
        let row = AuxRow {
            stratum: get(0)? as usize,
            day: get(1)? as usize,
            tests: get(2)?,
            positives: get(3)?,
        };
        if row.positives > row.tests {
            return Err(Error::Validation(format!(
                "survey row {rowno}: positives > tests"
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Assemble the aux block from config populations/window plus survey rows.
pub fn aux_block_from(
    cfg: &crate::models::AuxConfig,
    rows: Vec<AuxRow>,
) -> AuxPrevalenceBlock {
    AuxPrevalenceBlock { rows, populations: cfg.populations.clone(), window: cfg.window }
}

pub fn write_reconstruction_csv<P: AsRef<Path>>(
    summary: &ReconstructionSummary,
    path: P,
) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "stratum,t,median,lo,hi,level")?;
    for (i, cells) in summary.cells.iter().enumerate() {
        for (t, c) in cells.iter().enumerate() {
            writeln!(w, "{i},{},{},{},{},{}", t + 1, c.median, c.lo, c.hi, summary.level)?;
        }
    }
    Ok(())
}

pub fn write_summary_csv<P: AsRef<Path>>(summaries: &[ParamSummary], path: P) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "parameter,mean,sd,median,q2.5,q5,q95,q97.5,ess,rhat,mcse")?;
    for s in summaries {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            s.name, s.mean, s.sd, s.median, s.q2_5, s.q5, s.q95, s.q97_5, s.ess, s.rhat, s.mcse
        )?;
    }
    Ok(())
}

/// The reproducibility record written alongside every output set. Re-running
/// the recorded argv reproduces the outputs bit-identically.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub argv: Vec<String>,
    pub config_path: Option<String>,
    pub config_sha256: Option<String>,
    pub input_paths: Vec<String>,
    pub seed: Option<u64>,
    pub output_dir: String,
}

impl RunManifest {
    pub fn new(subcommand: &str, argv: &[String], output_dir: &Path) -> Self {
        RunManifest {
            tool: "thinar".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.into(),
            argv: argv.to_vec(),
            config_path: None,
            config_sha256: None,
            input_paths: Vec::new(),
            seed: None,
            output_dir: output_dir.display().to_string(),
        }
    }

    pub fn with_config(mut self, path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        self.config_path = Some(path.display().to_string());
        self.config_sha256 = Some(format!("{:x}", hasher.finalize()));
        Ok(self)
    }

    pub fn with_input(mut self, path: &Path) -> Self {
        self.input_paths.push(path.display().to_string());
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path: PathBuf = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(content: &str) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("series.csv");
        std::fs::write(&path, content).unwrap();
        (dir, path)
    }

    #[test]
    fn loads_two_strata() {
        let mut content = String::from("stratum,t,y\n");
        for i in 0..2 {
            for t in 1..=10 {
                content.push_str(&format!("{i},{t},{}\n", t + i));
            }
        }
        let (_dir, path) = write_tmp(&content);
        let series = load_series(&path).unwrap();
        assert_eq!(series.strata, 2);
        assert_eq!(series.t_len, 10);
        assert_eq!(series.y[1][0], 2);
    }

    #[test]
    fn gap_error_names_stratum_and_t() {
        let content = "stratum,t,y\n0,1,3\n0,2,4\n0,4,5\n";
        let (_dir, path) = write_tmp(content);
        let err = load_series(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("stratum 0"), "{msg}");
        assert!(msg.contains('3'), "{msg}");
    }

    #[test]
    fn negative_count_error_carries_row_number() {
        let content = "stratum,t,y\n0,1,3\n0,2,-1\n";
        let (_dir, path) = write_tmp(content);
        let err = load_series(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 3"), "{msg}");
        assert!(msg.contains("negative"), "{msg}");
    }

    #[test]
    fn covariates_are_carried_by_name() {
        let content = "stratum,t,y,log_tests\n0,1,3,1.5\n0,2,4,1.7\n0,3,5,1.9\n";
        let (_dir, path) = write_tmp(content);
        let series = load_series(&path).unwrap();
        assert_eq!(series.covariates["log_tests"][0], vec![1.5, 1.7, 1.9]);
    }

    #[test]
    fn survey_rows_load_and_validate() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("survey.csv");
        std::fs::write(&path, "stratum,day,tests,positives\n0,7,100,3\n1,14,200,5\n").unwrap();
        let rows = load_aux_rows(&path).unwrap();
        assert_eq!(rows.len(), 2);
        std::fs::write(&path, "stratum,day,tests,positives\n0,7,100,300\n").unwrap();
        assert!(load_aux_rows(&path).is_err());
    }
}
