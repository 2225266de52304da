//! Regenerates the bundled example datasets under `configs/fixtures/` using
//! the model-driven simulator. Run from the crate root:
//!
//! ```text
//! cargo run --example generate_fixtures
//! ```
//!
//! Each dataset pairs with a model config under `configs/`; the true
//! parameter values used here are printed so fits can be checked against
//! them.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use thinar::models::{simulate_general, LinkCoefficients, ModelSpec};
use thinar::reconstruct::prevalence_rollup;
use thinar::rng::stream_rng;
use thinar::simulate::{simulate_thinned_pois_ar, SimOutput, ThinnedArParams};

fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/fixtures")
}

fn write_series(
    path: &str,
    runs: &[SimOutput],
    covs: &BTreeMap<String, Vec<Vec<f64>>>,
    with_x: bool,
) {
    let mut out = String::new();
    let mut header = vec!["stratum".to_string(), "t".to_string()];
    if with_x {
        header.push("x".into());
    }
    header.push("y".into());
    let mut names: Vec<&String> = covs.keys().collect();
    names.sort();
    for n in &names {
        header.push((*n).clone());
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for (i, run) in runs.iter().enumerate() {
        for t in 0..run.y.len() {
            let mut row = vec![i.to_string(), (t + 1).to_string()];
            if with_x {
                row.push(run.x[t].to_string());
            }
            row.push(run.y[t].to_string());
            for n in &names {
                row.push(format!("{}", covs[*n][i][t]));
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
    }
    let path = fixtures_dir().join(path);
    std::fs::write(&path, out).unwrap();
    println!("wrote {}", path.display());
}

fn main() {
    std::fs::create_dir_all(fixtures_dir()).unwrap();

    // -- canonical simulation-study series: nu=10, phi=0.6, pi=0.6, T=50
    let params = ThinnedArParams::new(10.0, 0.6, 0.6).unwrap();
    let sim = simulate_thinned_pois_ar(params, 50, 100, 42).unwrap();
    println!("sim_study: x1 = {} (known initial count for the config)", sim.x[0]);
    // the truth file keeps the latent counts as a covariate-style column so
    // it loads with the ordinary series reader
    let mut truth_cov = BTreeMap::new();
    truth_cov.insert("x".to_string(), vec![sim.x.iter().map(|&v| v as f64).collect::<Vec<f64>>()]);
    write_series("sim_study_truth.csv", std::slice::from_ref(&sim), &truth_cov, false);
    write_series("sim_study_series.csv", std::slice::from_ref(&sim), &BTreeMap::new(), false);

    // -- seasonal endemic series (rotavirus-like): Fourier links, constant
    //    reporting probability 0.3, weekly data
    let spec_text =
        std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/rotavirus_seasonal.json"))
            .unwrap();
    let spec = ModelSpec::from_json(&spec_text).unwrap();
    let coeffs = LinkCoefficients {
        nu: vec![vec![1.7f64, 0.18, 0.09]],
        phi: vec![vec![-0.133f64, 0.05, 0.025]],
        pi: vec![vec![thinar::numerics::logit(0.3)]],
        ..Default::default()
    };
    let runs = simulate_general(&spec, &coeffs, &BTreeMap::new(), 200, 304).unwrap();
    let min_y = runs[0].y.iter().min().unwrap();
    println!("rotavirus-style series: min reported count {min_y}");
    let mean_y: f64 =
        runs[0].y.iter().map(|&v| v as f64).sum::<f64>() / runs[0].y.len() as f64;
    println!("rotavirus-style series: mean reported count {mean_y:.2} (pi = 0.3)");
    write_series("rotavirus_series.csv", &runs, &BTreeMap::new(), false);

    // -- daily multivariate series with day-of-week reporting, a log-tests
    //    covariate and a prevalence survey (conurbation-like), 3 strata
    let spec_text = std::fs::read_to_string(
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/conurbation_prevalence.json"),
    )
    .unwrap();
    let spec = ModelSpec::from_json(&spec_text).unwrap();
    let t_len = spec.t_len;
    // log lag-1 test counts, weekly shape shared across strata
    let mut rng = stream_rng(9021, 99);
    let mut log_tests = Vec::new();
    for _ in 0..spec.strata {
        let mut col = Vec::with_capacity(t_len);
        for t in 0..t_len {
            let weekly = [1.00f64, 1.05, 1.03, 1.0, 0.97, 0.80, 0.75][t % 7];
            let noise: f64 = rand_distr::Distribution::sample(
                &rand_distr::StandardNormal,
                &mut rng,
            );
            col.push((8000.0 * weekly).ln() + 0.05 * noise);
        }
        log_tests.push(col);
    }
    let mut covs = BTreeMap::new();
    covs.insert("log_tests".to_string(), log_tests);
    // centre the covariate effect so logit(pi) sits near -0.5
    let b_tests = 0.35;
    let dow_effects = [-0.50f64, -0.45, -0.40, -0.50, -0.60, -0.90, -1.00];
    let pi_coef: Vec<f64> = dow_effects
        .iter()
        .map(|d| d - b_tests * 9.0)
        .chain(std::iter::once(b_tests))
        .collect();
    let coeffs = LinkCoefficients {
        nu: vec![Vec::new(); spec.strata],
        phi: (0..spec.strata)
            .map(|i| {
                let mut c = vec![-0.006 + 0.005 * i as f64];
                c.extend(vec![0.0; 12]);
                c
            })
            .collect(),
        pi: vec![pi_coef; spec.strata],
        sigma_phi: vec![0.03; spec.strata],
        sigma_pi: vec![0.10; spec.strata],
        ..Default::default()
    };
    let runs = simulate_general(&spec, &coeffs, &covs, 14, 9021).unwrap();
    for (i, run) in runs.iter().enumerate() {
        let mean_y: f64 = run.y.iter().map(|&v| v as f64).sum::<f64>() / t_len as f64;
        println!("conurbation stratum {i}: mean reported count {mean_y:.1}");
    }
    write_series("conurbation_series.csv", &runs, &covs, false);

    // weekly survey rows drawn from the rolled-up true counts
    let aux = spec.aux.as_ref().unwrap();
    let mut survey = String::from("stratum,day,tests,positives\n");
    let mut rng = stream_rng(9021, 1234);
    for (i, run) in runs.iter().enumerate() {
        let draws = vec![run.x.clone()];
        let rolled = prevalence_rollup(&draws, aux.window, aux.populations[i]).unwrap();
        for week in 1..=(t_len / 7) {
            let day = week * 7;
            let xi = rolled[0][day - 1].clamp(1e-6, 0.5);
            let tests = 900u64;
            let pos = binomial_draw(tests, xi, &mut rng);
            survey.push_str(&format!("{i},{day},{tests},{pos}\n"));
        }
    }
    let path = fixtures_dir().join("conurbation_survey.csv");
    std::fs::write(&path, &survey).unwrap();
    println!("wrote {}", path.display());

    let mut readme = std::fs::File::create(fixtures_dir().join("README.md")).unwrap();
    writeln!(
        readme,
        "Generated by `cargo run --example generate_fixtures`; seeds are fixed in that example."
    )
    .unwrap();
}

fn binomial_draw(n: u64, p: f64, rng: &mut rand_chacha::ChaCha8Rng) -> u64 {
    use rand_distr::Distribution;
    rand_distr::Binomial::new(n, p).unwrap().sample(rng)
}
