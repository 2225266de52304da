//! Fit the normal–normal approximate posterior to the bundled
//! simulation-study series and reconstruct the true epidemic curve.

use std::path::PathBuf;

use thinar::cli::load_series;
use thinar::mcmc::{run_chains, summarize, ChainConfig};
use thinar::models::{ApproxModel, ModelSpec};
use thinar::reconstruct::reconstruct_from_fit;

fn main() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let spec = ModelSpec::from_json(
        &std::fs::read_to_string(root.join("configs/sim_study.json")).unwrap(),
    )
    .unwrap();
    let data = load_series(root.join("configs/fixtures/sim_study_series.csv")).unwrap();
    let model = ApproxModel::new(&spec, &data, None).unwrap();

    let config = ChainConfig::new(4, 3_000, 1_500, 1);
    let store = run_chains(&model, &config).unwrap();

    println!("data simulated from (nu, phi, pi) = (10, 0.6, 0.6), T = 50");
    println!();
    println!("parameter   median    90% CrI          rhat   ess");
    for s in summarize(&store).unwrap().iter().take(3) {
        println!(
            "{:<9} {:>8.3}   [{:>6.3}, {:>6.3}]   {:.3}  {:>6.0}",
            s.name, s.median, s.q5, s.q95, s.rhat, s.ess
        );
    }

    let (recon, _) = reconstruct_from_fit(&model, &store, 0.9).unwrap();
    let truth = load_series(root.join("configs/fixtures/sim_study_truth.csv")).unwrap();
    let x_true = &truth.covariates["x"][0];
    println!();
    println!("reconstruction (first 10 weeks, 90% CrI):");
    println!("  t   y   true X   median [lo, hi]");
    for t in 0..10 {
        let c = recon.cells[0][t];
        println!(
            " {:>2}  {:>2}    {:>3}     {:>3} [{:>3}, {:>3}]",
            t + 1,
            data.y[0][t],
            x_true[t] as u64,
            c.median,
            c.lo,
            c.hi
        );
    }
    let covered = (0..50)
        .filter(|&t| {
            let c = recon.cells[0][t];
            (c.lo..=c.hi).contains(&(x_true[t] as u64))
        })
        .count();
    println!();
    println!("true X inside the 90% interval in {covered}/50 weeks");
}
