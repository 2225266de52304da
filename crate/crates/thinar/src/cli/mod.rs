//! Command-line surface: reproducible experiment drivers over the library
//! pipelines. Every subcommand writes its outputs plus a `manifest.json`
//! sufficient to reproduce them bit-identically.

mod io;

pub use io::{load_aux_rows, load_series, RunManifest};

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::consequences::{derivative_formulas, naive_limits, naive_pois_ar_mle, prop_bounds};
use crate::data::ObservedSeries;
use crate::mcmc::{run_chains, run_exact_mcmc, summarize, ChainConfig, DrawStore, SamplerKind};
use crate::models::{ApproxModel, ModelSpec};
use crate::moments::{mom_estimate, mom_study, sample_moments};
use crate::reconstruct::{
    exact_reconstruction, prevalence_rollup, reconstruct_from_fit, smooth_prevalence,
};
use crate::rng::derive_seed;
use crate::simulate::{simulate_thinned_pois_ar, ThinnedArParams};
use crate::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "thinar",
    version,
    about = "Simulate, fit and reconstruct binomially thinned count autoregressions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate the canonical thinned Poisson autoregression
    Simulate(SimulateArgs),
    /// Sample moments and method-of-moments estimates of a series
    Moments(MomentsArgs),
    /// Quantile study of the moment estimators over a (phi, pi) grid
    MomStudy(MomStudyArgs),
    /// Limiting naive estimates, derivatives and bias bounds over pi
    Consequences(ConsequencesArgs),
    /// Fit a model to reported counts
    Fit(FitArgs),
    /// Reconstruct integer epidemic curves from stored draws
    Reconstruct(ReconstructArgs),
    /// Prevalence ribbons from draws, or survey smoothing
    Prevalence(PrevalenceArgs),
    /// Convergence diagnostics for stored draws
    Diagnose(DiagnoseArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    nu: f64,
    #[arg(long)]
    phi: f64,
    #[arg(long)]
    pi: f64,
    /// Series length
    #[arg(long = "t")]
    t_len: usize,
    #[arg(long, default_value_t = 100)]
    burnin: usize,
    /// Number of replicate series (one file each)
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Drop the latent-count column (header becomes stratum,t,y)
    #[arg(long)]
    no_x: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct MomentsArgs {
    #[arg(long)]
    data: PathBuf,
    /// Output CSV (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MomStudyArgs {
    #[arg(long, default_value_t = 5.0)]
    nu: f64,
    /// Comma-separated phi grid
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.2, 0.4, 0.6, 0.8])]
    phi: Vec<f64>,
    /// Comma-separated pi grid
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.2, 0.4, 0.6, 0.8])]
    pi: Vec<f64>,
    /// Comma-separated series lengths
    #[arg(long, value_delimiter = ',', default_values_t = vec![50, 100, 200, 400, 800])]
    lengths: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ConsequencesArgs {
    #[arg(long, default_value_t = 5.0)]
    nu: f64,
    #[arg(long, default_value_t = 0.8)]
    phi: f64,
    /// Number of interior pi grid points
    #[arg(long, default_value_t = 99)]
    grid: usize,
    /// Instead of the bias curves: divide a reported series by this known pi
    /// (the naive correction demo)
    #[arg(long)]
    divide_by_pi: Option<f64>,
    /// Series CSV for --divide-by-pi
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Engine {
    Approx,
    Exact,
    Naive,
    Mom,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long, value_enum)]
    engine: Engine,
    /// Model config JSON (approx/exact engines)
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: PathBuf,
    /// Survey CSV for models with an aux block
    #[arg(long)]
    aux: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    chains: usize,
    #[arg(long, default_value_t = 7000)]
    iter: usize,
    #[arg(long, default_value_t = 3000)]
    warmup: usize,
    #[arg(long, default_value_t = 1)]
    thin: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = CliSampler::Hmc)]
    sampler: CliSampler,
    /// Credible level of the reconstruction ribbons
    #[arg(long, default_value_t = 0.9)]
    level: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum CliSampler {
    Hmc,
    Rwm,
}

impl From<CliSampler> for SamplerKind {
    fn from(s: CliSampler) -> Self {
        match s {
            CliSampler::Hmc => SamplerKind::Hmc,
            CliSampler::Rwm => SamplerKind::Rwm,
        }
    }
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    aux: Option<PathBuf>,
    /// Draw store from a previous approx fit (.bin or .csv)
    #[arg(long)]
    draws: PathBuf,
    #[arg(long, default_value_t = 0.9)]
    level: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PrevalenceArgs {
    /// Survey CSV: smooth raw proportions instead of rolling up draws
    #[arg(long)]
    survey: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    aux: Option<PathBuf>,
    #[arg(long)]
    draws: Option<PathBuf>,
    /// Rollup window (days a case keeps testing positive)
    #[arg(long, default_value_t = 14)]
    window: usize,
    /// Populations per stratum (falls back to the config's aux block)
    #[arg(long, value_delimiter = ',')]
    populations: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value_t = 4)]
    chains: usize,
    #[arg(long, default_value_t = 4000)]
    iter: usize,
    #[arg(long, default_value_t = 1500)]
    warmup: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    #[arg(long)]
    draws: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parse and execute a full argv. Exit codes: 0 success, 1 usage error,
/// 2 validation error, 3 numerical failure.
pub fn run_subcommand<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with successful exit
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli, &argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, argv: &[String]) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args, argv),
        Command::Moments(args) => cmd_moments(args, argv),
        Command::MomStudy(args) => cmd_mom_study(args, argv),
        Command::Consequences(args) => cmd_consequences(args, argv),
        Command::Fit(args) => cmd_fit(args, argv),
        Command::Reconstruct(args) => cmd_reconstruct(args, argv),
        Command::Prevalence(args) => cmd_prevalence(args, argv),
        Command::Diagnose(args) => cmd_diagnose(args, argv),
    }
}

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path)?;
    Ok(())
}

fn cmd_simulate(args: SimulateArgs, argv: &[String]) -> Result<()> {
    ensure_dir(&args.out)?;
    let params = ThinnedArParams::new(args.nu, args.phi, args.pi)?;
    for rep in 0..args.reps {
        let rep_seed = if args.reps == 1 { args.seed } else { derive_seed(args.seed, &[rep as u64]) };
        let sim = simulate_thinned_pois_ar(params, args.t_len, args.burnin, rep_seed)?;
        let path = args.out.join(format!("series_rep{rep:03}.csv"));
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        if args.no_x {
            writeln!(w, "stratum,t,y")?;
            for (t, y) in sim.y.iter().enumerate() {
                writeln!(w, "0,{},{y}", t + 1)?;
            }
        } else {
            writeln!(w, "stratum,t,x,y")?;
            for (t, (x, y)) in sim.x.iter().zip(&sim.y).enumerate() {
                writeln!(w, "0,{},{x},{y}", t + 1)?;
            }
        }
    }
    RunManifest::new("simulate", argv, &args.out)
        .with_seed(args.seed)
        .write(&args.out)
}

fn cmd_moments(args: MomentsArgs, argv: &[String]) -> Result<()> {
    let series = load_series(&args.data)?;
    let mut lines = vec!["stratum,mean,variance,acf1,phi_hat,pi_hat,nu_hat,flags".to_string()];
    for i in 0..series.strata {
        let m = sample_moments(&series.y[i])?;
        let est = mom_estimate(&series.y[i])?;
        let mut flags: Vec<&str> = Vec::new();
        if est.flags.phi_out_of_space {
            flags.push("phi");
        }
        if est.flags.pi_out_of_space {
            flags.push("pi");
        }
        if est.flags.nu_out_of_space {
            flags.push("nu");
        }
        let flags = if flags.is_empty() { "-".to_string() } else { flags.join("+") };
        lines.push(format!(
            "{i},{},{},{},{},{},{},{flags}",
            m.mean, m.variance, m.acf1, est.phi_hat, est.pi_hat, est.nu_hat
        ));
    }
    let text = lines.join("\n") + "\n";
    match &args.out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                ensure_dir(dir)?;
                RunManifest::new("moments", argv, dir).with_input(&args.data).write(dir)?;
            }
            std::fs::write(path, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_mom_study(args: MomStudyArgs, argv: &[String]) -> Result<()> {
    let grid: Vec<(f64, f64)> = args
        .phi
        .iter()
        .flat_map(|&phi| args.pi.iter().map(move |&pi| (phi, pi)))
        .collect();
    let rows = mom_study(&grid, args.nu, &args.lengths, args.reps, args.seed)?;
    ensure_dir(&args.out)?;
    let path = args.out.join("mom_study.csv");
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "phi,pi,T,q10,q50,q90,estimand")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{},{},{}", r.phi, r.pi, r.t_len, r.q10, r.q50, r.q90, r.estimand)?;
    }
    drop(w);
    RunManifest::new("mom-study", argv, &args.out).with_seed(args.seed).write(&args.out)
}

fn cmd_consequences(args: ConsequencesArgs, argv: &[String]) -> Result<()> {
    ensure_dir(&args.out)?;
    if let Some(pi) = args.divide_by_pi {
        let data = args.data.as_ref().ok_or_else(|| {
            Error::Validation("--divide-by-pi needs --data".into())
        })?;
        if !(pi > 0.0 && pi <= 1.0) {
            return Err(Error::Validation(format!("--divide-by-pi {pi} outside (0, 1]")));
        }
        let series = load_series(data)?;
        let path = args.out.join("scaled_series.csv");
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "stratum,t,y_scaled")?;
        for i in 0..series.strata {
            for (t, &y) in series.y[i].iter().enumerate() {
                writeln!(w, "{i},{},{}", t + 1, y as f64 / pi)?;
            }
        }
        drop(w);
        return RunManifest::new("consequences", argv, &args.out)
            .with_input(data)
            .write(&args.out);
    }
    let path = args.out.join("consequences.csv");
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        w,
        "pi,phi_lim,nu_lim,phi_prime,nu_prime,prop1_threshold,overestimates_nu,nu_prime_negative,quadratic_forms_disagree"
    )?;
    for k in 1..=args.grid {
        let pi = k as f64 / (args.grid + 1) as f64;
        let params = ThinnedArParams::new(args.nu, args.phi, pi)?;
        let lim = naive_limits(params)?;
        let der = derivative_formulas(params)?;
        let bounds = prop_bounds(pi, args.phi)?;
        writeln!(
            w,
            "{pi},{},{},{},{},{},{},{},{}",
            lim.phi_lim,
            lim.nu_lim,
            der.phi_prime,
            der.nu_prime,
            bounds.prop1_threshold,
            bounds.overestimates_nu,
            bounds.nu_prime_negative,
            bounds.quadratic_forms_disagree
        )?;
    }
    drop(w);
    RunManifest::new("consequences", argv, &args.out).write(&args.out)
}

fn chain_config(chains: usize, iter: usize, warmup: usize, thin: usize, seed: u64, sampler: CliSampler) -> ChainConfig {
    ChainConfig::new(chains, iter, warmup, seed)
        .with_sampler(sampler.into())
        .with_thin(thin)
}

fn load_model_inputs(
    config: &Path,
    data: &Path,
    aux: Option<&Path>,
) -> Result<(ModelSpec, ObservedSeries, Option<crate::data::AuxPrevalenceBlock>)> {
    let spec = ModelSpec::from_json(&std::fs::read_to_string(config)?)?;
    let series = load_series(data)?;
    let block = match (&spec.aux, aux) {
        (Some(cfg), Some(path)) => Some(io::aux_block_from(cfg, load_aux_rows(path)?)),
        (Some(_), None) => {
            return Err(Error::Validation(
                "the model config declares an aux block: pass --aux <survey.csv>".into(),
            ));
        }
        (None, Some(_)) => {
            return Err(Error::Validation(
                "--aux given but the model config has no aux block".into(),
            ));
        }
        (None, None) => None,
    };
    Ok((spec, series, block))
}

fn cmd_fit(args: FitArgs, argv: &[String]) -> Result<()> {
    ensure_dir(&args.out)?;
    let config = chain_config(args.chains, args.iter, args.warmup, args.thin, args.seed, args.sampler);
    match args.engine {
        Engine::Approx => {
            let cfg_path = args
                .config
                .as_ref()
                .ok_or_else(|| Error::Validation("--engine approx needs --config".into()))?;
            let (spec, series, aux) = load_model_inputs(cfg_path, &args.data, args.aux.as_deref())?;
            let model = ApproxModel::new(&spec, &series, aux)?;
            let store = run_chains(&model, &config)?;
            store.write_binary(args.out.join("draws.bin"))?;
            store.write_csv(args.out.join("draws.csv"))?;
            io::write_summary_csv(&summarize(&store)?, args.out.join("summary.csv"))?;
            let (recon, stats) = reconstruct_from_fit(&model, &store, args.level)?;
            if stats.excluded_draws > 0 {
                log::warn!("{} draws excluded from the reconstruction", stats.excluded_draws);
            }
            io::write_reconstruction_csv(&recon, args.out.join("reconstruction.csv"))?;
            RunManifest::new("fit", argv, &args.out)
                .with_config(cfg_path)?
                .with_input(&args.data)
                .with_seed(args.seed)
                .write(&args.out)
        }
        Engine::Exact => {
            let cfg_path = args
                .config
                .as_ref()
                .ok_or_else(|| Error::Validation("--engine exact needs --config".into()))?;
            let (spec, series, _aux) = load_model_inputs(cfg_path, &args.data, args.aux.as_deref())?;
            let store = run_exact_mcmc(&spec, &series, &config)?;
            store.write_binary(args.out.join("draws.bin"))?;
            store.write_csv(args.out.join("draws.csv"))?;
            io::write_summary_csv(&summarize(&store)?, args.out.join("summary.csv"))?;
            let recon = exact_reconstruction(&store, spec.t_len, args.level)?;
            io::write_reconstruction_csv(&recon, args.out.join("reconstruction.csv"))?;
            RunManifest::new("fit", argv, &args.out)
                .with_config(cfg_path)?
                .with_input(&args.data)
                .with_seed(args.seed)
                .write(&args.out)
        }
        Engine::Naive => {
            let series = load_series(&args.data)?;
            let path = args.out.join("estimates.csv");
            let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
            writeln!(w, "stratum,nu_hat,phi_hat,loglik,converged,iterations,se_nu,se_phi")?;
            for i in 0..series.strata {
                let fit = naive_pois_ar_mle(&series.y[i], None)?;
                writeln!(
                    w,
                    "{i},{},{},{},{},{},{},{}",
                    fit.nu_hat,
                    fit.phi_hat,
                    fit.loglik,
                    fit.converged,
                    fit.iterations,
                    fit.se_nu,
                    fit.se_phi
                )?;
            }
            drop(w);
            RunManifest::new("fit", argv, &args.out).with_input(&args.data).write(&args.out)
        }
        Engine::Mom => {
            let series = load_series(&args.data)?;
            let path = args.out.join("estimates.csv");
            let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
            writeln!(w, "stratum,phi_hat,pi_hat,nu_hat,flagged")?;
            for i in 0..series.strata {
                let est = mom_estimate(&series.y[i])?;
                writeln!(
                    w,
                    "{i},{},{},{},{}",
                    est.phi_hat,
                    est.pi_hat,
                    est.nu_hat,
                    est.flags.any()
                )?;
            }
            drop(w);
            RunManifest::new("fit", argv, &args.out).with_input(&args.data).write(&args.out)
        }
    }
}

fn cmd_reconstruct(args: ReconstructArgs, argv: &[String]) -> Result<()> {
    ensure_dir(&args.out)?;
    let (spec, series, aux) = load_model_inputs(&args.config, &args.data, args.aux.as_deref())?;
    let model = ApproxModel::new(&spec, &series, aux)?;
    let store = read_draws(&args.draws)?;
    let (recon, stats) = reconstruct_from_fit(&model, &store, args.level)?;
    if stats.excluded_draws > 0 {
        log::warn!("{} draws excluded from the reconstruction", stats.excluded_draws);
    }
    io::write_reconstruction_csv(&recon, args.out.join("reconstruction.csv"))?;
    RunManifest::new("reconstruct", argv, &args.out)
        .with_config(&args.config)?
        .with_input(&args.data)
        .with_input(&args.draws)
        .write(&args.out)
}

fn read_draws(path: &Path) -> Result<DrawStore> {
    if path.extension().is_some_and(|e| e == "csv") {
        DrawStore::read_csv(path)
    } else {
        DrawStore::read_binary(path)
    }
}

fn cmd_prevalence(args: PrevalenceArgs, argv: &[String]) -> Result<()> {
    ensure_dir(&args.out)?;
    if let Some(survey) = &args.survey {
        let rows = load_aux_rows(survey)?;
        let config = ChainConfig::new(args.chains, args.iter, args.warmup, args.seed);
        let sm = smooth_prevalence(&rows, &config)?;
        let path = args.out.join("prevalence.csv");
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "stratum,t,median,lo,hi")?;
        for p in &sm.points {
            writeln!(w, "{},{},{},{},{}", p.stratum, p.day, p.median, p.lo, p.hi)?;
        }
        drop(w);
        return RunManifest::new("prevalence", argv, &args.out)
            .with_input(survey)
            .with_seed(args.seed)
            .write(&args.out);
    }
    let (config_path, data_path, draws_path) = match (&args.config, &args.data, &args.draws) {
        (Some(c), Some(d), Some(dr)) => (c, d, dr),
        _ => {
            return Err(Error::Validation(
                "prevalence rollup needs --config, --data and --draws (or --survey for smoothing)"
                    .into(),
            ));
        }
    };
    let (spec, series, aux) = load_model_inputs(config_path, data_path, args.aux.as_deref())?;
    let populations = match (&args.populations, &spec.aux) {
        (Some(p), _) => p.clone(),
        (None, Some(cfg)) => cfg.populations.clone(),
        (None, None) => {
            return Err(Error::Validation(
                "no populations: pass --populations or use a config with an aux block".into(),
            ));
        }
    };
    if populations.len() != spec.strata {
        return Err(Error::Validation(format!(
            "{} populations for {} strata",
            populations.len(),
            spec.strata
        )));
    }
    let model = ApproxModel::new(&spec, &series, aux)?;
    let store = read_draws(draws_path)?;
    // per-draw integer reconstructions rolled up to prevalence
    let rows: Vec<Vec<f64>> = (0..store.n_chains())
        .flat_map(|c| store.chains[c].chunks(store.n_params).map(|r| r.to_vec()).collect::<Vec<_>>())
        .collect();
    let path = args.out.join("prevalence.csv");
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "stratum,t,median,lo,hi")?;
    let alpha = (1.0 - args.level) / 2.0;
    for i in 0..spec.strata {
        let mut per_draw: Vec<Vec<u64>> = Vec::with_capacity(rows.len());
        for row in &rows {
            let u = model.untransform_params(row)?;
            let states = model.latent_states(&u)?;
            let zs = vec![states.zstar[i].clone()];
            let ls = vec![states.lambda[i].clone()];
            let recon = crate::reconstruct::reconstruct_counts(&zs, &ls, spec.count_family)?;
            if let Some(x) = recon.x.into_iter().next() {
                per_draw.push(x);
            }
        }
        let rolled = prevalence_rollup(&per_draw, args.window, populations[i])?;
        let t_len = spec.t_len;
        for t in 0..t_len {
            let mut col: Vec<f64> = rolled.iter().map(|r| r[t]).collect();
            col.sort_by(|a, b| a.total_cmp(b));
            let q = |p: f64| crate::moments::quantile_type7(&col, p);
            writeln!(w, "{i},{},{},{},{}", t + 1, q(0.5), q(alpha), q(1.0 - alpha))?;
        }
    }
    drop(w);
    RunManifest::new("prevalence", argv, &args.out)
        .with_config(config_path)?
        .with_input(data_path)
        .with_input(draws_path)
        .write(&args.out)
}

fn cmd_diagnose(args: DiagnoseArgs, argv: &[String]) -> Result<()> {
    let store = read_draws(&args.draws)?;
    let summaries = summarize(&store)?;
    match &args.out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                ensure_dir(dir)?;
                RunManifest::new("diagnose", argv, dir).with_input(&args.draws).write(dir)?;
            }
            io::write_summary_csv(&summaries, path)?;
        }
        None => {
            let mut text = String::from("parameter,mean,sd,median,q2.5,q5,q95,q97.5,ess,rhat,mcse\n");
            for s in &summaries {
                text.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}\n",
                    s.name, s.mean, s.sd, s.median, s.q2_5, s.q5, s.q95, s.q97_5, s.ess, s.rhat,
                    s.mcse
                ));
            }
            print!("{text}");
        }
    }
    Ok(())
}
