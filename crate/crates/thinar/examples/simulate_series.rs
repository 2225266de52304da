//! Simulate a binomially thinned Poisson autoregression and compare the
//! sample moments of the reported series with their closed forms.

use thinar::moments::{observed_moments_from_latent, sample_moments, stationary_latent_moments};
use thinar::simulate::{simulate_thinned_pois_ar, ThinnedArParams};

fn main() {
    let params = ThinnedArParams::new(10.0, 0.4, 0.4).unwrap();
    let t_len = 1_000_000;
    let sim = simulate_thinned_pois_ar(params, t_len, 100, 20260101).unwrap();

    let latent = stationary_latent_moments(params.nu, params.phi).unwrap();
    let predicted = observed_moments_from_latent(&latent, params.phi, params.pi).unwrap();
    let observed = sample_moments(&sim.y).unwrap();

    println!("thinned Poisson autoregression: nu = 10, phi = 0.4, pi = 0.4, T = {t_len}");
    println!();
    println!("                 predicted    sample");
    println!("mean             {:>9.4}  {:>9.4}", predicted.mean, observed.mean);
    println!("variance         {:>9.4}  {:>9.4}", predicted.variance, observed.variance);
    println!("lag-1 autocorr   {:>9.4}  {:>9.4}", predicted.acf1, observed.acf1);
    println!();

    let latent_sample = sample_moments(&sim.x).unwrap();
    println!("latent series:   mean {:.4} (stationary {:.4}),", latent_sample.mean, latent.mean);
    println!("                 variance {:.4} (stationary {:.4})", latent_sample.variance, latent.variance);
    println!();
    println!(
        "thinning dampens the autocorrelation: {:.4} -> {:.4}",
        latent_sample.acf1, observed.acf1
    );
}
