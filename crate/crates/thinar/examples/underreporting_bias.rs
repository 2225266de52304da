//! What a naive Poisson autoregression converges to when the data are
//! under-reported: the limiting (phi, nu) curves over the reporting
//! probability, the closed-form bias bounds, and a naive fit on simulated
//! thinned data landing on its probability limit.

use thinar::consequences::{
    derivative_formulas, naive_limits, naive_pois_ar_mle, prop_bounds,
};
use thinar::simulate::{simulate_thinned_pois_ar, ThinnedArParams};

fn main() {
    let (nu, phi) = (5.0, 0.8);
    println!("true parameters: nu = {nu}, phi = {phi}");
    println!();
    println!("   pi   phi_lim    nu_lim   phi'(pi)   nu'(pi)  over-estimates nu?");
    for k in 1..=9 {
        let pi = k as f64 / 10.0;
        let params = ThinnedArParams::new(nu, phi, pi).unwrap();
        let lim = naive_limits(params).unwrap();
        let der = derivative_formulas(params).unwrap();
        let bounds = prop_bounds(pi, phi).unwrap();
        println!(
            " {pi:.2}  {:>8.4}  {:>8.4}  {:>9.4}  {:>8.4}  {}",
            lim.phi_lim,
            lim.nu_lim,
            der.phi_prime,
            der.nu_prime,
            if bounds.overestimates_nu { "yes" } else { "no" }
        );
    }
    let crossing = (1.0 - phi * phi) / phi;
    println!();
    println!("the naive nu estimate crosses the truth at pi = (1 - phi^2)/phi = {crossing:.4}");
    println!("(above it the exogenous component is over-credited, the");
    println!(" reproduction factor under-credited)");
    println!();

    // naive conditional MLE on a long thinned simulation
    let pi = 0.4;
    let params = ThinnedArParams::new(nu, phi, pi).unwrap();
    let sim = simulate_thinned_pois_ar(params, 400_000, 100, 11).unwrap();
    let fit = naive_pois_ar_mle(&sim.y, None).unwrap();
    let lim = naive_limits(params).unwrap();
    println!("naive MLE on a T = 400000 thinned simulation at pi = {pi}:");
    println!("  phi_hat = {:.4}  (limit {:.4})", fit.phi_hat, lim.phi_lim);
    println!("  nu_hat  = {:.4}  (limit {:.4})", fit.nu_hat, lim.nu_lim);
}
