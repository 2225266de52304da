//! Unconstrained-to-constrained transforms and the stick-breaking simplex.

use crate::numerics::{logistic, logit};

/// A flat unconstrained parameter vector paired with its layout, the shape
/// handed to [`super::ApproxModel::log_posterior`] by the samplers.
#[derive(Debug, Clone)]
pub struct UnconstrainedVector(pub Vec<f64>);

impl UnconstrainedVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Stick-breaking map from `K - 1` unconstrained values to a `K`-simplex.
///
/// Returns `(theta, stick_fractions, log_jacobian)`. The zero vector maps to
/// the uniform simplex.
pub(crate) fn stick_breaking(u: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
    let k = u.len() + 1;
    let mut theta = vec![0.0; k];
    let mut zs = vec![0.0; k - 1];
    let mut remaining = 1.0f64;
    let mut log_jac = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        let z = logistic(ui - ((k - 1 - i) as f64).ln());
        zs[i] = z;
        theta[i] = z * remaining;
        log_jac += z.ln() + (-z).ln_1p() + remaining.ln();
        remaining *= 1.0 - z;
    }
    theta[k - 1] = remaining;
    (theta, zs, log_jac)
}

/// Inverse of [`stick_breaking`] for interior simplex points.
pub(crate) fn stick_breaking_inverse(theta: &[f64]) -> Vec<f64> {
    let k = theta.len();
    let mut u = Vec::with_capacity(k - 1);
    let mut remaining = 1.0f64;
    for (i, &th) in theta.iter().take(k - 1).enumerate() {
        let z = th / remaining;
        u.push(logit(z) + ((k - 1 - i) as f64).ln());
        remaining -= th;
    }
    u
}

/// Pull a free gradient `d_theta` (length `K`) back through the stick-breaking
/// map, adding the log-Jacobian's own gradient. `zs` are the stick fractions
/// from the forward pass.
pub(crate) fn stick_breaking_pullback(d_theta: &[f64], zs: &[f64], grad_u: &mut [f64]) {
    let k = d_theta.len();
    debug_assert_eq!(zs.len(), k - 1);
    debug_assert_eq!(grad_u.len(), k - 1);
    // recompute remaining-stick values r_i (before segment i)
    let mut r = vec![0.0; k];
    r[0] = 1.0;
    for i in 0..k - 1 {
        r[i + 1] = r[i] * (1.0 - zs[i]);
    }
    // theta_{k-1} = r_{k-1}
    let mut rbar = d_theta[k - 1];
    for i in (0..k - 1).rev() {
        let zbar = d_theta[i] * r[i] - rbar * r[i] + 1.0 / zs[i] - 1.0 / (1.0 - zs[i]);
        let rbar_new = d_theta[i] * zs[i] + rbar * (1.0 - zs[i]) + 1.0 / r[i];
        grad_u[i] += zbar * zs[i] * (1.0 - zs[i]);
        rbar = rbar_new;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_maps_to_uniform() {
        let (theta, _, _) = stick_breaking(&[0.0; 4]);
        for &t in &theta {
            assert!((t - 0.2).abs() < 1e-14);
        }
        assert!((theta.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn round_trip() {
        let u = vec![0.3, -1.2, 0.7, 2.0, -0.4];
        let (theta, _, _) = stick_breaking(&u);
        let back = stick_breaking_inverse(&theta);
        for (a, b) in u.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn jacobian_matches_finite_difference_volume() {
        // d theta_i / d u_j determinant (first K-1 coordinates) vs log_jac
        let u = vec![0.5, -0.3, 0.9];
        let k = u.len() + 1;
        let (_, _, log_jac) = stick_breaking(&u);
        let h = 1e-6;
        let mut jac = vec![vec![0.0; k - 1]; k - 1];
        for j in 0..k - 1 {
            let mut up = u.clone();
            up[j] += h;
            let mut dn = u.clone();
            dn[j] -= h;
            let (tu, _, _) = stick_breaking(&up);
            let (td, _, _) = stick_breaking(&dn);
            for i in 0..k - 1 {
                jac[i][j] = (tu[i] - td[i]) / (2.0 * h);
            }
        }
        // 3x3 determinant
        let det = jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1])
            - jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0])
            + jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]);
        assert!((det.abs().ln() - log_jac).abs() < 1e-5, "{} vs {log_jac}", det.abs().ln());
    }

    #[test]
    fn pullback_matches_finite_difference() {
        // L(u) = sum_i w_i theta_i(u) + log_jac(u)
        let w = [0.7, -0.2, 1.3, 0.4];
        let u = vec![0.2, -0.8, 0.5];
        let f = |u: &[f64]| {
            let (theta, _, lj) = stick_breaking(u);
            theta.iter().zip(&w).map(|(t, wi)| t * wi).sum::<f64>() + lj
        };
        let (_, zs, _) = stick_breaking(&u);
        let mut grad = vec![0.0; 3];
        stick_breaking_pullback(&w, &zs, &mut grad);
        let h = 1e-6;
        for j in 0..3 {
            let mut up = u.clone();
            up[j] += h;
            let mut dn = u.clone();
            dn[j] -= h;
            let fd = (f(&up) - f(&dn)) / (2.0 * h);
            assert!((grad[j] - fd).abs() < 1e-6, "coord {j}: {} vs {fd}", grad[j]);
        }
    }
}
