//! Bivariate Gaussian and Student-t copula densities.

use statrs::function::gamma::ln_gamma;

use crate::numerics::{std_normal_quantile, student_t_logpdf, student_t_quantile};

/// Scores are clamped to `[1e-10, 1 − 1e-10]` before inversion.
pub const COPULA_U_CLAMP: f64 = 1e-10;

/// Correlations are kept strictly inside (−1, 1).
const RHO_LIMIT: f64 = 1.0 - 1e-10;

fn clamp_u(u: f64) -> f64 {
    u.clamp(COPULA_U_CLAMP, 1.0 - COPULA_U_CLAMP)
}

/// Gaussian copula log density from normal scores `(x1, x2)`.
pub fn gaussian_copula_logdensity_scores(x1: f64, x2: f64, rho: f64) -> f64 {
    let rho = rho.clamp(-RHO_LIMIT, RHO_LIMIT);
    let s = (1.0 - rho) * (1.0 + rho);
    -0.5 * s.ln() - (rho * rho * (x1 * x1 + x2 * x2) - 2.0 * rho * (x1 * x2)) / (2.0 * s)
}

pub fn gaussian_pair_copula_logdensity(u1: f64, u2: f64, rho: f64) -> f64 {
    let x1 = std_normal_quantile(clamp_u(u1));
    let x2 = std_normal_quantile(clamp_u(u2));
    gaussian_copula_logdensity_scores(x1, x2, rho)
}

/// Student-t copula log density from t scores `(x1, x2)` with `dof` degrees of freedom.
pub fn t_copula_logdensity_scores(x1: f64, x2: f64, rho: f64, dof: f64) -> f64 {
    let rho = rho.clamp(-RHO_LIMIT, RHO_LIMIT);
    let s = (1.0 - rho) * (1.0 + rho);
    let q = (x1 * x1 + x2 * x2 - 2.0 * rho * (x1 * x2)) / s;
    let joint = ln_gamma(0.5 * (dof + 2.0)) - ln_gamma(0.5 * dof) - (dof * std::f64::consts::PI).ln() - 0.5 * s.ln()
        - 0.5 * (dof + 2.0) * (q / dof).ln_1p();
    joint - student_t_logpdf(x1, dof) - student_t_logpdf(x2, dof)
}

pub fn t_pair_copula_logdensity(u1: f64, u2: f64, rho: f64, dof: f64) -> f64 {
    let x1 = student_t_quantile(clamp_u(u1), dof);
    let x2 = student_t_quantile(clamp_u(u2), dof);
    t_copula_logdensity_scores(x1, x2, rho, dof)
}
