//! Generalised extreme-value distribution.

use serde::{Deserialize, Serialize};

/// Below this |ξ| the log-transformed argument uses its series in ξ.
pub const XI_SWITCH: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevParams {
    pub mu: f64,
    pub sigma: f64,
    pub xi: f64,
}

impl GevParams {
    pub fn new(mu: f64, sigma: f64, xi: f64) -> Self {
        Self { mu, sigma, xi }
    }

    /// Finite upper endpoint `μ − σ/ξ` when `ξ < 0`.
    pub fn upper_endpoint(&self) -> Option<f64> {
        (self.xi < 0.0).then(|| self.mu - self.sigma / self.xi)
    }
}

/// `ξ⁻¹ log(1 + ξ y)`, the standard-Gumbel value of `y = (z−μ)/σ`.
/// `None` outside the support.
#[inline]
pub fn gumbel_scale(y: f64, xi: f64) -> Option<f64> {
    if xi.abs() < XI_SWITCH {
        // log(1+ξy)/ξ = y − ξy²/2 + ξ²y³/3 − …
        return Some(y * (1.0 - xi * y / 2.0 + xi * xi * y * y / 3.0));
    }
    let t = xi * y;
    (t > -1.0).then(|| t.ln_1p() / xi)
}

/// `P(Z ≤ z)`.
pub fn gev_cdf(z: f64, p: &GevParams) -> f64 {
    match gumbel_scale((z - p.mu) / p.sigma, p.xi) {
        Some(s) => (-(-s).exp()).exp(),
        // Outside the support: below the lower endpoint (ξ > 0) or above the upper (ξ < 0).
        None => {
            if p.xi > 0.0 {
                0.0
            } else {
                1.0
            }
        }
    }
}

/// Quantile `z` with `P(Z ≤ z) = u`.
pub fn gev_quantile(u: f64, p: &GevParams) -> f64 {
    quantile_from_log_u(u.ln(), p)
}

fn quantile_from_log_u(log_u: f64, p: &GevParams) -> f64 {
    let g = -(-log_u).ln();
    let y = if p.xi == 0.0 { g } else { (p.xi * g).exp_m1() / p.xi };
    p.mu + p.sigma * y
}

/// Log density; `−∞` outside the support.
pub fn gev_logpdf(z: f64, p: &GevParams) -> f64 {
    if !(p.sigma > 0.0) {
        return f64::NEG_INFINITY;
    }
    match gumbel_scale((z - p.mu) / p.sigma, p.xi) {
        // (1 + 1/ξ) log(1+ξy) = (1 + ξ) s
        Some(s) => -p.sigma.ln() - (1.0 + p.xi) * s - (-s).exp(),
        None => f64::NEG_INFINITY,
    }
}

/// `M`-year return level, the `1 − 1/M` quantile.
pub fn return_level(m: f64, p: &GevParams) -> f64 {
    quantile_from_log_u((-1.0 / m).ln_1p(), p)
}
