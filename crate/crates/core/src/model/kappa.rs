//! Weibull-tailed mean measure κ of the magnitudes `R_i`.
//!
//! κ([r, ∞)) = r^{-β} exp{-α (r^β - 1)/β}, with the power-law limit r^{-α}
//! as β → 0. Below [`BETA_SWITCH`] the limit branch is used everywhere.

/// Threshold under which the β → 0 power-law branch is used.
pub const BETA_SWITCH: f64 = 1e-4;

#[inline]
fn is_power_law(beta: f64) -> bool {
    beta <= BETA_SWITCH
}

/// `log κ([r, ∞))`.
#[inline]
pub fn log_kappa_tail(r: f64, alpha: f64, beta: f64) -> f64 {
    let lr = r.ln();
    if is_power_law(beta) {
        -alpha * lr
    } else {
        -beta * lr - alpha * (beta * lr).exp_m1() / beta
    }
}

/// Mean measure of `[r, ∞)`.
#[inline]
pub fn kappa_tail(r: f64, alpha: f64, beta: f64) -> f64 {
    log_kappa_tail(r, alpha, beta).exp()
}

/// `log` of the intensity `-d κ([r,∞)) / dr`.
#[inline]
pub fn log_kappa_density(r: f64, alpha: f64, beta: f64) -> f64 {
    let lr = r.ln();
    if is_power_law(beta) {
        alpha.ln() - (alpha + 1.0) * lr
    } else {
        let rb = (beta * lr).exp();
        -alpha * (beta * lr).exp_m1() / beta + (beta / rb + alpha).ln() - lr
    }
}

/// Intensity of κ per unit `r`.
#[inline]
pub fn kappa_density(r: f64, alpha: f64, beta: f64) -> f64 {
    log_kappa_density(r, alpha, beta).exp()
}

/// Solves `kappa_tail(r) = e` for `r`.
///
/// Works in `s = log r`, where the log tail is concave and strictly
/// decreasing, so a safeguarded Newton iteration converges quickly.
pub fn kappa_inverse(e: f64, alpha: f64, beta: f64) -> f64 {
    debug_assert!(e > 0.0);
    kappa_inverse_log(e.ln(), alpha, beta)
}

/// Solves `log kappa_tail(r) = target`; usable where the mass itself underflows.
pub fn kappa_inverse_log(target: f64, alpha: f64, beta: f64) -> f64 {
    if is_power_law(beta) {
        return (-target / alpha).exp();
    }
    let g = |s: f64| -beta * s - alpha * (beta * s).exp_m1() / beta - target;
    let dg = |s: f64| -beta - alpha * (beta * s).exp();
    // Bracket [lo, hi] with g(lo) > 0 > g(hi), grown geometrically.
    let mut s = -target / (alpha + beta);
    let (mut lo, mut hi) = (s, s);
    let mut step = 1.0;
    while g(lo) <= 0.0 {
        lo -= step;
        step *= 2.0;
    }
    step = 1.0;
    while g(hi) >= 0.0 {
        hi += step;
        step *= 2.0;
    }
    s = s.clamp(lo, hi);
    for _ in 0..200 {
        let v = g(s);
        if v == 0.0 {
            break;
        }
        if v > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let mut next = s - v / dg(s);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - s).abs() <= 1e-15 * (1.0 + s.abs()) {
            s = next;
            break;
        }
        s = next;
    }
    s.exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_examples() {
        assert_eq!(kappa_tail(1.0, 3.0, 0.7), 1.0);
        assert!((kappa_tail(2.0, 2.0, 0.0) - 0.25).abs() < 1e-15);
        assert!((kappa_tail(2.0, 1.0, 1.0) - (-1.0f64).exp() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn density_examples() {
        assert!((kappa_density(1.0, 1.0, 1.0) - 2.0).abs() < 1e-14);
        assert!((kappa_density(2.0, 2.0, 0.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn density_is_negative_derivative_of_tail() {
        for &(a, b) in &[(1.0, 1.0), (0.5, 2.0), (3.0, 0.01), (1.0, 0.0)] {
            for &r in &[0.1, 0.7, 1.3, 5.0] {
                let h = 1e-6 * r;
                let fd = (kappa_tail(r - h, a, b) - kappa_tail(r + h, a, b)) / (2.0 * h);
                let d = kappa_density(r, a, b);
                assert!((fd - d).abs() <= 1e-6 * d.max(1.0), "{a} {b} {r}: {fd} vs {d}");
            }
        }
    }

    #[test]
    fn inverse_examples() {
        assert!((kappa_inverse(1.0, 2.0, 0.5) - 1.0).abs() < 1e-14);
        assert!((kappa_inverse(4.0, 1.0, 0.0) - 0.25).abs() < 1e-15);
        let e = (-1.0f64).exp() / 2.0;
        assert!((kappa_inverse(e, 1.0, 1.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_round_trip_wide_range() {
        for &(a, b) in &[(1.0, 1.0), (0.3, 3.0), (5.0, 0.2), (1.0, 2e-4)] {
            for k in -30..=30 {
                let e = 10f64.powf(k as f64 / 3.0);
                let r = kappa_inverse(e, a, b);
                let back = kappa_tail(r, a, b);
                assert!(((back - e) / e).abs() < 1e-10, "{a} {b} {e}: {back}");
            }
        }
    }

    #[test]
    fn jump_at_switch_is_first_order_in_beta() {
        // The two branches differ by r^{-α}·{exp(-β ℓ - αβℓ²/2 + O(β²)) - 1}, ℓ = log r,
        // so the jump at the switch is bounded by β·|ℓ|(1 + α|ℓ|/2) in relative terms.
        for &a in &[0.5, 1.0, 3.0] {
            for k in 0..=40 {
                let r: f64 = 10f64.powf(-2.0 + k as f64 / 10.0);
                let b = BETA_SWITCH * (1.0 + 1e-9);
                let full = kappa_tail(r, a, b);
                let limit = kappa_tail(r, a, 0.0);
                let l = r.ln().abs();
                let bound = 1.01 * b * l * (1.0 + a * l / 2.0) * limit + 1e-15;
                assert!((full - limit).abs() <= bound, "{a} {r}: {full} vs {limit}");
            }
        }
    }
}
