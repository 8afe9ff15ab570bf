//! Student-t distribution functions.

use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use super::normal::{std_normal_cdf, std_normal_quantile};

/// Student-t CDF with `dof` degrees of freedom (any positive real).
pub fn student_t_cdf(x: f64, dof: f64) -> f64 {
    if x.is_nan() || !(dof > 0.0) {
        return f64::NAN;
    }
    if x == 0.0 {
        return 0.5;
    }
    if x.is_infinite() {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    if dof > 1e12 {
        return std_normal_cdf(x);
    }
    let x2 = x * x;
    // Tail probability P(T > |x|) = I_{dof/(dof+x²)}(dof/2, 1/2) / 2; the
    // complementary form is used when x² is small relative to dof.
    let tail = if x2 < dof {
        let w = x2 / (dof + x2);
        0.5 * (1.0 - beta_reg(0.5, 0.5 * dof, w))
    } else {
        let w = dof / (dof + x2);
        0.5 * beta_reg(0.5 * dof, 0.5, w)
    };
    if x > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

pub fn student_t_logpdf(x: f64, dof: f64) -> f64 {
    ln_gamma(0.5 * (dof + 1.0))
        - ln_gamma(0.5 * dof)
        - 0.5 * (dof * std::f64::consts::PI).ln()
        - 0.5 * (dof + 1.0) * (x * x / dof).ln_1p()
}

pub fn student_t_pdf(x: f64, dof: f64) -> f64 {
    student_t_logpdf(x, dof).exp()
}

/// Inverse Student-t CDF by safeguarded Newton iteration from the normal quantile.
pub fn student_t_quantile(p: f64, dof: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) || !(dof > 0.0) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    if p == 0.5 {
        return 0.0;
    }
    // Work in the lower half and reflect.
    let (q, sign) = if p > 0.5 { (1.0 - p, 1.0) } else { (p, -1.0) };
    let lq = q.ln();
    // Start: normal quantile, or the Cauchy-like power tail for small dof.
    let mut x = -std_normal_quantile(q);
    let tail_start = {
        // P(T > x) ~ c x^-dof
        let lc = ln_gamma(0.5 * (dof + 1.0))
            - ln_gamma(0.5 * dof)
            - 0.5 * (dof * std::f64::consts::PI).ln()
            + (dof - 1.0) * 0.5 * dof.ln();
        ((lc - lq - dof.ln()) / dof).exp()
    };
    if tail_start.is_finite() && tail_start > x {
        x = tail_start;
    }
    let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
    for _ in 0..200 {
        let sf = 1.0 - student_t_cdf(x, dof);
        let sf = if x > 1.0 { student_t_cdf(-x, dof) } else { sf };
        if sf > q {
            lo = x;
        } else {
            hi = x;
        }
        // Newton in log space of the tail: d log sf / dx = -pdf / sf
        let step = (sf.ln() - lq) * sf / student_t_pdf(x, dof);
        let mut next = x + step;
        if !next.is_finite() || next <= lo || next >= hi {
            next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * x.max(1.0) };
        }
        if (next - x).abs() <= 1e-15 * x.abs().max(1e-300) {
            x = next;
            break;
        }
        x = next;
    }
    sign * x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn closed_forms() {
        for dof in [0.5, 1.0, 3.3, 30.0] {
            assert_eq!(student_t_cdf(0.0, dof), 0.5);
        }
        assert!((student_t_cdf(1.0, 1.0) - 0.75).abs() < 1e-14);
        // dof = 2 closed form: 1/2 + x / (2 sqrt(2 + x^2))
        for &x in &[-3.0, -0.4, 0.7, 5.0] {
            let want = 0.5 + x / (2.0 * (2.0_f64 + x * x).sqrt());
            assert!((student_t_cdf(x, 2.0) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn matches_density_quadrature() {
        // P(0 < T < x) by Simpson on the density.
        for &(x, dof) in &[(2.5, 7.0), (1.3, 2.5), (4.0, 1.7), (0.2, 11.0)] {
            let mass = simpson(|t| student_t_pdf(t, dof), 0.0, x, 200_000);
            assert!((student_t_cdf(x, dof) - 0.5 - mass).abs() < 1e-12, "x={x} dof={dof}");
        }
    }

    #[test]
    fn large_dof_approaches_normal() {
        for &x in &[-2.0, -0.5, 0.3, 1.7] {
            let d = student_t_cdf(x, 1e6) - std_normal_cdf(x);
            assert!(d.abs() < 1e-5, "x={x} diff={d}");
        }
    }

    #[test]
    fn quantile_round_trip() {
        for &dof in &[0.7, 1.0, 2.0, 5.5, 40.0, 1e6] {
            for &p in &[1e-10, 1e-4, 0.02, 0.3, 0.5, 0.8, 0.999, 1.0 - 1e-9] {
                let x = student_t_quantile(p, dof);
                let back = student_t_cdf(x, dof);
                let tol = 1e-10 * p.min(1.0 - p) + 1e-15;
                assert!((back - p).abs() < tol.max(1e-13), "dof={dof} p={p} x={x} back={back}");
            }
        }
    }
}
