//! Bivariate exponent function `V(z1, z2)` of the max-id model and its
//! partial derivatives, by adaptive quadrature over the magnitudes `r`.

use serde::{Deserialize, Serialize};

use super::marginal::{mass_breakpoints, MarginalTable};
use crate::error::{Error, Result};
use crate::model::design::StudyDesign;
use crate::model::kappa::log_kappa_density;
use crate::model::{lambda_range, DependenceParams, PairKernel};
use crate::numerics::{
    bvn_upper, integrate_panels, integrate_semi_infinite_vec, std_normal_cdf, std_normal_log_sf,
    std_normal_logpdf, QuadratureSpec, Substitution,
};

/// Correlations are capped here inside integrands.
pub const RHO_CAP: f64 = 1.0 - 1e-12;

/// Geometry, time and weight of one site pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairContext {
    pub site1: usize,
    pub site2: usize,
    /// Displacement `s1 − s2` in distance units.
    pub h: [f64; 2],
    pub distance: f64,
    pub alt1: f64,
    pub alt2: f64,
    pub time: f64,
    pub weight: f64,
    pub quad: QuadratureSpec,
}

impl PairContext {
    pub fn new(design: &StudyDesign, i: usize, j: usize, time: f64, weight: f64) -> Result<Self> {
        if i >= design.n_sites() || j >= design.n_sites() || i == j {
            return Err(Error::InvalidInput(format!("invalid site pair ({i}, {j})")));
        }
        if !(weight >= 0.0) {
            return Err(Error::InvalidInput(format!("pair weight must be >= 0, got {weight}")));
        }
        let distance = design.distance(i, j);
        if !(distance > 0.0) {
            return Err(Error::InvalidInput(format!("sites {i} and {j} coincide")));
        }
        Ok(Self {
            site1: i,
            site2: j,
            h: design.displacement(i, j),
            distance,
            alt1: design.sites[i].alt,
            alt2: design.sites[j].alt,
            time,
            weight,
            quad: QuadratureSpec::default(),
        })
    }

    /// Free-standing pair at displacement `h` (coincident sites allowed, for diagnostics).
    pub fn from_geometry(h: [f64; 2], alt1: f64, alt2: f64, time: f64) -> Self {
        Self {
            site1: 0,
            site2: 1,
            h,
            distance: h[0].hypot(h[1]),
            alt1,
            alt2,
            time,
            weight: 1.0,
            quad: QuadratureSpec::default(),
        }
    }

    /// Pair at distance `d` along the first axis, both sites at altitude `alt`.
    pub fn at_distance(d: f64, alt: f64, time: f64) -> Self {
        Self::from_geometry([d, 0.0], alt, alt, time)
    }

    pub fn with_quadrature(mut self, quad: QuadratureSpec) -> Self {
        self.quad = quad;
        self
    }

    pub fn kernel(&self, p: &DependenceParams) -> PairKernel {
        let l1 = lambda_range(self.alt1, self.time, p);
        let l2 = lambda_range(self.alt2, self.time, p);
        PairKernel::new(self.h, l1, l2, p)
    }
}

/// `V` and its first and mixed partial derivatives at `(z1, z2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentPartials {
    pub v: f64,
    pub v1: f64,
    pub v2: f64,
    pub v12: f64,
}

impl ExponentPartials {
    /// `log{exp(−V)(V1 V2 − V12)}`, the log of the bivariate density.
    pub fn log_pair_density(&self) -> f64 {
        -self.v + (self.v1 * self.v2 - self.v12).ln()
    }
}

fn check_levels(z1: f64, z2: f64) -> Result<()> {
    if !(z1 > 0.0 && z1.is_finite() && z2 > 0.0 && z2.is_finite()) {
        return Err(Error::InvalidInput(format!("levels must be positive and finite, got ({z1}, {z2})")));
    }
    Ok(())
}

/// Breakpoints and normalising log-height for a pair of levels.
fn pair_breakpoints(z1: f64, z2: f64, kernel: &PairKernel, alpha: f64, beta: f64) -> (Vec<f64>, f64) {
    let (mut b1, g1) = mass_breakpoints(z1, alpha, beta);
    let (b2, g2) = mass_breakpoints(z2, alpha, beta);
    b1.extend(b2);
    // Where the magnitude-dependent correlation changes fastest.
    if kernel.nu > 0.0 && kernel.m > 0.0 {
        let rc = kernel.m.powf(-1.0 / kernel.nu) - 1.0;
        if rc > 0.0 {
            let uc = rc.ln();
            let (lo, hi) = (b1.iter().cloned().fold(f64::INFINITY, f64::min), b1.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
            for d in [-2.0, -1.0, 0.0, 1.0, 2.0] {
                let u = uc + d / kernel.nu;
                if u > lo && u < hi {
                    b1.push(u);
                }
            }
        }
    }
    b1.sort_by(f64::total_cmp);
    b1.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
    (b1, g1.max(g2))
}

/// Evaluates the (scaled) direct-form integrands in `u = log r`.
struct PairIntegrand<'a> {
    z1: f64,
    z2: f64,
    kernel: &'a PairKernel,
    alpha: f64,
    beta: f64,
    lnorm: f64,
}

impl PairIntegrand<'_> {
    /// `[V, z1·V1, z2·V2, z1 z2·V12]` integrands times `e^{−lnorm}`.
    fn eval(&self, u: f64, want_partials: bool) -> [f64; 4] {
        let r = u.exp();
        let x1 = self.z1 / r;
        let x2 = self.z2 / r;
        let rho = self.kernel.rho(r).min(RHO_CAP);
        let ld = log_kappa_density(r, self.alpha, self.beta) + u - self.lnorm;
        let joint = bvn_upper(x1, x2, rho);
        let v = (std_normal_log_sf(x1) + ld).exp() + (std_normal_log_sf(x2) + ld).exp()
            - (joint.ln() + ld).exp();
        if !want_partials {
            return [v, 0.0, 0.0, 0.0];
        }
        let s = ((1.0 - rho) * (1.0 + rho)).sqrt();
        let c1 = (x1 - rho * x2) / s;
        let c2 = (x2 - rho * x1) / s;
        let lp1 = std_normal_logpdf(x1) + ld;
        let lp2 = std_normal_logpdf(x2) + ld;
        [
            v,
            -x1 * lp1.exp() * std_normal_cdf(c2),
            -x2 * lp2.exp() * std_normal_cdf(c1),
            -x1 * x2 * (lp1 + std_normal_logpdf(c2)).exp() / s,
        ]
    }
}

fn integrate_pair(
    z1: f64,
    z2: f64,
    pair: &PairContext,
    p: &DependenceParams,
    want_partials: bool,
) -> Result<ExponentPartials> {
    check_levels(z1, z2)?;
    p.validate()?;
    let kernel = pair.kernel(p);
    let (bps, lnorm) = pair_breakpoints(z1, z2, &kernel, p.alpha, p.beta);
    let f = PairIntegrand { z1, z2, kernel: &kernel, alpha: p.alpha, beta: p.beta, lnorm };
    let raw = match pair.quad.substitution {
        Substitution::LogTransform => integrate_panels(|u| f.eval(u, want_partials), &bps, &pair.quad)?,
        Substitution::RationalTransform => {
            let scale = bps[bps.len() / 2].exp();
            integrate_semi_infinite_vec(
                |r| {
                    let v = f.eval(r.ln(), want_partials);
                    v.map(|x| x / r)
                },
                &pair.quad,
                scale,
            )?
        }
    };
    let norm = lnorm.exp();
    Ok(ExponentPartials {
        v: raw[0] * norm,
        v1: raw[1] * norm / z1,
        v2: raw[2] * norm / z2,
        v12: raw[3] * norm / (z1 * z2),
    })
}

/// Bivariate exponent `V(z1, z2) = ∫ {1 − Φ₂(z1/r, z2/r; ρ(r))} κ(dr)`.
#[allow(non_snake_case)]
pub fn exponent_V2(z1: f64, z2: f64, pair: &PairContext, p: &DependenceParams) -> Result<f64> {
    Ok(integrate_pair(z1, z2, pair, p, false)?.v)
}

/// `(V, V1, V2, V12)` by differentiation under the integral sign, with the
/// magnitude-dependent correlation evaluated inside every integrand.
pub fn exponent_partials(
    z1: f64,
    z2: f64,
    pair: &PairContext,
    p: &DependenceParams,
) -> Result<ExponentPartials> {
    integrate_pair(z1, z2, pair, p, true)
}

/// Log copula density of the max-id model at uniform scores `(u1, u2)`.
pub fn log_copula_pair_density(
    u1: f64,
    u2: f64,
    pair: &PairContext,
    p: &DependenceParams,
    table: &MarginalTable,
) -> Result<f64> {
    if !table.matches(p.alpha, p.beta) {
        return Err(Error::InvalidInput("marginal table does not match (alpha, beta)".into()));
    }
    let z1 = table.quantile(u1);
    let z2 = table.quantile(u2);
    let e = exponent_partials(z1, z2, pair, p)?;
    Ok(e.log_pair_density() - table.log_density(z1) - table.log_density(z2))
}

/// Copula density of the max-id model at uniform scores `(u1, u2)`.
pub fn copula_pair_density(
    u1: f64,
    u2: f64,
    pair: &PairContext,
    p: &DependenceParams,
    table: &MarginalTable,
) -> Result<f64> {
    Ok(log_copula_pair_density(u1, u2, pair, p, table)?.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxid::marginal::marginal_V;
    use crate::numerics::student_t_cdf;

    fn params(alpha: f64, beta: f64, nu: f64, lambda0: f64) -> DependenceParams {
        DependenceParams { alpha, beta, nu, lambda0, ..Default::default() }
    }

    /// Extremal-t exponent on the model scale: margins are `c_α z^{-α}`.
    fn extremal_t(z1: f64, z2: f64, alpha: f64, rho: f64) -> f64 {
        let c = 2f64.powf(alpha / 2.0 - 1.0) * statrs::function::gamma::gamma((alpha + 1.0) / 2.0)
            / std::f64::consts::PI.sqrt();
        let b = ((alpha + 1.0) / (1.0 - rho * rho)).sqrt();
        c * (z1.powf(-alpha) * student_t_cdf(b * (z2 / z1 - rho), alpha + 1.0)
            + z2.powf(-alpha) * student_t_cdf(b * (z1 / z2 - rho), alpha + 1.0))
    }

    #[test]
    fn reduces_to_extremal_t() {
        for &(alpha, rho) in &[(1.0, 0.5f64), (2.0, 0.1), (5.0, 0.9)] {
            let p = params(alpha, 0.0, 0.0, 0.0);
            let pair = PairContext::at_distance(-rho.ln(), 0.0, 0.5);
            for &(z1, z2) in &[(0.5, 0.5), (1.0, 3.0), (7.0, 2.0)] {
                let v = exponent_V2(z1, z2, &pair, &p).unwrap();
                let oracle = extremal_t(z1, z2, alpha, rho);
                assert!(((v - oracle) / oracle).abs() < 1e-6, "{alpha} {rho} ({z1},{z2}): {v} vs {oracle}");
            }
        }
    }

    #[test]
    fn large_second_level_gives_margin() {
        let p = params(1.5, 0.8, 0.5, -0.3);
        let pair = PairContext::at_distance(0.4, 0.0, 0.5);
        let v = exponent_V2(1.2, 1e7, &pair, &p).unwrap();
        let m = marginal_V(1.2, 1.5, 0.8).unwrap();
        assert!(((v - m) / m).abs() < 1e-6, "{v} vs {m}");
    }

    #[test]
    fn coincident_sites_are_comonotone() {
        let p = params(1.0, 1.0, 0.25, -0.5);
        let pair = PairContext::from_geometry([0.0, 0.0], 0.0, 0.0, 0.5);
        for &(z1, z2) in &[(0.7, 2.0), (3.0, 1.1)] {
            let v = exponent_V2(z1, z2, &pair, &p).unwrap();
            let m = marginal_V(z1.min(z2), 1.0, 1.0).unwrap();
            assert!(((v - m) / m).abs() < 1e-6, "{v} vs {m}");
        }
    }

    #[test]
    fn bounded_by_margins() {
        let p = params(2.0, 0.5, 1.0, -1.0);
        let pair = PairContext::at_distance(0.3, 0.0, 0.5);
        for &(z1, z2) in &[(0.3, 0.5), (1.0, 1.0), (4.0, 0.8)] {
            let v = exponent_V2(z1, z2, &pair, &p).unwrap();
            let m1 = marginal_V(z1, 2.0, 0.5).unwrap();
            let m2 = marginal_V(z2, 2.0, 0.5).unwrap();
            assert!(v >= m1.max(m2) * (1.0 - 1e-9) && v <= (m1 + m2) * (1.0 + 1e-9));
        }
    }

    #[test]
    fn partials_match_finite_differences() {
        let cases = [
            (params(1.0, 0.0, 0.0, 0.0), 0.5, 1.0, 2.0),
            (params(1.0, 1.0, 0.5, -0.5), 0.5, 0.8, 1.3),
            (params(3.0, 0.3, 3.2, 0.2), 0.2, 1.5, 1.1),
        ];
        for (p, d, z1, z2) in cases {
            let pair = PairContext::at_distance(d, 0.0, 0.5)
                .with_quadrature(QuadratureSpec { rel_tol: 1e-12, abs_tol: 1e-16, max_subdivisions: 4000, ..Default::default() });
            let e = exponent_partials(z1, z2, &pair, &p).unwrap();
            let v = |a: f64, b: f64| exponent_V2(a, b, &pair, &p).unwrap();
            let h1 = 1e-4 * z1;
            let h2 = 1e-4 * z2;
            let fd1 = (v(z1 + h1, z2) - v(z1 - h1, z2)) / (2.0 * h1);
            let fd12 = (v(z1 + h1, z2 + h2) - v(z1 + h1, z2 - h2) - v(z1 - h1, z2 + h2) + v(z1 - h1, z2 - h2))
                / (4.0 * h1 * h2);
            assert!(((e.v1 - fd1) / e.v1).abs() < 1e-5, "V1 {} vs {fd1}", e.v1);
            assert!(((e.v12 - fd12) / e.v12).abs() < 1e-4, "V12 {} vs {fd12}", e.v12);
            assert!(e.v1 <= 0.0 && e.v2 <= 0.0 && e.v12 <= 0.0);
            assert!(e.v1 * e.v2 - e.v12 >= 0.0);
        }
    }

    #[test]
    fn substitutions_agree() {
        let p = params(1.3, 0.7, 0.8, -0.4);
        let base = PairContext::at_distance(0.5, 0.0, 0.5);
        let a = exponent_partials(0.9, 1.7, &base, &p).unwrap();
        let rational = base.clone().with_quadrature(
            QuadratureSpec { rel_tol: 1e-10, max_subdivisions: 4000, ..Default::default() }
                .with_substitution(Substitution::RationalTransform),
        );
        let b = exponent_partials(0.9, 1.7, &rational, &p).unwrap();
        for (x, y) in [(a.v, b.v), (a.v1, b.v1), (a.v2, b.v2), (a.v12, b.v12)] {
            assert!(((x - y) / y).abs() < 1e-6, "{x} vs {y}");
        }
    }

    #[test]
    fn copula_density_symmetric_for_exchangeable_pair() {
        let p = params(1.0, 1.0, 0.25, -0.5);
        let table = MarginalTable::build(1.0, 1.0).unwrap();
        let pair = PairContext::at_distance(0.5, 0.0, 0.5);
        let a = copula_pair_density(0.2, 0.7, &pair, &p, &table).unwrap();
        let b = copula_pair_density(0.7, 0.2, &pair, &p, &table).unwrap();
        assert!(((a - b) / a).abs() < 1e-10 && a > 0.0);
    }

    #[test]
    fn far_sites_give_independence_copula() {
        // With ρ = 0 dependence only enters through shared magnitudes, which a
        // steep κ tail concentrates near r = 1.
        let p = params(1.0, 30.0, 0.0, -2.0);
        let table = MarginalTable::build(1.0, 30.0).unwrap();
        let pair = PairContext::at_distance(50.0, 0.0, 0.5);
        for &(u1, u2) in &[(0.1, 0.9), (0.5, 0.5), (0.95, 0.3)] {
            let c = copula_pair_density(u1, u2, &pair, &p, &table).unwrap();
            assert!((c - 1.0).abs() < 1e-3, "{u1} {u2}: {c}");
        }
    }

    #[test]
    fn mismatched_table_is_rejected() {
        let table = MarginalTable::build(1.0, 1.0).unwrap();
        let pair = PairContext::at_distance(0.5, 0.0, 0.5);
        assert!(log_copula_pair_density(0.5, 0.5, &pair, &params(2.0, 1.0, 0.0, 0.0), &table).is_err());
    }
}
