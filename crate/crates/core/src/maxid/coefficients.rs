//! Level-dependent extremal coefficients, the tail-dependence coefficient and
//! the effective dependence range.

use serde::{Deserialize, Serialize};

use super::exponent::{exponent_V2, PairContext};
use super::marginal::{mass_breakpoints, MarginalTable};
use crate::error::{Error, Result};
use crate::model::design::{Site, StudyDesign};
use crate::model::kappa::log_kappa_density;
use crate::model::{correlation_matrix, lambda_range, DependenceParams};
use crate::numerics::{std_normal_sf, GaussLegendre, MvnProblem};

/// Default number of QMC points for `θ_D`.
pub const THETA_D_QMC_POINTS: usize = 1 << 13;

fn check_table(table: &MarginalTable, p: &DependenceParams) -> Result<()> {
    if !table.matches(p.alpha, p.beta) {
        return Err(Error::InvalidInput("marginal table does not match (alpha, beta)".into()));
    }
    Ok(())
}

/// Model-scale level whose marginal probability equals that of the
/// unit-Fréchet level `z`.
fn model_level(z: f64, table: &MarginalTable) -> Result<f64> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::InvalidInput(format!("level must be positive and finite, got {z}")));
    }
    Ok(table.quantile((-1.0 / z).exp()))
}

/// Pairwise extremal coefficient `θ₂(z)` at unit-Fréchet level `z`.
pub fn theta2(z: f64, pair: &PairContext, p: &DependenceParams, table: &MarginalTable) -> Result<f64> {
    check_table(table, p)?;
    let t = model_level(z, table)?;
    Ok(z * exponent_V2(t, t, pair, p)?)
}

/// `θ_D` estimate with its quasi-Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// `D`-variate extremal coefficient at unit-Fréchet level `z` for the given
/// sites of `design`.
///
/// The integral over magnitudes uses a composite Gauss-Legendre rule; each
/// node needs one `D`-variate normal CDF, estimated by QMC with a common
/// seed so the integrand stays smooth in `r`.
pub fn theta_d(
    z: f64,
    design: &StudyDesign,
    sites: &[usize],
    time: f64,
    p: &DependenceParams,
    table: &MarginalTable,
    qmc_points: usize,
    seed: u64,
) -> Result<ThetaEstimate> {
    check_table(table, p)?;
    p.validate()?;
    let d = sites.len();
    if !(2..=20).contains(&d) {
        return Err(Error::InvalidInput(format!("theta_d needs 2 ≤ D ≤ 20 sites, got {d}")));
    }
    if let Some(&bad) = sites.iter().find(|&&i| i >= design.n_sites()) {
        return Err(Error::InvalidInput(format!("site index {bad} out of range")));
    }
    let t = model_level(z, table)?;
    let chosen: Vec<Site> = sites.iter().map(|&i| design.sites[i].clone()).collect();
    let sub = StudyDesign { sites: chosen, times: vec![time], metric: design.metric };

    let (mut edges, _) = mass_breakpoints(t, p.alpha, p.beta);
    if p.nu != 0.0 {
        // Correlation changes with r: halve each panel.
        let mut finer = Vec::with_capacity(2 * edges.len());
        for w in edges.windows(2) {
            finer.push(w[0]);
            finer.push(0.5 * (w[0] + w[1]));
        }
        finer.push(*edges.last().unwrap());
        edges = finer;
    }
    let gl = GaussLegendre::new(12);
    let (mut value, mut err) = (0.0, 0.0);
    for w in edges.windows(2) {
        let half = 0.5 * (w[1] - w[0]);
        for (xi, wi) in gl.nodes.iter().zip(&gl.weights) {
            let u = w[0] + half * (1.0 + xi);
            let r = u.exp();
            let x = t / r;
            let mass = (log_kappa_density(r, p.alpha, p.beta) + u).exp() * half * wi;
            if mass == 0.0 {
                continue;
            }
            // Exceedance probability of at least one site, bracketed by the
            // single-site and union bounds to absorb cancellation near 0.
            let sf = std_normal_sf(x);
            let exceed = if sf < 1e-300 {
                0.0
            } else {
                let corr = correlation_matrix(&sub, time, r, p)?;
                let est = MvnProblem::new(&vec![x; d], &corr)?.estimate(qmc_points, seed);
                err += mass * est.std_error;
                (1.0 - est.value).clamp(sf, (d as f64 * sf).min(1.0))
            };
            value += mass * exceed;
        }
    }
    Ok(ThetaEstimate { value: z * value, std_error: z * err })
}

/// Coefficient of upper tail dependence `[(1+ρ)/2]^{β/(β+2)}` of the
/// stationary model with `ν = 0`. Inputs outside `−1 < ρ ≤ 1`, `β ≥ 0` give NaN.
pub fn eta_closed_form(rho: f64, beta: f64) -> f64 {
    if !(rho > -1.0 && rho <= 1.0 && beta >= 0.0) {
        return f64::NAN;
    }
    if beta == 0.0 || rho == 1.0 {
        return 1.0;
    }
    ((1.0 + rho) / 2.0).powf(beta / (beta + 2.0))
}

/// Smallest distance at which `θ₂(z)` reaches `target`, for two sites at
/// altitude `alt` and time `time` (covariates held fixed).
pub fn effective_range(
    p: &DependenceParams,
    alt: f64,
    time: f64,
    z: f64,
    target: f64,
    table: &MarginalTable,
) -> Result<f64> {
    check_table(table, p)?;
    if target <= 1.0 {
        return Ok(0.0);
    }
    let theta_at = |h: f64| theta2(z, &PairContext::at_distance(h, alt, time), p, table);
    // θ₂ increases with distance towards its value at zero correlation.
    let scale = lambda_range(alt, time, p);
    let limit = theta_at(scale * 1e4)?;
    if target >= limit - 1e-9 {
        return Err(Error::Unreachable { target, min: 1.0, max: limit });
    }
    let (mut lo, mut hi) = (0.0, scale);
    while theta_at(hi)? < target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let th = theta_at(mid)?;
        if (th - target).abs() < 1e-5 || hi - lo <= 1e-12 * hi {
            return Ok(mid);
        }
        if th < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::design::rescaled_times;

    fn setup(alpha: f64, beta: f64, nu: f64) -> (DependenceParams, MarginalTable) {
        let p = DependenceParams { alpha, beta, nu, lambda0: 0.5f64.ln(), ..Default::default() };
        (p, MarginalTable::build(alpha, beta).unwrap())
    }

    #[test]
    fn coincident_sites_have_unit_coefficient() {
        let (p, table) = setup(1.0, 1.0, 0.5);
        let pair = PairContext::from_geometry([0.0, 0.0], 0.0, 0.0, 0.5);
        for &z in &[0.5, 2.0, 30.0] {
            let th = theta2(z, &pair, &p, &table).unwrap();
            // Limited by the bivariate normal tail at the capped correlation.
            assert!((th - 1.0).abs() < 1e-5, "{z}: {th}");
        }
    }

    #[test]
    fn max_stable_limit_is_level_free() {
        let (p, table) = setup(1.0, 0.0, 0.0);
        let pair = PairContext::at_distance(0.5, 0.0, 0.5);
        let values: Vec<f64> = [0.5, 1.0, 5.0, 100.0].iter().map(|&z| theta2(z, &pair, &p, &table).unwrap()).collect();
        let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(hi - lo < 1e-3, "{values:?}");
    }

    #[test]
    fn dependence_weakens_with_level() {
        let (p, table) = setup(1.0, 1.0, 0.5);
        let pair = PairContext::at_distance(0.5, 0.0, 0.5);
        let first = theta2(1.0, &pair, &p, &table).unwrap();
        let mut last = first;
        for &z in &[3.0, 10.0, 100.0, 1e4] {
            let th = theta2(z, &pair, &p, &table).unwrap();
            assert!(th >= last - 1e-9 && th <= 2.0, "{z}: {th}");
            last = th;
        }
        assert!(last > first + 0.2);
    }

    #[test]
    fn theta_d_two_sites_matches_theta2() {
        let (p, table) = setup(1.0, 1.0, 0.25);
        let design = StudyDesign::planar(&[(0.0, 0.0, 0.0), (0.5, 0.0, 0.0)], rescaled_times(1)).unwrap();
        let pair = PairContext::new(&design, 0, 1, 0.5, 1.0).unwrap();
        for &z in &[1.0, 5.0] {
            let exact = theta2(z, &pair, &p, &table).unwrap();
            let est = theta_d(z, &design, &[0, 1], 0.5, &p, &table, 4096, 3).unwrap();
            assert!((est.value - exact).abs() < 1e-3 + 3.0 * est.std_error, "{z}: {est:?} vs {exact}");
        }
    }

    #[test]
    fn theta_d_within_bounds() {
        let (p, table) = setup(1.0, 2.0, 0.5);
        let coords: Vec<(f64, f64, f64)> = (0..5).map(|i| (0.3 * i as f64, 0.1 * (i % 2) as f64, 0.0)).collect();
        let design = StudyDesign::planar(&coords, rescaled_times(1)).unwrap();
        let est = theta_d(2.0, &design, &[0, 1, 2, 3, 4], 0.5, &p, &table, 2048, 1).unwrap();
        assert!(est.value >= 1.0 - 1e-6 && est.value <= 5.0 + 1e-6, "{est:?}");
        let far: Vec<(f64, f64, f64)> = (0..4).map(|i| (100.0 * i as f64, 0.0, 0.0)).collect();
        let far = StudyDesign::planar(&far, rescaled_times(1)).unwrap();
        let (p, table) = setup(1.0, 30.0, 0.0);
        let est = theta_d(50.0, &far, &[0, 1, 2, 3], 0.5, &p, &table, 2048, 1).unwrap();
        assert!(est.value > 3.99, "{est:?}");
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta_closed_form(1.0, 3.0), 1.0);
        assert_eq!(eta_closed_form(0.3, 0.0), 1.0);
        assert!((eta_closed_form(0.0, 2.0) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(eta_closed_form(-1.0, 1.0).is_nan());
    }

    #[test]
    fn effective_range_round_trip() {
        let (p, table) = setup(1.0, 1.0, 0.25);
        let h = effective_range(&p, 0.0, 0.5, 100.0, 1.9, &table).unwrap();
        let th = theta2(100.0, &PairContext::at_distance(h, 0.0, 0.5), &p, &table).unwrap();
        assert!((th - 1.9).abs() < 1e-3, "{h}: {th}");
        assert_eq!(effective_range(&p, 0.0, 0.5, 2.0, 1.0, &table).unwrap(), 0.0);
    }

    #[test]
    fn effective_range_shrinks_with_altitude_when_slope_negative() {
        let (mut p, table) = setup(1.0, 1.0, 0.25);
        p.lambda1 = -0.31;
        let low = effective_range(&p, 0.0, 0.5, 100.0, 1.9, &table).unwrap();
        let high = effective_range(&p, 2.0, 0.5, 100.0, 1.9, &table).unwrap();
        assert!(high < low);
    }

    #[test]
    fn unreachable_target_reports_range() {
        // The extremal-t limit at zero correlation stays below 2.
        let (p, table) = setup(1.0, 0.0, 0.0);
        match effective_range(&p, 0.0, 0.5, 2.0, 1.99, &table) {
            Err(Error::Unreachable { max, .. }) => assert!(max < 1.99),
            other => panic!("{other:?}"),
        }
    }
}
