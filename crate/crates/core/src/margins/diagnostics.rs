//! Goodness-of-fit summaries for fitted margins.

use serde::{Deserialize, Serialize};

use super::fit::{MarginalFit, MuDesign};
use super::gev::gumbel_scale;
use crate::data::MaximaDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub distance: f64,
    pub p_value: f64,
}

/// Survival function of the Kolmogorov distribution, `P(K > x)`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.0 {
        // Theta-function form, accurate for small x.
        let t = -std::f64::consts::PI.powi(2) / (8.0 * x * x);
        let s: f64 = (0..50).map(|k| ((2 * k + 1) as f64).powi(2) * t).map(f64::exp).sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / x * s).clamp(0.0, 1.0);
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * x * x).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-300 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Two-sided one-sample Kolmogorov-Smirnov test with the asymptotic
/// p-value (Stephens' finite-sample correction of the argument).
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<KsResult> {
    let n = sample.len();
    if n < 5 {
        return Err(Error::InvalidInput(format!("KS test needs at least 5 values, got {n}")));
    }
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f);
    }
    let sq = nf.sqrt();
    Ok(KsResult { distance: d, p_value: kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d) })
}

/// Per-station KS row for uniform PIT scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationKs {
    pub station: String,
    pub n: usize,
    pub distance: f64,
    pub p_value: f64,
}

/// KS tests of each station's uniform scores against Unif(0, 1); stations
/// with fewer than 5 observations are skipped.
pub fn station_ks_table(uniform: &MaximaDataset) -> Vec<StationKs> {
    (0..uniform.n_stations())
        .filter_map(|j| {
            let col = uniform.column(j);
            ks_statistic(&col, |u| u.clamp(0.0, 1.0)).ok().map(|r| StationKs {
                station: uniform.stations[j].clone(),
                n: col.len(),
                distance: r.distance,
                p_value: r.p_value,
            })
        })
        .collect()
}

/// Pooled QQ data on the standard Gumbel scale: each observed cell is
/// mapped through `ξ⁻¹ log{1 + ξ(z−μ)/σ}`, sorted, and paired with the
/// Gumbel quantile at plotting position `i/(n+1)`. One row per observed cell.
pub fn gumbel_qq(data: &MaximaDataset, fit: &MarginalFit, design: &MuDesign) -> Vec<(f64, f64)> {
    let mut g = Vec::with_capacity(data.n_observed());
    for k in 0..data.n_replicates() {
        for j in 0..data.n_stations() {
            if let Some(z) = data.get(k, j) {
                let p = fit.params_at(design.row(k, j));
                let y = (z - p.mu) / p.sigma;
                // Outside the fitted support: push to the corresponding end.
                let v = gumbel_scale(y, p.xi).unwrap_or(if y > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY });
                g.push(v);
            }
        }
    }
    g.sort_by(f64::total_cmp);
    let n = g.len() as f64;
    g.into_iter()
        .enumerate()
        .map(|(i, e)| (e, -(-((i + 1) as f64 / (n + 1.0)).ln()).ln()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::std_normal_cdf;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_median_sample() {
        let r = ks_statistic(&[0.0; 5], std_normal_cdf).unwrap();
        assert!(r.distance >= 0.4);
        assert!(ks_statistic(&[0.0; 4], std_normal_cdf).is_err());
    }

    #[test]
    fn gross_misfit_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..1000).map(|_| rng.random::<f64>() + 3.0).collect();
        assert!(ks_statistic(&xs, |x| x.clamp(0.0, 1.0)).unwrap().p_value < 1e-6);
    }

    #[test]
    fn p_values_are_calibrated() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut rejections = 0;
        let runs = 400;
        for _ in 0..runs {
            let xs: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
            if ks_statistic(&xs, |x| x).unwrap().p_value < 0.1 {
                rejections += 1;
            }
        }
        // 10% nominal level; binomial sd ≈ 6.
        assert!((20..=60).contains(&rejections), "{rejections}");
    }

    #[test]
    fn kolmogorov_branches_agree() {
        let a = kolmogorov_sf(1.0 - 1e-12);
        let b = kolmogorov_sf(1.0);
        assert!((a - b).abs() < 1e-10);
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-4);
    }
}
