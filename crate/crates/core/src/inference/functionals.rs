//! Exceedance probabilities of spatial summaries of an observed event.

use serde::{Deserialize, Serialize};

use super::bootstrap::simulate_fitted;
use crate::error::{Error, Result};
use crate::margins::{gev_quantile, GevParams};
use crate::model::{DependenceParams, Family, StudyDesign};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpatialSummary {
    Max,
    Min,
    Mean,
}

impl SpatialSummary {
    pub const ALL: [SpatialSummary; 3] = [SpatialSummary::Max, SpatialSummary::Min, SpatialSummary::Mean];

    pub fn name(self) -> &'static str {
        match self {
            SpatialSummary::Max => "max",
            SpatialSummary::Min => "min",
            SpatialSummary::Mean => "mean",
        }
    }

    pub fn apply(self, values: &[f64]) -> f64 {
        match self {
            SpatialSummary::Max => values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            SpatialSummary::Min => values.iter().cloned().fold(f64::INFINITY, f64::min),
            SpatialSummary::Mean => values.iter().sum::<f64>() / values.len() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceedanceEstimate {
    pub summary: SpatialSummary,
    pub observed: f64,
    /// Monte Carlo estimate of `P{summary(Z) ≥ observed}`.
    pub probability: f64,
    /// `1/probability` in replicate units; `None` when no simulated field exceeded.
    pub return_period: Option<f64>,
    pub simulations: usize,
}

/// Simulates `n` fields at replicate time `time`, maps them to the data
/// scale with per-station GEV margins and compares spatial max / min / mean
/// with those of `event`. Stations where `event` is missing are ignored.
#[allow(clippy::too_many_arguments)]
pub fn spatial_exceedance(
    design: &StudyDesign,
    family: Family,
    params: &DependenceParams,
    time: f64,
    margins: &[GevParams],
    event: &[f64],
    n: usize,
    seed: u64,
) -> Result<Vec<ExceedanceEstimate>> {
    let d = design.n_sites();
    if margins.len() != d || event.len() != d {
        return Err(Error::InvalidInput(format!(
            "need one margin and one event value per station ({d}), got {} and {}",
            margins.len(),
            event.len()
        )));
    }
    let observed: Vec<usize> = (0..d).filter(|&j| event[j].is_finite()).collect();
    if observed.is_empty() {
        return Err(Error::InvalidInput("event has no observed station".into()));
    }
    let mut at_time = design.clone();
    at_time.times = vec![time; n];
    let sample = simulate_fitted(&at_time, family, params, n, seed)?;
    let ev: Vec<f64> = observed.iter().map(|&j| event[j]).collect();
    let mut hits = [0usize; 3];
    let mut field = Vec::with_capacity(observed.len());
    for k in 0..n {
        field.clear();
        field.extend(observed.iter().map(|&j| gev_quantile(sample.raw(k, j), &margins[j])));
        for (h, s) in hits.iter_mut().zip(SpatialSummary::ALL) {
            if s.apply(&field) >= s.apply(&ev) {
                *h += 1;
            }
        }
    }
    Ok(SpatialSummary::ALL
        .iter()
        .zip(hits)
        .map(|(&s, h)| {
            let probability = h as f64 / n as f64;
            ExceedanceEstimate {
                summary: s,
                observed: s.apply(&ev),
                probability,
                return_period: (h > 0).then(|| 1.0 / probability),
                simulations: n,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rescaled_times;

    #[test]
    fn independent_sites_match_closed_form() {
        let design = StudyDesign::planar(&[(0.0, 0.0, 0.0), (50.0, 0.0, 0.0)], rescaled_times(1)).unwrap();
        let g = GevParams::new(0.0, 1.0, 0.0);
        let q = gev_quantile(0.8, &g);
        // ρ ≈ 0 at distance 50: P(max ≥ q) = 1 − 0.64, P(min ≥ q) = 0.04.
        let p = DependenceParams { lambda0: -1.0, ..Default::default() };
        let n = 20000;
        let est = spatial_exceedance(&design, Family::GaussianCopula, &p, 0.5, &[g, g], &[q, q], n, 3).unwrap();
        let se = |p: f64| (p * (1.0 - p) / n as f64).sqrt();
        assert!((est[0].probability - 0.36).abs() < 4.0 * se(0.36), "{:?}", est[0]);
        assert!((est[1].probability - 0.04).abs() < 4.0 * se(0.04), "{:?}", est[1]);
        assert_eq!(est[2].observed, q);
        let missing = spatial_exceedance(&design, Family::GaussianCopula, &p, 0.5, &[g, g], &[q, f64::NAN], 100, 3).unwrap();
        assert_eq!(missing[0].observed, q);
        assert!(spatial_exceedance(&design, Family::GaussianCopula, &p, 0.5, &[g], &[q, q], 10, 3).is_err());
    }
}
