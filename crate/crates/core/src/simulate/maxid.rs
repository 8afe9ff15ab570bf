//! Poisson spectral simulation of the max-id process.
//!
//! Points `R_1 > R_2 > …` come from inverting κ at the arrival times of a
//! unit-rate Poisson process; each carries an independent Gaussian field
//! whose correlation may depend on `R_i`. The pointwise maximum of
//! `R_i W_i(s)` is truncated once the union bound
//! `D·{1 − Φ(min_s Z(s)/R_i)}` on a further change drops below ε.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::replicate_rng;
use crate::data::{DataScale, DatasetMetadata, FlaggedReplicate, MaximaDataset};
use crate::error::{Error, Result};
use crate::maxid::MarginalTable;
use crate::model::{correlation_cholesky, kappa_inverse_log, DependenceParams, StudyDesign};
use crate::numerics::{std_normal_sf, CholeskyFactor};

/// Output scale of a simulated dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputScale {
    Model,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub replicates: usize,
    pub seed: u64,
    /// Truncation tolerance on the union bound.
    pub epsilon: f64,
    pub max_points: usize,
    pub scale: OutputScale,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self { replicates: 50, seed: 0, epsilon: 1e-4, max_points: 100_000, scale: OutputScale::Model }
    }
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidInput("replicate count must be positive".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.1) {
            return Err(Error::InvalidInput(format!("epsilon must lie in (0, 0.1), got {}", self.epsilon)));
        }
        if self.max_points == 0 {
            return Err(Error::InvalidInput("max_points must be positive".into()));
        }
        Ok(())
    }
}

/// One point of the spectral representation.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPoint {
    pub magnitude: f64,
    pub field: Vec<f64>,
}

/// Maxima of one replicate on the model scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub maxima: Vec<f64>,
    pub points_used: usize,
    /// Union bound at the last magnitude considered.
    pub bound: f64,
    pub converged: bool,
}

/// Cholesky factors keyed on the time and on `(1+r)^{−ν}` rounded to three
/// significant digits.
struct FactorCache {
    design: StudyDesign,
    params: DependenceParams,
    map: Mutex<HashMap<(u64, i64, i32), Arc<CholeskyFactor>>>,
}

impl FactorCache {
    fn new(design: &StudyDesign, params: &DependenceParams) -> Self {
        Self { design: design.clone(), params: *params, map: Mutex::new(HashMap::new()) }
    }

    fn get(&self, time: f64, r: f64) -> Result<Arc<CholeskyFactor>> {
        let p = &self.params;
        let time_key = if p.lambda2 == 0.0 { 0 } else { time.to_bits() };
        let (mantissa, exponent, r_eff) = if p.nu == 0.0 {
            (0, 0, 0.0)
        } else {
            let g = (-p.nu * r.ln_1p()).exp();
            let e = g.log10().floor() as i32 - 2;
            let m = (g / 10f64.powi(e)).round();
            let gq = m * 10f64.powi(e);
            (m as i64, e, (gq.powf(-1.0 / p.nu) - 1.0).max(0.0))
        };
        let key = (time_key, mantissa, exponent);
        if let Some(f) = self.map.lock().expect("cache lock").get(&key) {
            return Ok(f.clone());
        }
        let f = Arc::new(correlation_cholesky(&self.design, time, r_eff, p)?);
        self.map.lock().expect("cache lock").insert(key, f.clone());
        Ok(f)
    }
}

/// Simulates replicate `k` on the model scale.
///
/// Exposed for diagnostics; [`simulate_maxid`] is the usual entry point.
pub fn simulate_replicate(
    design: &StudyDesign,
    params: &DependenceParams,
    spec: &SimulationSpec,
    k: usize,
) -> Result<ReplicateOutcome> {
    let cache = FactorCache::new(design, params);
    replicate_with_cache(design, params, spec, k, &cache)
}

fn replicate_with_cache(
    design: &StudyDesign,
    params: &DependenceParams,
    spec: &SimulationSpec,
    k: usize,
    cache: &FactorCache,
) -> Result<ReplicateOutcome> {
    let d = design.n_sites();
    let time = design.times.get(k).copied().unwrap_or(0.5);
    let mut rng = replicate_rng(spec.seed, k);
    let mut arrival = 0.0;
    let mut z = vec![f64::NEG_INFINITY; d];
    let mut eps = vec![0.0; d];
    let mut w = vec![0.0; d];
    let mut bound = f64::INFINITY;
    for i in 0..spec.max_points {
        let e: f64 = Exp1.sample(&mut rng);
        arrival += e;
        // κ([R_i, ∞)) equals the i-th arrival time.
        let r = kappa_inverse_log(arrival.ln(), params.alpha, params.beta);
        if i > 0 {
            let zmin = z.iter().cloned().fold(f64::INFINITY, f64::min);
            bound = d as f64 * std_normal_sf(zmin / r);
            if bound < spec.epsilon {
                return Ok(ReplicateOutcome { maxima: z, points_used: i, bound, converged: true });
            }
        }
        let chol = cache.get(time, r)?;
        for v in eps.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        chol.lower.lower_mul_vec(&eps, &mut w);
        for (zj, wj) in z.iter_mut().zip(&w) {
            *zj = zj.max(r * wj);
        }
    }
    Ok(ReplicateOutcome { maxima: z, points_used: spec.max_points, bound, converged: false })
}

/// Simulates `spec.replicates` independent replicates at the sites of `design`.
///
/// Replicate `k` uses time `design.times[k]` (0.5 when absent) and its own
/// RNG stream, so output does not depend on scheduling.
pub fn simulate_maxid(design: &StudyDesign, params: &DependenceParams, spec: &SimulationSpec) -> Result<MaximaDataset> {
    design.validate()?;
    params.validate()?;
    spec.validate()?;
    let cache = FactorCache::new(design, params);
    let outcomes: Vec<Result<ReplicateOutcome>> = (0..spec.replicates)
        .into_par_iter()
        .map(|k| replicate_with_cache(design, params, spec, k, &cache))
        .collect();
    let table = match spec.scale {
        OutputScale::Uniform => Some(MarginalTable::build(params.alpha, params.beta)?),
        OutputScale::Model => None,
    };
    let d = design.n_sites();
    let mut values = Vec::with_capacity(spec.replicates * d);
    let mut flagged = Vec::new();
    for (k, o) in outcomes.into_iter().enumerate() {
        let o = o?;
        if !o.converged {
            flagged.push(FlaggedReplicate { replicate: k, attained_bound: o.bound });
        }
        for &z in &o.maxima {
            values.push(match &table {
                // A maximum can be negative only if every field was; its CDF is then ~0.
                Some(t) => t.cdf(z.max(f64::MIN_POSITIVE)).clamp(1e-300, 1.0 - f64::EPSILON / 2.0),
                None => z,
            });
        }
    }
    let mut meta = DatasetMetadata::new(match spec.scale {
        OutputScale::Model => DataScale::Model,
        OutputScale::Uniform => DataScale::Uniform,
    });
    meta.seed = Some(spec.seed);
    meta.epsilon = Some(spec.epsilon);
    meta.params = Some(*params);
    meta.generator = Some("max-id".into());
    meta.flagged = flagged;
    MaximaDataset::new(design.sites.iter().map(|s| s.name.clone()).collect(), spec.replicates, values, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxid::marginal_V;
    use crate::model::rescaled_times;

    fn two_sites(n: usize) -> StudyDesign {
        StudyDesign::planar(&[(0.0, 0.0, 0.0), (0.5, 0.0, 0.0)], rescaled_times(n)).unwrap()
    }

    fn ks(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
        sample.sort_by(f64::total_cmp);
        let n = sample.len() as f64;
        sample.iter().enumerate().fold(0.0_f64, |m, (i, &x)| {
            let f = cdf(x);
            m.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
        })
    }

    #[test]
    fn margins_follow_model_cdf() {
        let n = 2000;
        let p = DependenceParams { alpha: 1.0, beta: 1.0, nu: 0.25, lambda0: -0.5, ..Default::default() };
        let spec = SimulationSpec { replicates: n, seed: 3, ..Default::default() };
        let data = simulate_maxid(&two_sites(n), &p, &spec).unwrap();
        assert!(data.metadata.flagged.is_empty());
        let mut col = data.column(0);
        let d = ks(&mut col, |z| (-marginal_V(z, 1.0, 1.0).unwrap()).exp());
        assert!(d < 1.63 / (n as f64).sqrt(), "KS {d}");
    }

    #[test]
    fn seed_determinism_and_uniform_scale() {
        let p = DependenceParams { alpha: 2.0, beta: 0.5, nu: 0.5, lambda0: -1.0, ..Default::default() };
        let spec = SimulationSpec { replicates: 30, seed: 12, scale: OutputScale::Uniform, ..Default::default() };
        let a = simulate_maxid(&two_sites(30), &p, &spec).unwrap();
        let b = simulate_maxid(&two_sites(30), &p, &spec).unwrap();
        assert!(a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!(a.values().iter().all(|&u| u > 0.0 && u < 1.0));
        assert_eq!(a.scale(), DataScale::Uniform);
    }

    #[test]
    fn point_budget_flags_replicates() {
        let p = DependenceParams { alpha: 1.0, beta: 0.0, ..Default::default() };
        let spec = SimulationSpec { replicates: 5, seed: 1, max_points: 1, ..Default::default() };
        let data = simulate_maxid(&two_sites(5), &p, &spec).unwrap();
        assert_eq!(data.metadata.flagged.len(), 5);
        assert!(data.metadata.flagged.iter().all(|f| f.attained_bound.is_infinite()));
    }

    #[test]
    fn more_points_change_converged_maxima_little() {
        let p = DependenceParams { alpha: 1.0, beta: 1.0, nu: 0.25, lambda0: -0.5, ..Default::default() };
        let design = two_sites(100);
        let spec = SimulationSpec { replicates: 100, seed: 8, ..Default::default() };
        let loose = SimulationSpec { epsilon: 1e-8, ..spec.clone() };
        let cache = FactorCache::new(&design, &p);
        let mut changed = 0;
        for k in 0..100 {
            let a = replicate_with_cache(&design, &p, &spec, k, &cache).unwrap();
            let b = replicate_with_cache(&design, &p, &loose, k, &cache).unwrap();
            assert!(a.converged && b.points_used >= a.points_used);
            if a.maxima != b.maxima {
                changed += 1;
            }
        }
        // Each replicate changes with probability at most ~ε.
        assert!(changed <= 1, "{changed}");
    }

    #[test]
    fn rejects_bad_spec() {
        let p = DependenceParams::default();
        let spec = SimulationSpec { replicates: 0, ..Default::default() };
        assert!(simulate_maxid(&two_sites(1), &p, &spec).is_err());
        let spec = SimulationSpec { epsilon: 0.5, ..Default::default() };
        assert!(simulate_maxid(&two_sites(1), &p, &spec).is_err());
    }
}
