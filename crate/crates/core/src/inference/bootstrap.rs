//! Parametric bootstrap of a dependence fit.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_dependence, FitOptions, FitResult};
use super::weights::PairWeights;
use crate::data::MaximaDataset;
use crate::error::{Error, Result};
use crate::model::{DependenceParams, Family, StudyDesign};
use crate::simulate::{simulate_gaussian_copula, simulate_maxid, simulate_t_copula, OutputScale, SimulationSpec};

/// Share of non-converged refits above which the ensemble carries a warning.
pub const NONCONVERGENCE_WARNING: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamInterval {
    pub name: String,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapEnsemble {
    pub seed: u64,
    pub replicates: Vec<FitResult>,
    /// 2.5% / 97.5% percentiles over converged refits, per free parameter.
    pub intervals: Vec<ParamInterval>,
    pub n_converged: usize,
    pub warning: Option<String>,
}

/// Seed of bootstrap sample `b`.
pub fn bootstrap_seed(seed: u64, b: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(b as u64);
    rng.next_u64()
}

/// Uniform-scale sample of `n` replicates from a fitted model.
pub fn simulate_fitted(
    design: &StudyDesign,
    family: Family,
    params: &DependenceParams,
    n: usize,
    seed: u64,
) -> Result<MaximaDataset> {
    match family {
        Family::GaussianCopula => simulate_gaussian_copula(design, params, n, seed),
        Family::TCopula => simulate_t_copula(design, params, params.alpha, n, seed),
        _ => {
            let spec = SimulationSpec { replicates: n, seed, scale: OutputScale::Uniform, ..Default::default() };
            simulate_maxid(design, params, &spec)
        }
    }
}

/// Type-7 (linear interpolation) sample quantile of sorted values.
pub fn sample_quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `B` simulate-and-refit cycles from `fit`. Each sample reuses the
/// missing-value pattern of `mask` and is refitted from the original
/// estimates (`options.restarts` is honoured).
pub fn parametric_bootstrap(
    fit: &FitResult,
    mask: &MaximaDataset,
    design: &StudyDesign,
    weights: &PairWeights,
    b: usize,
    seed: u64,
    options: &FitOptions,
) -> Result<BootstrapEnsemble> {
    if b < 2 {
        return Err(Error::InvalidInput(format!("bootstrap needs B >= 2, got {b}")));
    }
    if !fit.converged {
        return Err(Error::InvalidInput("bootstrap requires a converged fit".into()));
    }
    let n = mask.n_replicates();
    let replicates: Vec<FitResult> = (0..b)
        .into_par_iter()
        .map(|r| {
            let mut sample = simulate_fitted(design, fit.spec.family, &fit.params, n, bootstrap_seed(seed, r))?;
            sample.stations = mask.stations.clone();
            sample.apply_mask(mask)?;
            fit_dependence(&sample, design, &fit.spec, weights, &fit.params, options)
        })
        .collect::<Result<_>>()?;
    let converged: Vec<&FitResult> = replicates.iter().filter(|r| r.converged).collect();
    let mut intervals = Vec::new();
    for id in fit.spec.free_params() {
        let mut v: Vec<f64> = converged.iter().map(|r| r.params.get(id)).collect();
        v.sort_by(f64::total_cmp);
        intervals.push(ParamInterval {
            name: id.name().to_string(),
            estimate: fit.params.get(id),
            lower: sample_quantile(&v, 0.025),
            upper: sample_quantile(&v, 0.975),
        });
    }
    let n_converged = converged.len();
    let failed = b - n_converged;
    let warning = (failed as f64 > NONCONVERGENCE_WARNING * b as f64)
        .then(|| format!("{failed} of {b} bootstrap refits did not converge"));
    Ok(BootstrapEnsemble { seed, replicates, intervals, n_converged, warning })
}
