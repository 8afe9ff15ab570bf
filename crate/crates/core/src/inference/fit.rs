//! Multi-start simplex fitting of the dependence parameters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::objective::{EvalMode, PairwiseObjective};
use super::transform::ParamTransform;
use super::weights::PairWeights;
use crate::data::MaximaDataset;
use crate::error::{Error, Result};
use crate::model::{DependenceParams, ModelSpec, StudyDesign};
use crate::numerics::{nelder_mead, NelderMeadOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    /// Number of simplex runs; the first starts at the initial values.
    pub restarts: usize,
    pub optimizer: NelderMeadOptions,
    /// Seed of the start-point jitter for restarts after the first.
    pub seed: u64,
    /// Half-width of the uniform jitter on the transformed scale.
    pub jitter: f64,
    pub mode: EvalMode,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { restarts: 3, optimizer: NelderMeadOptions::default(), seed: 0, jitter: 0.5, mode: EvalMode::default() }
    }
}

/// One simplex run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartTrace {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Best objective after each iteration.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub spec: ModelSpec,
    /// Estimates on the natural scale (fixed parameters at their given values).
    pub params: DependenceParams,
    pub free: Vec<String>,
    /// Free parameters on the optimizer scale.
    pub transformed: Vec<f64>,
    /// Minimised negative log pairwise likelihood.
    pub objective: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub n_terms: usize,
    pub restarts: Vec<RestartTrace>,
}

/// Minimises the negative log pairwise likelihood over the free parameters
/// of `spec`, starting from `init` (fixed parameters keep their `init` values).
pub fn fit_dependence(
    data: &MaximaDataset,
    design: &StudyDesign,
    spec: &ModelSpec,
    weights: &PairWeights,
    init: &DependenceParams,
    options: &FitOptions,
) -> Result<FitResult> {
    if data.n_stations() < 2 || data.n_replicates() < 10 {
        return Err(Error::InvalidInput(format!(
            "fitting needs at least 2 stations and 10 replicates, got {} × {}",
            data.n_replicates(),
            data.n_stations()
        )));
    }
    if options.restarts == 0 {
        return Err(Error::InvalidInput("at least one optimizer start is required".into()));
    }
    let objective = PairwiseObjective::new(data, design, weights, *spec)?.with_mode(options.mode);
    let base = spec.normalize(init);
    base.validate()?;
    let transform = ParamTransform::new(spec);
    let x0 = transform.inverse(&base);
    let f = |x: &[f64]| objective.evaluate(&transform.forward(x, &base)).unwrap_or(f64::INFINITY);

    let mut runs = Vec::with_capacity(options.restarts);
    for r in 0..options.restarts {
        let start: Vec<f64> = if r == 0 {
            x0.clone()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            rng.set_stream(r as u64);
            x0.iter().map(|&x| x + rng.random_range(-options.jitter..=options.jitter)).collect()
        };
        let res = nelder_mead(f, &start, &options.optimizer);
        runs.push(RestartTrace {
            start,
            end: res.x,
            objective: res.f,
            iterations: res.iterations,
            evaluations: res.evaluations,
            converged: res.converged,
            trace: res.trace,
        });
    }
    // Lowest objective; ties go to the earliest run.
    let best = runs
        .iter()
        .enumerate()
        .fold(0, |b, (i, r)| if r.objective < runs[b].objective { i } else { b });
    if !runs[best].objective.is_finite() {
        let summary: Vec<String> = runs
            .iter()
            .map(|r| format!("start {:?} -> {} after {} iterations", r.start, r.objective, r.iterations))
            .collect();
        return Err(Error::Optimization(format!("no restart reached a finite objective: {}", summary.join("; "))));
    }
    let params = transform.forward(&runs[best].end, &base);
    params.validate()?;
    Ok(FitResult {
        spec: *spec,
        params,
        free: transform.ids().iter().map(|id| id.name().to_string()).collect(),
        transformed: runs[best].end.clone(),
        objective: runs[best].objective,
        iterations: runs.iter().map(|r| r.iterations).sum(),
        evaluations: runs.iter().map(|r| r.evaluations).sum(),
        converged: runs[best].converged,
        n_terms: objective.n_terms(),
        restarts: runs,
    })
}
