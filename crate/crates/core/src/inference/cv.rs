//! Leave-one-station-out log score.

use serde::{Deserialize, Serialize};

use super::fit::{fit_dependence, FitOptions, FitResult};
use super::objective::{EvalMode, PairwiseObjective};
use super::weights::PairWeights;
use crate::data::MaximaDataset;
use crate::error::{Error, Result};
use crate::model::{DependenceParams, ModelSpec, StudyDesign};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationScore {
    pub station: String,
    /// `−Σ log c` over pairs with the held-out station; `None` if the refit failed.
    pub score: Option<f64>,
    pub n_terms: usize,
    pub refit_objective: Option<f64>,
    pub flag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub spec: ModelSpec,
    /// Sum of the scores of the non-flagged stations; lower is better.
    pub total: f64,
    pub stations: Vec<StationScore>,
}

impl CvResult {
    pub fn n_flagged(&self) -> usize {
        self.stations.iter().filter(|s| s.score.is_none()).count()
    }
}

/// Design restricted to the listed sites.
pub fn select_sites(design: &StudyDesign, keep: &[usize]) -> StudyDesign {
    StudyDesign {
        sites: keep.iter().map(|&j| design.sites[j].clone()).collect(),
        times: design.times.clone(),
        metric: design.metric,
    }
}

/// Score of station `j0` under `params`: the negative log pairwise density
/// summed over every pair `{j0, j}` and every replicate where both are observed.
pub fn station_logscore(
    data: &MaximaDataset,
    design: &StudyDesign,
    spec: &ModelSpec,
    params: &DependenceParams,
    j0: usize,
    mode: EvalMode,
) -> Result<(f64, usize)> {
    let pairs = (0..data.n_stations()).filter(|&j| j != j0).map(|j| (j.min(j0), j.max(j0), 1.0)).collect();
    let obj = PairwiseObjective::with_pairs(data, design, pairs, *spec)?.with_mode(mode);
    Ok((obj.evaluate(params)?, obj.n_terms()))
}

/// Leaves each station out in turn, refits on the others (warm-started at
/// `full_fit`) and scores the held-out station against all others.
pub fn cv_logscore(
    data: &MaximaDataset,
    design: &StudyDesign,
    spec: &ModelSpec,
    weights: &PairWeights,
    full_fit: &FitResult,
    options: &FitOptions,
) -> Result<CvResult> {
    let d = data.n_stations();
    if d < 3 {
        return Err(Error::InvalidInput(format!("cross-validation needs at least 3 stations, got {d}")));
    }
    let mut stations = Vec::with_capacity(d);
    for j0 in 0..d {
        let keep: Vec<usize> = (0..d).filter(|&j| j != j0).collect();
        let sub = data.select_stations(&keep);
        let sub_design = select_sites(design, &keep);
        let refit = fit_dependence(&sub, &sub_design, spec, &weights.select(&keep), &full_fit.params, options);
        let name = data.stations[j0].clone();
        let entry = match refit {
            Ok(f) => match station_logscore(data, design, spec, &f.params, j0, options.mode) {
                Ok((score, n_terms)) => StationScore {
                    station: name,
                    score: Some(score),
                    n_terms,
                    refit_objective: Some(f.objective),
                    flag: (!f.converged).then(|| "refit did not converge".to_string()),
                },
                Err(e) => StationScore { station: name, score: None, n_terms: 0, refit_objective: Some(f.objective), flag: Some(e.to_string()) },
            },
            Err(e) => StationScore { station: name, score: None, n_terms: 0, refit_objective: None, flag: Some(e.to_string()) },
        };
        stations.push(entry);
    }
    let total = stations.iter().filter_map(|s| s.score).sum();
    Ok(CvResult { spec: *spec, total, stations })
}
