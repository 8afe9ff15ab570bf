//! Negative log pairwise likelihood on the uniform scale.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::copula::{gaussian_copula_logdensity_scores, t_copula_logdensity_scores, COPULA_U_CLAMP};
use super::weights::PairWeights;
use crate::data::{DataScale, MaximaDataset};
use crate::error::{Error, Result};
use crate::maxid::{exponent_partials, kernel_cutoff, level_cutoffs, FastGrid, FastRule, MarginalTable, PairContext};
use crate::model::{DependenceParams, Family, ModelSpec, PairKernel, StudyDesign};
use crate::numerics::{std_normal_quantile, student_t_quantile, QuadratureSpec};

/// Quadrature used for the max-id pair densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EvalMode {
    /// Fixed Gauss-Legendre lattice shared by all pairs of one evaluation.
    Fast(FastRule),
    /// Adaptive quadrature per term (slow; used for checking).
    Reference(QuadratureSpec),
}

impl Default for EvalMode {
    fn default() -> Self {
        EvalMode::Fast(FastRule::default())
    }
}

/// Time covariate of replicate `k` (0.5 when the design has no times).
pub fn replicate_time(design: &StudyDesign, k: usize) -> f64 {
    design.times.get(k).copied().unwrap_or(0.5)
}

fn ordered(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Log copula densities of one pair, one entry per replicate where both
/// stations are observed.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTerms {
    pub site1: usize,
    pub site2: usize,
    pub weight: f64,
    pub replicates: Vec<usize>,
    pub log_density: Vec<f64>,
}

impl PairTerms {
    /// `ω Σ_k log c`, summed in sorted order so that the value does not
    /// depend on replicate order.
    pub fn weighted_sum(&self) -> f64 {
        let mut v = self.log_density.clone();
        v.sort_by(f64::total_cmp);
        self.weight * v.iter().sum::<f64>()
    }
}

/// Pairwise objective bound to a dataset, design and pair set.
#[derive(Debug, Clone)]
pub struct PairwiseObjective<'a> {
    data: &'a MaximaDataset,
    design: &'a StudyDesign,
    spec: ModelSpec,
    pairs: Vec<(usize, usize, f64)>,
    /// Replicates where both stations of the pair are observed.
    shared: Vec<Vec<usize>>,
    mode: EvalMode,
}

impl<'a> PairwiseObjective<'a> {
    pub fn new(data: &'a MaximaDataset, design: &'a StudyDesign, weights: &PairWeights, spec: ModelSpec) -> Result<Self> {
        if weights.n_sites() != data.n_stations() {
            return Err(Error::InvalidInput(format!(
                "weights cover {} stations, data has {}",
                weights.n_sites(),
                data.n_stations()
            )));
        }
        Self::with_pairs(data, design, weights.active_pairs(), spec)
    }

    /// Objective over an explicit list of `(i, j, ω)` pairs.
    pub fn with_pairs(
        data: &'a MaximaDataset,
        design: &'a StudyDesign,
        pairs: Vec<(usize, usize, f64)>,
        spec: ModelSpec,
    ) -> Result<Self> {
        spec.validate()?;
        if data.scale() != DataScale::Uniform {
            return Err(Error::InvalidInput("pairwise likelihood needs uniform-scale data".into()));
        }
        if data.n_stations() != design.n_sites() {
            return Err(Error::InvalidInput(format!(
                "data has {} stations, design has {} sites",
                data.n_stations(),
                design.n_sites()
            )));
        }
        let d = data.n_stations();
        let mut shared = Vec::with_capacity(pairs.len());
        for &(i, j, w) in &pairs {
            if i >= d || j >= d || i == j || !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidInput(format!("invalid pair ({i}, {j}) with weight {w}")));
            }
            shared.push((0..data.n_replicates()).filter(|&k| !data.is_missing(k, i) && !data.is_missing(k, j)).collect());
        }
        Ok(Self { data, design, spec, pairs, shared, mode: EvalMode::default() })
    }

    pub fn with_mode(mut self, mode: EvalMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn pairs(&self) -> &[(usize, usize, f64)] {
        &self.pairs
    }

    /// Number of `(pair, replicate)` terms with positive weight.
    pub fn n_terms(&self) -> usize {
        self.pairs.iter().zip(&self.shared).filter(|((_, _, w), _)| *w > 0.0).map(|(_, s)| s.len()).sum()
    }

    /// `−Σ_pairs ω Σ_k log c(u_ki, u_kj)`.
    ///
    /// Pair sums are added in sorted order, so the total is bit-stable under
    /// thread scheduling, station relabeling and replicate permutation.
    pub fn evaluate(&self, params: &DependenceParams) -> Result<f64> {
        let terms = self.terms(params)?;
        let mut sums: Vec<f64> = terms.iter().map(PairTerms::weighted_sum).collect();
        sums.sort_by(f64::total_cmp);
        Ok(-sums.iter().sum::<f64>())
    }

    /// Per-pair log copula densities at `params` (after normalisation by the spec).
    pub fn terms(&self, params: &DependenceParams) -> Result<Vec<PairTerms>> {
        let p = self.spec.normalize(params);
        p.validate()?;
        match self.spec.family {
            Family::MaxStable | Family::SimpleMaxId | Family::GeneralMaxId => self.max_id_terms(&p),
            Family::GaussianCopula | Family::TCopula => self.copula_terms(&p),
        }
    }

    fn kernel(&self, i: usize, j: usize, k: usize, p: &DependenceParams) -> PairKernel {
        PairKernel::for_pair(self.design, i, j, replicate_time(self.design, k), p)
    }

    fn finish(&self, idx: usize, values: Vec<f64>) -> Result<PairTerms> {
        let (i, j, w) = self.pairs[idx];
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteTerm { site1: i, site2: j, replicate: self.shared[idx][pos] });
        }
        Ok(PairTerms { site1: i, site2: j, weight: w, replicates: self.shared[idx].clone(), log_density: values })
    }

    fn collect<F>(&self, f: F) -> Result<Vec<PairTerms>>
    where
        F: Fn(usize) -> Result<Vec<f64>> + Sync,
    {
        (0..self.pairs.len()).into_par_iter().map(|idx| f(idx).and_then(|v| self.finish(idx, v))).collect()
    }

    fn max_id_terms(&self, p: &DependenceParams) -> Result<Vec<PairTerms>> {
        let table = MarginalTable::build(p.alpha, p.beta)?;
        let d = self.data.n_stations();
        let n = self.data.n_replicates();
        // Per-cell level, log marginal density and integration cutoffs.
        let mut z = vec![f64::NAN; n * d];
        let mut ld = vec![f64::NAN; n * d];
        let mut cut = vec![(f64::NAN, f64::NAN); n * d];
        let (mut z_min, mut z_max) = (f64::INFINITY, 0.0_f64);
        for k in 0..n {
            for j in 0..d {
                if let Some(u) = self.data.get(k, j) {
                    let zz = table.quantile(u);
                    z[k * d + j] = zz;
                    ld[k * d + j] = table.log_density(zz);
                    cut[k * d + j] = level_cutoffs(zz, p.alpha, p.beta);
                    z_min = z_min.min(zz);
                    z_max = z_max.max(zz);
                }
            }
        }
        if z_max == 0.0 {
            // Nothing observed.
            return (0..self.pairs.len()).map(|idx| self.finish(idx, vec![])).collect();
        }
        let cell = |k: usize, j: usize| k * d + j;
        match self.mode {
            EvalMode::Reference(quad) => self.collect(|idx| {
                let (i, j, _) = self.pairs[idx];
                self.shared[idx]
                    .iter()
                    .map(|&k| {
                        let pair = PairContext::new(self.design, i, j, replicate_time(self.design, k), 1.0)?
                            .with_quadrature(quad);
                        let (z1, z2) = ordered(z[cell(k, i)], z[cell(k, j)]);
                        let e = exponent_partials(z1, z2, &pair, p)?;
                        Ok(e.log_pair_density() - (ld[cell(k, i)] + ld[cell(k, j)]))
                    })
                    .collect()
            }),
            EvalMode::Fast(rule) => {
                // Quantise the level range outward so the lattice does not
                // move when a single non-extreme cell changes.
                let z_lo = z_min.ln().floor().exp();
                let z_hi = z_max.ln().ceil().exp();
                let hi_max = level_cutoffs(z_hi, p.alpha, p.beta).1;
                let time_varying = p.lambda2 != 0.0;
                let mut u_max = hi_max;
                for (idx, &(i, j, _)) in self.pairs.iter().enumerate() {
                    if time_varying {
                        for &k in &self.shared[idx] {
                            u_max = u_max.max(kernel_cutoff(hi_max, z_hi, &self.kernel(i, j, k, p), p.alpha, p.beta));
                        }
                    } else {
                        u_max = u_max.max(kernel_cutoff(hi_max, z_hi, &self.kernel(i, j, 0, p), p.alpha, p.beta));
                    }
                }
                let grid = FastGrid::new(p.alpha, p.beta, p.nu, z_lo, z_hi, u_max, rule);
                self.collect(|idx| {
                    let (i, j, _) = self.pairs[idx];
                    let fixed = (!time_varying).then(|| self.kernel(i, j, 0, p));
                    Ok(self.shared[idx]
                        .iter()
                        .map(|&k| {
                            let kernel = fixed.unwrap_or_else(|| self.kernel(i, j, k, p));
                            let (a, b) = (cell(k, i), cell(k, j));
                            // Evaluated with the levels in a fixed order so
                            // that swapping the stations is exact.
                            let (z1, z2) = ordered(z[a], z[b]);
                            let lo = cut[a].0.min(cut[b].0);
                            let hi = kernel_cutoff(cut[a].1.max(cut[b].1), z1.max(z2), &kernel, p.alpha, p.beta);
                            grid.partials(z1, z2, &kernel, lo, hi).log_pair_density() - (ld[a] + ld[b])
                        })
                        .collect())
                })
            }
        }
    }

    fn copula_terms(&self, p: &DependenceParams) -> Result<Vec<PairTerms>> {
        let d = self.data.n_stations();
        let dof = p.alpha;
        let t_family = self.spec.family == Family::TCopula;
        let scores: Vec<f64> = self
            .data
            .values()
            .iter()
            .map(|&u| {
                if u.is_nan() {
                    return f64::NAN;
                }
                let u = u.clamp(COPULA_U_CLAMP, 1.0 - COPULA_U_CLAMP);
                if t_family {
                    student_t_quantile(u, dof)
                } else {
                    std_normal_quantile(u)
                }
            })
            .collect();
        let time_varying = p.lambda2 != 0.0;
        self.collect(|idx| {
            let (i, j, _) = self.pairs[idx];
            let fixed = (!time_varying).then(|| self.kernel(i, j, 0, p).rho(0.0));
            Ok(self.shared[idx]
                .iter()
                .map(|&k| {
                    let rho = fixed.unwrap_or_else(|| self.kernel(i, j, k, p).rho(0.0));
                    let (x1, x2) = (scores[k * d + i], scores[k * d + j]);
                    if t_family {
                        t_copula_logdensity_scores(x1, x2, rho, dof)
                    } else {
                        gaussian_copula_logdensity_scores(x1, x2, rho)
                    }
                })
                .collect())
        })
    }
}

/// Negative log pairwise likelihood of `params` for uniform-scale `data`.
pub fn negative_log_pl(
    params: &DependenceParams,
    data: &MaximaDataset,
    design: &StudyDesign,
    weights: &PairWeights,
    spec: &ModelSpec,
) -> Result<f64> {
    PairwiseObjective::new(data, design, weights, *spec)?.evaluate(params)
}
