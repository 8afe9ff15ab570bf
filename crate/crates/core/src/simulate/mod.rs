//! Monte Carlo generation of the max-id process and of the competing
//! Gaussian and Student-t copula models.

mod design;
mod maxid;

pub use design::{mountain_altitude, mountain_range_design};
pub use maxid::{simulate_maxid, simulate_replicate, OutputScale, ReplicateOutcome, SimulationSpec, SpectralPoint};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;

use crate::data::{DataScale, DatasetMetadata, MaximaDataset};
use crate::error::{Error, Result};
use crate::model::{correlation_cholesky, DependenceParams, StudyDesign};
use crate::numerics::{std_normal_cdf, student_t_cdf};

/// Independent RNG stream for replicate `k` of a run seeded with `seed`.
pub fn replicate_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

fn station_names(design: &StudyDesign) -> Vec<String> {
    design.sites.iter().map(|s| s.name.clone()).collect()
}

fn simulate_elliptical(
    design: &StudyDesign,
    params: &DependenceParams,
    n: usize,
    seed: u64,
    dof: Option<f64>,
) -> Result<MaximaDataset> {
    design.validate()?;
    if n == 0 {
        return Err(Error::InvalidInput("replicate count must be positive".into()));
    }
    if let Some(v) = dof {
        if !(v > 0.0) {
            return Err(Error::InvalidInput(format!("degrees of freedom must be positive, got {v}")));
        }
    }
    // The copula families ignore the magnitude modulation.
    let p = DependenceParams { nu: 0.0, ..*params };
    let d = design.n_sites();
    let time_of = |k: usize| design.times.get(k).copied().unwrap_or(0.5);
    let constant_time = p.lambda2 == 0.0;
    let shared = if constant_time { Some(correlation_cholesky(design, 0.5, 0.0, &p)?) } else { None };
    let rows: Vec<Result<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let owned;
            let chol = match &shared {
                Some(c) => c,
                None => {
                    owned = correlation_cholesky(design, time_of(k), 0.0, &p)?;
                    &owned
                }
            };
            let mut rng = replicate_rng(seed, k);
            let eps: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let mut x = vec![0.0; d];
            chol.lower.lower_mul_vec(&eps, &mut x);
            let row = match dof {
                None => x.iter().map(|&v| std_normal_cdf(v)).collect(),
                Some(v) => {
                    let w: f64 = ChiSquared::new(v).expect("positive dof").sample(&mut rng);
                    let s = (w / v).sqrt();
                    x.iter().map(|&xi| student_t_cdf(xi / s, v)).collect()
                }
            };
            Ok(clamp_unit(row))
        })
        .collect();
    let mut values = Vec::with_capacity(n * d);
    for r in rows {
        values.extend(r?);
    }
    let mut meta = DatasetMetadata::new(DataScale::Uniform);
    meta.seed = Some(seed);
    meta.params = Some(p);
    meta.generator = Some(if dof.is_some() { "t-copula".into() } else { "gaussian-copula".into() });
    MaximaDataset::new(station_names(design), n, values, meta)
}

/// Keeps uniform scores strictly inside (0, 1).
fn clamp_unit(mut row: Vec<f64>) -> Vec<f64> {
    for v in &mut row {
        *v = v.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
    }
    row
}

/// Gaussian copula sample on the uniform scale; correlations from the
/// (non-)stationary family with `ν = 0`.
pub fn simulate_gaussian_copula(design: &StudyDesign, params: &DependenceParams, n: usize, seed: u64) -> Result<MaximaDataset> {
    simulate_elliptical(design, params, n, seed, None)
}

/// Student-t copula sample on the uniform scale with `dof` degrees of freedom.
pub fn simulate_t_copula(
    design: &StudyDesign,
    params: &DependenceParams,
    dof: f64,
    n: usize,
    seed: u64,
) -> Result<MaximaDataset> {
    simulate_elliptical(design, params, n, seed, Some(dof))
}
