//! Empirical dependence summaries on the uniform scale.

use crate::data::MaximaDataset;
use crate::error::{Error, Result};

/// Minimum number of fully observed replicates.
pub const MIN_COMPLETE_REPLICATES: usize = 20;

fn complete_rows(data: &MaximaDataset, stations: &[usize]) -> Result<Vec<Vec<f64>>> {
    if stations.is_empty() || stations.iter().any(|&j| j >= data.n_stations()) {
        return Err(Error::InvalidInput("station subset is empty or out of range".into()));
    }
    let rows: Vec<Vec<f64>> = (0..data.n_replicates())
        .filter_map(|k| stations.iter().map(|&j| data.get(k, j)).collect::<Option<Vec<f64>>>())
        .collect();
    if rows.len() < MIN_COMPLETE_REPLICATES {
        return Err(Error::InvalidInput(format!(
            "only {} replicates observe every station of the subset; need {MIN_COMPLETE_REPLICATES}",
            rows.len()
        )));
    }
    Ok(rows)
}

/// `θ̂_D(z) = −z log P̂(U_j ≤ e^{−1/z} for all j)`, clipped to `[1, D]`.
pub fn empirical_theta_d(data: &MaximaDataset, stations: &[usize], z: f64) -> Result<f64> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::InvalidInput(format!("level must be positive, got {z}")));
    }
    let rows = complete_rows(data, stations)?;
    let q = (-1.0 / z).exp();
    let hits = rows.iter().filter(|r| r.iter().all(|&u| u <= q)).count();
    if hits == 0 {
        return Err(Error::ZeroEmpiricalProbability);
    }
    let p = hits as f64 / rows.len() as f64;
    Ok((-z * p.ln()).clamp(1.0, stations.len() as f64))
}

/// `χ̂(u) = P̂(U_2 > u | U_1 > u)` for a station pair.
pub fn empirical_chi(data: &MaximaDataset, i: usize, j: usize, u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::InvalidInput(format!("threshold must lie in (0, 1), got {u}")));
    }
    let rows = complete_rows(data, &[i, j])?;
    let first = rows.iter().filter(|r| r[0] > u).count();
    if first == 0 {
        return Err(Error::ZeroEmpiricalProbability);
    }
    let both = rows.iter().filter(|r| r[0] > u && r[1] > u).count();
    Ok(both as f64 / first as f64)
}
