//! GEV fit under the independence likelihood with a linear model for μ.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gev::{gev_cdf, gev_logpdf, gev_quantile, GevParams};
use crate::data::{DataScale, MaximaDataset};
use crate::error::{Error, Result};
use crate::numerics::{cholesky_jittered, nelder_mead, NelderMeadOptions, SquareMatrix};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
/// Soft box for ξ during fitting.
const XI_LIMIT: f64 = 0.5;

/// Basis columns for the location parameter, one row per observed cell in
/// row-major (replicate, station) order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuDesign {
    pub columns: Vec<String>,
    /// Basis values per cell of the full `n_replicates × n_stations` grid;
    /// rows of missing cells are ignored.
    rows: Vec<Vec<f64>>,
    n_stations: usize,
}

impl MuDesign {
    /// Constant location.
    pub fn intercept(data: &MaximaDataset) -> Self {
        let n = data.n_replicates() * data.n_stations();
        Self { columns: vec!["intercept".into()], rows: vec![vec![1.0]; n], n_stations: data.n_stations() }
    }

    /// Basis from a closure evaluated at each `(replicate, station)`.
    pub fn from_fn<F: FnMut(usize, usize) -> Vec<f64>>(data: &MaximaDataset, columns: Vec<String>, mut f: F) -> Result<Self> {
        let mut rows = Vec::with_capacity(data.n_replicates() * data.n_stations());
        for k in 0..data.n_replicates() {
            for j in 0..data.n_stations() {
                let row = f(k, j);
                if row.len() != columns.len() {
                    return Err(Error::InvalidInput(format!("basis row ({k}, {j}) has {} values, expected {}", row.len(), columns.len())));
                }
                rows.push(row);
            }
        }
        Ok(Self { columns, rows, n_stations: data.n_stations() })
    }

    /// Reads basis columns from a CSV with header `replicate,station,<col>…`;
    /// `station` is matched against the dataset's station names and
    /// `replicate` is 0-based. Every observed cell must be present.
    pub fn read_csv(path: &Path, data: &MaximaDataset) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header: Vec<String> = r.headers()?.iter().map(|s| s.trim().to_string()).collect();
        if header.len() < 3 || header[0] != "replicate" || header[1] != "station" {
            return Err(Error::InvalidInput(format!("{}: header must start with replicate,station", path.display())));
        }
        let columns = header[2..].to_vec();
        let d = data.n_stations();
        let mut rows: Vec<Option<Vec<f64>>> = vec![None; data.n_replicates() * d];
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let at = |msg: String| Error::InvalidInput(format!("{}: row {}: {msg}", path.display(), line + 2));
            let k: usize = rec[0].trim().parse().map_err(|_| at(format!("bad replicate '{}'", &rec[0])))?;
            let j = data
                .stations
                .iter()
                .position(|s| s == rec[1].trim())
                .ok_or_else(|| at(format!("unknown station '{}'", &rec[1])))?;
            if k >= data.n_replicates() {
                return Err(at(format!("replicate {k} out of range")));
            }
            let vals: std::result::Result<Vec<f64>, _> = rec.iter().skip(2).map(|s| s.trim().parse::<f64>()).collect();
            rows[k * d + j] = Some(vals.map_err(|_| at("non-numeric basis value".into()))?);
        }
        let mut out = Vec::with_capacity(rows.len());
        for (n, row) in rows.into_iter().enumerate() {
            match row {
                Some(r) => out.push(r),
                None if data.is_missing(n / d, n % d) => out.push(vec![0.0; columns.len()]),
                None => {
                    return Err(Error::InvalidInput(format!(
                        "{}: no basis row for replicate {}, station {}",
                        path.display(),
                        n / d,
                        data.stations[n % d]
                    )))
                }
            }
        }
        Ok(Self { columns, rows: out, n_stations: d })
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, k: usize, j: usize) -> &[f64] {
        &self.rows[k * self.n_stations + j]
    }

    fn check(&self, data: &MaximaDataset) -> Result<()> {
        if self.n_stations != data.n_stations() || self.rows.len() != data.n_replicates() * data.n_stations() {
            return Err(Error::InvalidInput("location design does not match the dataset shape".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalFit {
    pub columns: Vec<String>,
    pub coefficients: Vec<f64>,
    pub sigma: f64,
    pub xi: f64,
    pub log_likelihood: f64,
    pub n_observations: usize,
    pub converged: bool,
    /// Best negative log-likelihood after each simplex iteration of the winning start.
    pub trace: Vec<f64>,
}

impl MarginalFit {
    /// Location at a basis row.
    pub fn mu(&self, basis: &[f64]) -> f64 {
        basis.iter().zip(&self.coefficients).map(|(x, b)| x * b).sum()
    }

    pub fn params_at(&self, basis: &[f64]) -> GevParams {
        GevParams::new(self.mu(basis), self.sigma, self.xi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginFitOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Ridge penalty on all location coefficients except the first.
    pub ridge: f64,
    pub optimizer: NelderMeadOptions,
}

impl Default for MarginFitOptions {
    fn default() -> Self {
        Self {
            restarts: 3,
            seed: 0,
            ridge: 0.0,
            optimizer: NelderMeadOptions { max_iter: 5000, f_tol: 1e-9, x_tol: 1e-7, initial_step: 0.2 },
        }
    }
}

struct Observations {
    z: Vec<f64>,
    x: Vec<Vec<f64>>,
}

fn observations(data: &MaximaDataset, design: &MuDesign) -> Observations {
    let mut z = Vec::new();
    let mut x = Vec::new();
    for k in 0..data.n_replicates() {
        for j in 0..data.n_stations() {
            if let Some(v) = data.get(k, j) {
                z.push(v);
                x.push(design.row(k, j).to_vec());
            }
        }
    }
    Observations { z, x }
}

/// Least-squares coefficients via the normal equations.
fn least_squares(x: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let p = x[0].len();
    let mut xtx = SquareMatrix::zeros(p);
    let mut xty = vec![0.0; p];
    for (row, &yi) in x.iter().zip(y) {
        for a in 0..p {
            xty[a] += row[a] * yi;
            for b in 0..p {
                xtx[(a, b)] += row[a] * row[b];
            }
        }
    }
    let l = cholesky_jittered(&xtx, 1e-8 * (0..p).map(|i| xtx[(i, i)]).fold(0.0, f64::max))
        .map_err(|_| Error::InvalidInput("location design is not of full rank".into()))?
        .lower;
    Ok(cholesky_solve(&l, &xty))
}

fn cholesky_solve(l: &SquareMatrix, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[(i, k)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[(k, i)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    y
}

fn negative_log_lik(obs: &Observations, coef: &[f64], sigma: f64, xi: f64) -> f64 {
    let mut nll = 0.0;
    for (z, x) in obs.z.iter().zip(&obs.x) {
        let mu: f64 = x.iter().zip(coef).map(|(a, b)| a * b).sum();
        let lp = gev_logpdf(*z, &GevParams::new(mu, sigma, xi));
        if lp == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        nll -= lp;
    }
    nll
}

/// Maximises the independence log-likelihood `Σ log g(z_kj; μ_kj, σ, ξ)`
/// over the location coefficients and constant `σ`, `ξ`.
///
/// The simplex works on `(coef/σ₀, log σ, ξ)` with `σ₀` the moment
/// estimate, so all coordinates are of order one. ξ is softly confined to
/// (−0.5, 0.5).
pub fn fit_gev_independence(data: &MaximaDataset, design: &MuDesign, options: &MarginFitOptions) -> Result<MarginalFit> {
    design.check(data)?;
    let obs = observations(data, design);
    let n = obs.z.len();
    if n < 30 {
        return Err(Error::InvalidInput(format!("at least 30 observations are needed, got {n}")));
    }
    let mean = obs.z.iter().sum::<f64>() / n as f64;
    let sd = (obs.z.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    if !(sd > 1e-12 * mean.abs().max(1.0)) {
        return Err(Error::Optimization("data are constant: the scale parameter collapses to 0".into()));
    }
    let sigma0 = sd * 6f64.sqrt() / std::f64::consts::PI;
    let shifted: Vec<f64> = obs.z.iter().map(|z| z - EULER_GAMMA * sigma0).collect();
    let coef0 = least_squares(&obs.x, &shifted)?;
    let p = design.n_columns();

    let unpack = |t: &[f64]| -> (Vec<f64>, f64, f64) {
        (t[..p].iter().map(|c| c * sigma0).collect(), t[p].exp(), t[p + 1])
    };
    let objective = |t: &[f64]| {
        let (coef, sigma, xi) = unpack(t);
        let mut f = negative_log_lik(&obs, &coef, sigma, xi);
        if xi.abs() > XI_LIMIT {
            f += 1e4 * (xi.abs() - XI_LIMIT).powi(2) * n as f64;
        }
        if options.ridge > 0.0 {
            f += options.ridge * coef.iter().skip(1).map(|c| c * c).sum::<f64>();
        }
        f
    };
    let mut start: Vec<f64> = coef0.iter().map(|c| c / sigma0).collect();
    start.push(sigma0.ln());
    start.push(0.1);

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut best: Option<crate::numerics::NelderMeadResult> = None;
    for attempt in 0..options.restarts.max(1) {
        let x0: Vec<f64> = if attempt == 0 {
            start.clone()
        } else {
            let mut x = start.clone();
            for v in x.iter_mut().take(p) {
                *v += rng.random_range(-0.3..0.3);
            }
            x[p] += rng.random_range(-0.3..0.3);
            x[p + 1] = rng.random_range(-0.3..0.3);
            x
        };
        let res = nelder_mead(objective, &x0, &options.optimizer);
        if res.f.is_finite() && best.as_ref().is_none_or(|b| res.f < b.f) {
            best = Some(res);
        }
    }
    let best = best.ok_or_else(|| Error::Optimization("every restart produced a non-finite likelihood".into()))?;
    let (coefficients, sigma, xi) = unpack(&best.x);
    let log_likelihood = -negative_log_lik(&obs, &coefficients, sigma, xi);
    Ok(MarginalFit {
        columns: design.columns.clone(),
        coefficients,
        sigma,
        xi,
        log_likelihood,
        n_observations: n,
        converged: best.converged,
        trace: best.trace,
    })
}

/// Asymptotic standard errors of `(coefficients…, σ, ξ)` from the
/// observed information (finite-difference Hessian of the log-likelihood).
pub fn standard_errors(data: &MaximaDataset, design: &MuDesign, fit: &MarginalFit) -> Result<Vec<f64>> {
    design.check(data)?;
    let obs = observations(data, design);
    let mut theta = fit.coefficients.clone();
    theta.push(fit.sigma);
    theta.push(fit.xi);
    let p = theta.len();
    let nc = fit.coefficients.len();
    let f = |t: &[f64]| negative_log_lik(&obs, &t[..nc], t[nc], t[nc + 1]);
    let h: Vec<f64> = theta.iter().map(|v| 1e-4 * v.abs().max(0.1)).collect();
    let mut hess = SquareMatrix::zeros(p);
    for a in 0..p {
        for b in 0..=a {
            let mut t = theta.clone();
            let mut eval = |da: f64, db: f64| {
                t.copy_from_slice(&theta);
                t[a] += da;
                t[b] += db;
                f(&t)
            };
            let v = (eval(h[a], h[b]) - eval(h[a], -h[b]) - eval(-h[a], h[b]) + eval(-h[a], -h[b])) / (4.0 * h[a] * h[b]);
            hess[(a, b)] = v;
            hess[(b, a)] = v;
        }
    }
    let l = cholesky_jittered(&hess, 0.0).map_err(|_| Error::Optimization("observed information is not positive definite".into()))?.lower;
    Ok((0..p)
        .map(|i| {
            let mut e = vec![0.0; p];
            e[i] = 1.0;
            cholesky_solve(&l, &e)[i].sqrt()
        })
        .collect())
}

/// Cellwise probability integral transform with each cell's fitted location.
pub fn pit_to_uniform(data: &MaximaDataset, fit: &MarginalFit, design: &MuDesign) -> Result<MaximaDataset> {
    design.check(data)?;
    Ok(data.map_cells(DataScale::Uniform, |k, j, z| {
        gev_cdf(z, &fit.params_at(design.row(k, j))).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
    }))
}

/// Inverse of [`pit_to_uniform`].
pub fn pit_inverse(uniform: &MaximaDataset, fit: &MarginalFit, design: &MuDesign) -> Result<MaximaDataset> {
    design.check(uniform)?;
    Ok(uniform.map_cells(DataScale::Raw, |k, j, u| gev_quantile(u, &fit.params_at(design.row(k, j)))))
}
