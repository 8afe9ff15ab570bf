//! `maxid diagnostics`: θ₂ curves, θ_D against empirical estimates,
//! effective ranges and return periods of observed events.

use clap::{Args, ValueEnum};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use maxid_core::data::DataScale;
use maxid_core::inference::{empirical_theta_d, spatial_exceedance};
use maxid_core::maxid::{effective_range, theta2, theta_d, MarginalTable, PairContext};
use maxid_core::model::{DependenceParams, ModelSpec};
use maxid_core::Error as CoreError;

use super::dependence::read_fit;
use super::margins::{basis, read_margins};
use crate::config::Loaded;
use crate::error::CliResult;
use crate::output::{num, report, Table};
use crate::Common;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DiagnosticsPreset {
    /// θ₂ against level for β ∈ {0, 0.5, 1, 2} × ν ∈ {0, 0.25, 0.5, 1}
    /// at α = 1, λ = 0.5, distance 0.5.
    Theta2Grid,
}

#[derive(Debug, Args)]
pub struct DiagnosticsArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub preset: Option<DiagnosticsPreset>,
}

pub const GRID_BETAS: [f64; 4] = [0.0, 0.5, 1.0, 2.0];
pub const GRID_NUS: [f64; 4] = [0.0, 0.25, 0.5, 1.0];

/// Levels `z` on a log grid from 1.05 to 1000.
pub fn grid_levels() -> Vec<f64> {
    let n = 40;
    (0..n).map(|i| (1.05f64.ln() + (1000f64.ln() - 1.05f64.ln()) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Rows `(β, ν, z, θ₂)` of the preset grid.
pub fn grid_rows() -> CliResult<Vec<[f64; 4]>> {
    let pair = PairContext::at_distance(0.5, 0.0, 0.5);
    let mut rows = Vec::new();
    for beta in GRID_BETAS {
        let table = MarginalTable::build(1.0, beta)?;
        for nu in GRID_NUS {
            let p = DependenceParams { alpha: 1.0, beta, lambda0: 0.5f64.ln(), nu, ..Default::default() };
            for z in grid_levels() {
                rows.push([beta, nu, z, theta2(z, &pair, &p, &table)?]);
            }
        }
    }
    Ok(rows)
}

fn model_and_params(loaded: &Loaded) -> CliResult<(ModelSpec, DependenceParams)> {
    let diag = loaded.config.diagnostics.clone().unwrap_or_default();
    match &diag.fit {
        Some(f) => {
            let file = read_fit(loaded, "fit", f)?;
            Ok((file.fit.spec, file.fit.params))
        }
        None => {
            let spec = loaded.model()?;
            let p = spec.normalize(&loaded.params());
            p.validate().or_else(|e| loaded.err("params", e))?;
            Ok((spec, p))
        }
    }
}

pub fn run(loaded: &Loaded, args: &DiagnosticsArgs) -> CliResult<()> {
    let dir = loaded.output_dir()?;
    let mut written = Vec::new();
    if args.preset == Some(DiagnosticsPreset::Theta2Grid) {
        let mut t = Table::new(&["beta", "nu", "level", "theta2"]);
        for r in grid_rows()? {
            t.push(r.iter().map(|&v| num(v)).collect());
        }
        let path = dir.join("theta2_grid.csv");
        t.write(&path)?;
        written.push(path);
        if loaded.config.diagnostics.is_none() {
            report(&written);
            return Ok(());
        }
    }
    let Some(diag) = loaded.config.diagnostics.clone() else {
        return loaded.err("diagnostics", "a `diagnostics` section (or --preset) is required");
    };
    let (spec, p) = model_and_params(loaded)?;
    let max_id = spec.family.is_max_id();
    let table = if max_id { Some(MarginalTable::build(p.alpha, p.beta)?) } else { None };
    let needs_max_id = |key: &str| -> CliResult<&MarginalTable> {
        match &table {
            Some(t) => Ok(t),
            None => loaded.err(key, format!("{key} needs a max-id family, model is {:?}", spec.family)),
        }
    };

    if let Some(c) = &diag.theta2 {
        let table = needs_max_id("theta2")?;
        let mut t = Table::new(&["distance", "level", "theta2"]);
        for &h in &c.distances {
            let pair = PairContext::at_distance(h, c.alt, c.time);
            for &z in &c.levels {
                t.push(vec![num(h), num(z), num(theta2(z, &pair, &p, table)?)]);
            }
        }
        let path = dir.join("theta2.csv");
        t.write(&path)?;
        written.push(path);
    }

    if let Some(c) = &diag.theta_d {
        let table = needs_max_id("theta_d")?;
        let (data, design) = loaded.uniform_data_and_design()?;
        if !(2..=design.n_sites()).contains(&c.size) {
            return loaded.err("size", format!("subset size must lie in [2, {}]", design.n_sites()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
        let mut t = Table::new(&["subset", "stations", "model", "std_error", "empirical"]);
        for s in 0..c.subsets {
            let mut sites = sample(&mut rng, design.n_sites(), c.size).into_vec();
            sites.sort_unstable();
            let est = theta_d(c.level, &design, &sites, c.time, &p, table, c.qmc_points, c.seed.wrapping_add(s as u64))?;
            let emp = match empirical_theta_d(&data, &sites, c.level) {
                Ok(v) => num(v),
                Err(CoreError::ZeroEmpiricalProbability) | Err(CoreError::InvalidInput(_)) => String::new(),
                Err(e) => return Err(e.into()),
            };
            let names: Vec<&str> = sites.iter().map(|&i| design.sites[i].name.as_str()).collect();
            t.push(vec![s.to_string(), names.join(";"), num(est.value), num(est.std_error), emp]);
        }
        let path = dir.join("theta_d.csv");
        t.write(&path)?;
        written.push(path);
    }

    if let Some(c) = &diag.effective_range {
        let table = needs_max_id("effective_range")?;
        let mut t = Table::new(&["altitude", "time", "range", "note"]);
        for &alt in &c.altitudes {
            for &time in &c.times {
                let (range, note) = match effective_range(&p, alt, time, c.level, c.target, table) {
                    Ok(r) => (num(r), String::new()),
                    Err(e @ CoreError::Unreachable { .. }) => (String::new(), e.to_string()),
                    Err(e) => return Err(e.into()),
                };
                t.push(vec![num(alt), num(time), range, note]);
            }
        }
        let path = dir.join("effective_range.csv");
        t.write(&path)?;
        written.push(path);
    }

    if let Some(c) = &diag.return_periods {
        let margins = read_margins(loaded, "margins", &c.margins)?;
        let raw = maxid_core::data::MaximaDataset::read(&loaded.input("raw_data", &c.raw_data)?, DataScale::Raw)?;
        if raw.stations != margins.stations {
            return loaded.err("raw_data", "station names differ from those the margins were fitted on");
        }
        if c.event.len() != raw.n_stations() {
            return loaded.err("event", format!("event has {} values for {} stations", c.event.len(), raw.n_stations()));
        }
        let mu = basis(loaded, "covariates", c.covariates.as_deref(), &raw)?;
        let design = loaded.design(raw.n_replicates())?;
        let event: Vec<f64> = c.event.iter().map(|v| v.unwrap_or(f64::NAN)).collect();
        let mut t = Table::new(&["replicate", "time", "summary", "observed", "probability", "return_period"]);
        for &k in &c.reference_replicates {
            if k >= raw.n_replicates() {
                return loaded.err("reference_replicates", format!("replicate {k} out of range"));
            }
            let time = design.times[k];
            let gev: Vec<_> = (0..raw.n_stations()).map(|j| margins.fit.params_at(mu.row(k, j))).collect();
            let seed = c.seed.wrapping_add(k as u64);
            for e in spatial_exceedance(&design, spec.family, &p, time, &gev, &event, c.simulations, seed)? {
                t.push(vec![
                    k.to_string(),
                    num(time),
                    e.summary.name().to_string(),
                    num(e.observed),
                    num(e.probability),
                    e.return_period.map(num).unwrap_or_default(),
                ]);
            }
        }
        let path = dir.join("return_periods.csv");
        t.write(&path)?;
        written.push(path);
    }
    report(&written);
    Ok(())
}
