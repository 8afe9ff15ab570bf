//! `maxid fit-margins` and `maxid transform`.

use serde::{Deserialize, Serialize};

use maxid_core::data::{DataScale, MaximaDataset};
use maxid_core::margins::{
    fit_gev_independence, gumbel_qq, pit_inverse, pit_to_uniform, standard_errors, station_ks_table, MarginFitOptions,
    MarginalFit, MuDesign,
};

use crate::config::{Direction, Loaded};
use crate::error::CliResult;
use crate::output::{num, read_json, report, write_json, Table};

/// Contents of `margins.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginsFile {
    pub fit: MarginalFit,
    /// Standard errors of `(coefficients…, log σ, ξ)`; absent when the Hessian is singular.
    pub standard_errors: Option<Vec<f64>>,
    pub stations: Vec<String>,
}

pub fn basis(loaded: &Loaded, key: &str, path: Option<&std::path::Path>, data: &MaximaDataset) -> CliResult<MuDesign> {
    match path {
        Some(p) => Ok(MuDesign::read_csv(&loaded.input(key, p)?, data)?),
        None => Ok(MuDesign::intercept(data)),
    }
}

pub fn fit(loaded: &Loaded) -> CliResult<()> {
    let data = loaded.data(DataScale::Raw)?;
    if data.scale() != DataScale::Raw {
        return loaded.err("data", format!("expected raw-scale data, found {:?}", data.scale()));
    }
    let cfg = loaded.config.margins.clone();
    let design = basis(loaded, "covariates", cfg.as_ref().and_then(|m| m.covariates.as_deref()), &data)?;
    let mut options = MarginFitOptions::default();
    if let Some(m) = &cfg {
        if m.restarts == 0 {
            return loaded.err("restarts", "margins.restarts must be at least 1");
        }
        options.restarts = m.restarts;
        options.seed = m.seed;
    }
    let fit = fit_gev_independence(&data, &design, &options)?;
    let se = standard_errors(&data, &design, &fit).ok();
    let uniform = pit_to_uniform(&data, &fit, &design)?;

    let dir = loaded.output_dir()?;
    let mut written = Vec::new();
    let path = dir.join("margins.json");
    write_json(&path, &MarginsFile { fit: fit.clone(), standard_errors: se, stations: data.stations.clone() })?;
    written.push(path);

    let mut qq = Table::new(&["empirical", "theoretical"]);
    for (e, t) in gumbel_qq(&data, &fit, &design) {
        qq.push(vec![num(e), num(t)]);
    }
    let path = dir.join("qq.csv");
    qq.write(&path)?;
    written.push(path);

    let mut ks = Table::new(&["station", "n", "distance", "p_value"]);
    for r in station_ks_table(&uniform) {
        ks.push(vec![r.station, r.n.to_string(), num(r.distance), num(r.p_value)]);
    }
    let path = dir.join("ks.csv");
    ks.write(&path)?;
    written.push(path);

    if cfg.as_ref().is_none_or(|m| m.write_uniform) {
        let path = dir.join("uniform.csv");
        uniform.write(&path)?;
        written.push(path);
    }
    if !fit.converged {
        eprintln!("warning: marginal optimiser did not converge");
    }
    report(&written);
    Ok(())
}

pub fn read_margins(loaded: &Loaded, key: &str, path: &std::path::Path) -> CliResult<MarginsFile> {
    let full = loaded.input(key, path)?;
    read_json(&full).or_else(|e| loaded.err(key, format!("cannot read {}: {e}", full.display())))
}

pub fn transform(loaded: &Loaded) -> CliResult<()> {
    let Some(t) = loaded.config.transform.clone() else {
        return loaded.err("transform", "a `transform` section is required");
    };
    let margins = read_margins(loaded, "margins", &t.margins)?;
    let expected = match t.direction {
        Direction::ToUniform => DataScale::Raw,
        Direction::ToRaw => DataScale::Uniform,
    };
    let data = loaded.data(expected)?;
    if data.scale() != expected {
        return loaded.err("direction", format!("{:?} needs {expected:?} data, found {:?}", t.direction, data.scale()));
    }
    if data.stations != margins.stations {
        return loaded.err("margins", "station names differ from those the margins were fitted on");
    }
    let design = basis(loaded, "covariates", t.covariates.as_deref(), &data)?;
    let (out, name) = match t.direction {
        Direction::ToUniform => (pit_to_uniform(&data, &margins.fit, &design)?, "uniform.csv"),
        Direction::ToRaw => (pit_inverse(&data, &margins.fit, &design)?, "raw.csv"),
    };
    let path = loaded.output_dir()?.join(name);
    out.write(&path)?;
    report(&[path]);
    Ok(())
}
