//! `maxid fit-dependence`, `maxid bootstrap` and `maxid cv`.

use serde::{Deserialize, Serialize};

use maxid_core::inference::{
    cv_logscore, fit_dependence, parametric_bootstrap, BootstrapEnsemble, CvResult, EvalMode, FitResult, PairWeights,
    WeightRule,
};

use crate::config::{Loaded, ModelChoice};
use crate::error::CliResult;
use crate::output::{num, opt, read_json, report, write_json, Table};

/// Contents of `fit.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitFile {
    pub model: String,
    pub weights: WeightRule,
    pub quadrature: EvalMode,
    pub fit: FitResult,
}

pub fn fit(loaded: &Loaded) -> CliResult<()> {
    let (data, design) = loaded.uniform_data_and_design()?;
    let spec = loaded.model()?;
    let weights = loaded.weights(&design)?;
    let init = loaded.params();
    init.validate().or_else(|e| loaded.err("params", e))?;
    let options = loaded.fit_options()?;
    let result = fit_dependence(&data, &design, &spec, &weights, &init, &options)?;
    if !result.converged {
        eprintln!("warning: optimiser stopped at its iteration limit");
    }
    let file = FitFile {
        model: loaded.config.model.as_ref().map(ModelChoice::label).unwrap_or_default(),
        weights: weights.rule,
        quadrature: options.mode,
        fit: result,
    };
    let path = loaded.output_dir()?.join("fit.json");
    write_json(&path, &file)?;
    report(&[path]);
    Ok(())
}

pub fn read_fit(loaded: &Loaded, key: &str, path: &std::path::Path) -> CliResult<FitFile> {
    let full = loaded.input(key, path)?;
    read_json(&full).or_else(|e| loaded.err(key, format!("cannot read {}: {e}", full.display())))
}

pub fn bootstrap(loaded: &Loaded) -> CliResult<()> {
    let Some(b) = loaded.config.bootstrap.clone() else {
        return loaded.err("bootstrap", "a `bootstrap` section is required");
    };
    if b.replicates < 2 {
        return loaded.err("replicates", "bootstrap needs at least 2 replicates");
    }
    let fit_file = read_fit(loaded, "fit", &b.fit)?;
    let (mask, design) = loaded.uniform_data_and_design()?;
    let weights = PairWeights::from_rule(&design, fit_file.weights).or_else(|e| loaded.err("fit", e))?;
    let mut options = loaded.fit_options()?;
    options.mode = fit_file.quadrature;
    let ensemble = parametric_bootstrap(&fit_file.fit, &mask, &design, &weights, b.replicates, b.seed, &options)?;
    if let Some(w) = &ensemble.warning {
        eprintln!("warning: {w}");
    }
    let dir = loaded.output_dir()?;
    let json = dir.join("bootstrap.json");
    write_json(&json, &ensemble)?;
    let csv = dir.join("intervals.csv");
    intervals_table(&ensemble).write(&csv)?;
    report(&[json, csv]);
    Ok(())
}

fn intervals_table(e: &BootstrapEnsemble) -> Table {
    let mut t = Table::new(&["parameter", "estimate", "lower", "upper"]);
    for i in &e.intervals {
        t.push(vec![i.name.clone(), num(i.estimate), num(i.lower), num(i.upper)]);
    }
    t
}

/// One model's cross-validation outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvEntry {
    pub model: String,
    pub full_fit: FitResult,
    pub cv: CvResult,
}

pub fn cv(loaded: &Loaded) -> CliResult<()> {
    let (data, design) = loaded.uniform_data_and_design()?;
    let weights = loaded.weights(&design)?;
    let options = loaded.fit_options()?;
    let init = loaded.params();
    let models: Vec<ModelChoice> = match &loaded.config.cv {
        Some(c) if !c.models.is_empty() => c.models.clone(),
        _ => match &loaded.config.model {
            Some(m) => vec![m.clone()],
            None => return loaded.err("cv", "list `cv.models` or give a top-level `model`"),
        },
    };
    let mut entries = Vec::with_capacity(models.len());
    for m in &models {
        let spec = m.resolve().or_else(|e| loaded.err("models", e))?;
        let label = m.label();
        eprintln!("cv: {label}");
        let full_fit = fit_dependence(&data, &design, &spec, &weights, &init, &options)?;
        let cv = cv_logscore(&data, &design, &spec, &weights, &full_fit, &options)?;
        entries.push(CvEntry { model: label, full_fit, cv });
    }

    // Lower log score is better; ties keep configuration order.
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&a, &b| entries[a].cv.total.total_cmp(&entries[b].cv.total));

    let dir = loaded.output_dir()?;
    let json = dir.join("cv.json");
    write_json(&json, &entries)?;
    let mut ranking = Table::new(&["rank", "model", "log_score", "n_flagged", "full_objective"]);
    for (r, &i) in order.iter().enumerate() {
        let e = &entries[i];
        ranking.push(vec![
            (r + 1).to_string(),
            e.model.clone(),
            num(e.cv.total),
            e.cv.n_flagged().to_string(),
            num(e.full_fit.objective),
        ]);
    }
    let rank_path = dir.join("cv_ranking.csv");
    ranking.write(&rank_path)?;
    let mut stations = Table::new(&["model", "station", "score", "n_terms", "refit_objective", "flag"]);
    for e in &entries {
        for s in &e.cv.stations {
            stations.push(vec![
                e.model.clone(),
                s.station.clone(),
                opt(s.score),
                s.n_terms.to_string(),
                opt(s.refit_objective),
                s.flag.clone().unwrap_or_default(),
            ]);
        }
    }
    let st_path = dir.join("cv_stations.csv");
    stations.write(&st_path)?;
    report(&[json, rank_path, st_path]);
    Ok(())
}
