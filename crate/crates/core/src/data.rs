//! Replicate × station matrices of block maxima with a missing-value mask.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DependenceParams;

/// Scale on which the values of a dataset are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataScale {
    /// Original measurement units.
    Raw,
    /// Probability integral transform scores in (0, 1).
    Uniform,
    /// Margins `exp{−V_marg(z)}` of the max-id model.
    Model,
}

/// A replicate that hit the point budget before the truncation bound was met.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedReplicate {
    pub replicate: usize,
    /// Union bound on the probability that an unsimulated point changes a maximum.
    pub attained_bound: f64,
}

/// Provenance written next to the CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub scale: DataScale,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub params: Option<DependenceParams>,
    #[serde(default)]
    pub generator: Option<String>,
    #[serde(default)]
    pub flagged: Vec<FlaggedReplicate>,
}

impl DatasetMetadata {
    pub fn new(scale: DataScale) -> Self {
        Self { scale, seed: None, epsilon: None, params: None, generator: None, flagged: Vec::new() }
    }
}

/// Row-major `n_replicates × n_stations` matrix; `NaN` marks a missing cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximaDataset {
    pub stations: Vec<String>,
    n_replicates: usize,
    values: Vec<f64>,
    pub metadata: DatasetMetadata,
}

impl MaximaDataset {
    pub fn new(stations: Vec<String>, n_replicates: usize, values: Vec<f64>, metadata: DatasetMetadata) -> Result<Self> {
        if stations.is_empty() {
            return Err(Error::InvalidInput("dataset needs at least one station".into()));
        }
        if values.len() != stations.len() * n_replicates {
            return Err(Error::InvalidInput(format!(
                "expected {} values for {} replicates × {} stations, got {}",
                stations.len() * n_replicates,
                n_replicates,
                stations.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| v.is_infinite()) {
            return Err(Error::InvalidInput("dataset values must be finite or missing".into()));
        }
        if metadata.scale == DataScale::Uniform && values.iter().any(|&v| !v.is_nan() && !(v > 0.0 && v < 1.0)) {
            return Err(Error::InvalidInput("uniform-scale values must lie in (0, 1)".into()));
        }
        Ok(Self { stations, n_replicates, values, metadata })
    }

    /// Dataset with default station names `s1, s2, …`.
    pub fn from_rows(rows: &[Vec<f64>], scale: DataScale) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidInput("ragged rows".into()));
        }
        let stations = (0..d).map(|j| format!("s{}", j + 1)).collect();
        Self::new(stations, rows.len(), rows.concat(), DatasetMetadata::new(scale))
    }

    pub fn n_replicates(&self) -> usize {
        self.n_replicates
    }

    pub fn n_stations(&self) -> usize {
        self.stations.len()
    }

    pub fn scale(&self) -> DataScale {
        self.metadata.scale
    }

    /// Value at `(replicate, station)`; `None` when missing.
    pub fn get(&self, k: usize, j: usize) -> Option<f64> {
        let v = self.values[k * self.n_stations() + j];
        (!v.is_nan()).then_some(v)
    }

    /// Raw value, `NaN` when missing.
    pub fn raw(&self, k: usize, j: usize) -> f64 {
        self.values[k * self.n_stations() + j]
    }

    pub fn set(&mut self, k: usize, j: usize, v: Option<f64>) {
        let d = self.n_stations();
        self.values[k * d + j] = v.unwrap_or(f64::NAN);
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let d = self.n_stations();
        &self.values[k * d..(k + 1) * d]
    }

    /// Observed values of station `j`, in replicate order.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_replicates).filter_map(|k| self.get(k, j)).collect()
    }

    pub fn is_missing(&self, k: usize, j: usize) -> bool {
        self.raw(k, j).is_nan()
    }

    pub fn n_observed(&self) -> usize {
        self.values.iter().filter(|v| !v.is_nan()).count()
    }

    /// Same shape and metadata with every cell mapped through `f(k, j, v)`;
    /// missing cells stay missing.
    pub fn map_cells<F: FnMut(usize, usize, f64) -> f64>(&self, scale: DataScale, mut f: F) -> Self {
        let d = self.n_stations();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(n, &v)| if v.is_nan() { v } else { f(n / d, n % d, v) })
            .collect();
        let mut metadata = self.metadata.clone();
        metadata.scale = scale;
        Self { stations: self.stations.clone(), n_replicates: self.n_replicates, values, metadata }
    }

    /// Copies the missing-value pattern of `mask` (same shape) onto `self`.
    pub fn apply_mask(&mut self, mask: &MaximaDataset) -> Result<()> {
        if mask.n_replicates != self.n_replicates || mask.n_stations() != self.n_stations() {
            return Err(Error::InvalidInput("mask shape differs from dataset shape".into()));
        }
        for (v, m) in self.values.iter_mut().zip(&mask.values) {
            if m.is_nan() {
                *v = f64::NAN;
            }
        }
        Ok(())
    }

    /// Keeps only the listed stations, in the given order.
    pub fn select_stations(&self, keep: &[usize]) -> Self {
        let mut values = Vec::with_capacity(keep.len() * self.n_replicates);
        for k in 0..self.n_replicates {
            values.extend(keep.iter().map(|&j| self.raw(k, j)));
        }
        Self {
            stations: keep.iter().map(|&j| self.stations[j].clone()).collect(),
            n_replicates: self.n_replicates,
            values,
            metadata: self.metadata.clone(),
        }
    }

    /// Path of the metadata sidecar for a CSV path.
    pub fn metadata_path(csv: &Path) -> PathBuf {
        let mut name = csv.file_name().map(|s| s.to_os_string()).unwrap_or_default();
        name.push(".meta.json");
        csv.with_file_name(name)
    }

    /// Writes the CSV (header = station names, blank = missing) and the
    /// metadata sidecar. Numbers use shortest round-trip formatting.
    pub fn write(&self, csv_path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(csv_path)?;
        w.write_record(&self.stations)?;
        for k in 0..self.n_replicates {
            let rec: Vec<String> = self
                .row(k)
                .iter()
                .map(|v| if v.is_nan() { String::new() } else { format!("{v:?}") })
                .collect();
            w.write_record(&rec)?;
        }
        w.flush()?;
        let meta = serde_json::to_string_pretty(&self.metadata)?;
        std::fs::write(Self::metadata_path(csv_path), meta + "\n")?;
        Ok(())
    }

    /// Reads a CSV written by [`MaximaDataset::write`] or by hand. Without
    /// a sidecar the scale defaults to `default_scale`.
    pub fn read(csv_path: &Path, default_scale: DataScale) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(csv_path)?;
        let stations: Vec<String> = r.headers()?.iter().map(|s| s.trim().to_string()).collect();
        let mut values = Vec::new();
        let mut n = 0;
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.len() != stations.len() {
                return Err(Error::InvalidInput(format!(
                    "{}: row {} has {} fields, expected {}",
                    csv_path.display(),
                    line + 2,
                    rec.len(),
                    stations.len()
                )));
            }
            for field in rec.iter() {
                let field = field.trim();
                if field.is_empty() || field.eq_ignore_ascii_case("na") {
                    values.push(f64::NAN);
                } else {
                    values.push(field.parse::<f64>().map_err(|_| {
                        Error::InvalidInput(format!("{}: row {}: cannot parse '{field}'", csv_path.display(), line + 2))
                    })?);
                }
            }
            n += 1;
        }
        let meta_path = Self::metadata_path(csv_path);
        let metadata = if meta_path.exists() {
            serde_json::from_str(&std::fs::read_to_string(meta_path)?)?
        } else {
            DatasetMetadata::new(default_scale)
        };
        Self::new(stations, n, values, metadata)
    }
}
