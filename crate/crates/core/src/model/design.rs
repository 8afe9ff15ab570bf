//! Study design: station locations, altitude covariate, replicate times and metric.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EARTH_RADIUS_KM: f64 = 6371.0;
/// Great-circle distances are reported in thousands of km.
const DISTANCE_SCALE: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// Planar coordinates, Euclidean distance.
    Euclidean,
    /// Longitude/latitude in degrees, haversine distance in km / 1000.
    GreatCircle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub name: String,
    /// Longitude (degrees) or planar x.
    pub x: f64,
    /// Latitude (degrees) or planar y.
    pub y: f64,
    /// Altitude covariate in km.
    pub alt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyDesign {
    pub sites: Vec<Site>,
    /// Rescaled replicate times `k/(n+1)`.
    pub times: Vec<f64>,
    pub metric: Metric,
}

#[derive(Debug, Deserialize, Serialize)]
struct SiteRow {
    station: String,
    lon: f64,
    lat: f64,
    alt_km: f64,
}

/// `k/(n+1)` for `k = 1..=n`.
pub fn rescaled_times(n: usize) -> Vec<f64> {
    (1..=n).map(|k| k as f64 / (n as f64 + 1.0)).collect()
}

impl StudyDesign {
    pub fn new(sites: Vec<Site>, times: Vec<f64>, metric: Metric) -> Result<Self> {
        let d = Self { sites, times, metric };
        d.validate()?;
        Ok(d)
    }

    /// Planar design from `(x, y, alt)` triples.
    pub fn planar(coords: &[(f64, f64, f64)], times: Vec<f64>) -> Result<Self> {
        let sites = coords
            .iter()
            .enumerate()
            .map(|(i, &(x, y, alt))| Site { name: format!("s{}", i + 1), x, y, alt })
            .collect();
        Self::new(sites, times, Metric::Euclidean)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites.len() < 2 {
            return Err(Error::InvalidInput("a design needs at least two sites".into()));
        }
        for s in &self.sites {
            if !(s.x.is_finite() && s.y.is_finite() && s.alt.is_finite()) {
                return Err(Error::InvalidInput(format!("site {} has non-finite coordinates", s.name)));
            }
        }
        for i in 0..self.sites.len() {
            for j in 0..i {
                if !(self.distance(i, j) > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "sites {} and {} coincide",
                        self.sites[j].name, self.sites[i].name
                    )));
                }
            }
        }
        if self.times.iter().any(|t| !t.is_finite()) || self.times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidInput("replicate times must be finite and nondecreasing".into()));
        }
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn with_replicates(mut self, n: usize) -> Self {
        self.times = rescaled_times(n);
        self
    }

    /// Displacement vector `s_i − s_j` in distance units.
    ///
    /// For the great-circle metric this is the local east/north projection,
    /// rescaled so its norm equals the haversine distance.
    pub fn displacement(&self, i: usize, j: usize) -> [f64; 2] {
        let (a, b) = (&self.sites[i], &self.sites[j]);
        match self.metric {
            Metric::Euclidean => [a.x - b.x, a.y - b.y],
            Metric::GreatCircle => {
                let mean_lat = 0.5 * (a.y + b.y).to_radians();
                let dx = (a.x - b.x).to_radians() * mean_lat.cos();
                let dy = (a.y - b.y).to_radians();
                let norm = dx.hypot(dy);
                if norm == 0.0 {
                    return [0.0, 0.0];
                }
                let d = haversine(a.x, a.y, b.x, b.y);
                [dx / norm * d, dy / norm * d]
            }
        }
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.sites[i], &self.sites[j]);
        match self.metric {
            Metric::Euclidean => (a.x - b.x).hypot(a.y - b.y),
            Metric::GreatCircle => haversine(a.x, a.y, b.x, b.y),
        }
    }

    /// Reads a station CSV with header `station,lon,lat,alt_km`.
    pub fn read_csv(path: &Path, metric: Metric, n_replicates: usize) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut sites = Vec::new();
        for row in rdr.deserialize() {
            let r: SiteRow = row?;
            sites.push(Site { name: r.station, x: r.lon, y: r.lat, alt: r.alt_km });
        }
        Self::new(sites, rescaled_times(n_replicates), metric)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for s in &self.sites {
            w.serialize(SiteRow { station: s.name.clone(), lon: s.x, lat: s.y, alt_km: s.alt })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Haversine distance between two lon/lat points (degrees), in km / 1000.
pub fn haversine(lon1: f64, lat1: f64, lon2: f64, lat2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dphi = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin() / DISTANCE_SCALE
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haversine_quarter_meridian() {
        // Pole to equator is a quarter of the circumference.
        let d = haversine(0.0, 0.0, 0.0, 90.0);
        assert!((d - EARTH_RADIUS_KM * std::f64::consts::FRAC_PI_2 / 1000.0).abs() < 1e-12);
    }

    #[test]
    fn great_circle_displacement_norm() {
        let d = StudyDesign::new(
            vec![
                Site { name: "a".into(), x: 6.0, y: 46.0, alt: 0.5 },
                Site { name: "b".into(), x: 9.5, y: 47.2, alt: 1.5 },
            ],
            rescaled_times(3),
            Metric::GreatCircle,
        )
        .unwrap();
        let h = d.displacement(1, 0);
        assert!((h[0].hypot(h[1]) - d.distance(0, 1)).abs() < 1e-14);
        assert!(h[0] > 0.0 && h[1] > 0.0);
    }

    #[test]
    fn rejects_bad_designs() {
        assert!(StudyDesign::planar(&[(0.0, 0.0, 0.0)], vec![]).is_err());
        assert!(StudyDesign::planar(&[(0.0, 0.0, 0.0), (0.0, 0.0, 1.0)], vec![]).is_err());
        assert!(StudyDesign::planar(&[(0.0, 0.0, 0.0), (1.0, 0.0, 1.0)], vec![0.5, 0.2]).is_err());
    }

    #[test]
    fn times_are_rescaled() {
        assert_eq!(rescaled_times(3), vec![0.25, 0.5, 0.75]);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sites.csv");
        let d = StudyDesign::new(
            vec![
                Site { name: "Bern".into(), x: 7.44, y: 46.95, alt: 0.553 },
                Site { name: "Sion".into(), x: 7.33, y: 46.22, alt: 0.482 },
            ],
            rescaled_times(4),
            Metric::GreatCircle,
        )
        .unwrap();
        d.write_csv(&p).unwrap();
        let header = std::fs::read_to_string(&p).unwrap();
        assert!(header.starts_with("station,lon,lat,alt_km"));
        let back = StudyDesign::read_csv(&p, Metric::GreatCircle, 4).unwrap();
        assert_eq!(back, d);
    }
}
