//! Pair weights of the composite likelihood.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::StudyDesign;

/// How pair weights are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum WeightRule {
    /// Every distinct pair gets weight one.
    AllOnes,
    /// Weight one for pairs at most `delta` apart, zero otherwise.
    DistanceCutoff { delta: f64 },
}

/// Symmetric non-negative weights over station pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairWeights {
    pub rule: WeightRule,
    n: usize,
    /// Row-major `n × n`, zero diagonal.
    omega: Vec<f64>,
}

impl PairWeights {
    pub fn all_ones(n_sites: usize) -> Self {
        let mut omega = vec![1.0; n_sites * n_sites];
        for i in 0..n_sites {
            omega[i * n_sites + i] = 0.0;
        }
        Self { rule: WeightRule::AllOnes, n: n_sites, omega }
    }

    pub fn cutoff(design: &StudyDesign, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidInput(format!("cutoff distance must be positive, got {delta}")));
        }
        let n = design.n_sites();
        let mut omega = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..i {
                if design.distance(i, j) <= delta {
                    omega[i * n + j] = 1.0;
                    omega[j * n + i] = 1.0;
                }
            }
        }
        Ok(Self { rule: WeightRule::DistanceCutoff { delta }, n, omega })
    }

    pub fn from_rule(design: &StudyDesign, rule: WeightRule) -> Result<Self> {
        match rule {
            WeightRule::AllOnes => Ok(Self::all_ones(design.n_sites())),
            WeightRule::DistanceCutoff { delta } => Self::cutoff(design, delta),
        }
    }

    /// Arbitrary symmetric weights (the rule is recorded as all-ones).
    pub fn from_matrix(n: usize, omega: Vec<f64>) -> Result<Self> {
        if omega.len() != n * n {
            return Err(Error::InvalidInput(format!("weight matrix needs {} entries", n * n)));
        }
        for i in 0..n {
            for j in 0..n {
                let w = omega[i * n + j];
                if !(w >= 0.0 && w.is_finite()) || w != omega[j * n + i] {
                    return Err(Error::InvalidInput(format!("weights must be finite, >= 0 and symmetric at ({i}, {j})")));
                }
            }
        }
        let mut omega = omega;
        for i in 0..n {
            omega[i * n + i] = 0.0;
        }
        Ok(Self { rule: WeightRule::AllOnes, n, omega })
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.omega[i * self.n + j]
    }

    /// Pairs `(i, j, ω)` with `i < j` and `ω > 0`, in lexicographic order.
    pub fn active_pairs(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                let w = self.get(i, j);
                if w > 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    /// Weights restricted to the listed stations, in that order.
    pub fn select(&self, keep: &[usize]) -> Self {
        let m = keep.len();
        let mut omega = vec![0.0; m * m];
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate() {
                omega[a * m + b] = self.get(i, j);
            }
        }
        Self { rule: self.rule, n: m, omega }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_rule() {
        let d = StudyDesign::planar(&[(0.0, 0.0, 0.0), (0.3, 0.0, 0.0), (1.0, 0.0, 0.0)], vec![0.5]).unwrap();
        let w = PairWeights::cutoff(&d, 0.375).unwrap();
        assert_eq!(w.active_pairs(), vec![(0, 1, 1.0)]);
        assert_eq!(w.get(1, 0), 1.0);
        assert_eq!(PairWeights::all_ones(3).active_pairs().len(), 3);
        assert!(PairWeights::cutoff(&d, 0.0).is_err());
        let s = w.select(&[1, 0]);
        assert_eq!(s.active_pairs(), vec![(0, 1, 1.0)]);
    }

    #[test]
    fn matrix_validation() {
        assert!(PairWeights::from_matrix(2, vec![0.0, 1.0, 2.0, 0.0]).is_err());
        assert!(PairWeights::from_matrix(2, vec![0.0, -1.0, -1.0, 0.0]).is_err());
        assert_eq!(PairWeights::from_matrix(2, vec![5.0, 0.5, 0.5, 0.0]).unwrap().get(0, 0), 0.0);
    }
}
