//! Multivariate normal CDF by randomized quasi-Monte Carlo with sequential
//! conditioning (Genz's separation-of-variables method).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::linalg::{cholesky_jittered, CorrelationMatrix, SquareMatrix};
use super::normal::{std_normal_cdf, std_normal_quantile};
use crate::error::{Error, Result};

/// Estimate with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MvnEstimate {
    pub value: f64,
    pub std_error: f64,
}

const PRIMES: [f64; 25] = [
    2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0, 23.0, 29.0, 31.0, 37.0, 41.0, 43.0, 47.0, 53.0,
    59.0, 61.0, 67.0, 71.0, 73.0, 79.0, 83.0, 89.0, 97.0,
];
const SHIFTS: usize = 8;

/// Reusable workspace: reordered Cholesky factor for one `(upper, corr)` ordering.
pub struct MvnProblem {
    chol: SquareMatrix,
    upper: Vec<f64>,
}

impl MvnProblem {
    pub fn new(upper: &[f64], corr: &CorrelationMatrix) -> Result<Self> {
        let d = upper.len();
        if !(2..=25).contains(&d) {
            return Err(Error::InvalidInput(format!("mvn_cdf needs 2 ≤ D ≤ 25, got {d}")));
        }
        if corr.dim() != d {
            return Err(Error::InvalidInput("dimension mismatch".into()));
        }
        // Most restrictive limits first.
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| upper[a].total_cmp(&upper[b]));
        let permuted = SquareMatrix::from_fn(d, |i, j| corr.get(order[i], order[j]));
        let factor = cholesky_jittered(&permuted, 1e-6)?;
        Ok(Self {
            chol: factor.lower,
            upper: order.iter().map(|&i| upper[i]).collect(),
        })
    }

    pub fn estimate(&self, qmc_points: usize, seed: u64) -> MvnEstimate {
        let d = self.upper.len();
        if self.upper.iter().any(|&b| b == f64::NEG_INFINITY) {
            return MvnEstimate { value: 0.0, std_error: 0.0 };
        }
        if self.upper.iter().all(|&b| b == f64::INFINITY) {
            return MvnEstimate { value: 1.0, std_error: 0.0 };
        }
        let l = &self.chol;
        let e1 = std_normal_cdf(self.upper[0] / l[(0, 0)]);
        let per_shift = (qmc_points / SHIFTS).max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gen: Vec<f64> = PRIMES[..d - 1].iter().map(|p| p.sqrt().fract()).collect();
        let mut y = vec![0.0; d];
        let mut means = [0.0; SHIFTS];
        for mean in means.iter_mut() {
            let shift: Vec<f64> = (0..d - 1).map(|_| rng.random::<f64>()).collect();
            let mut acc = 0.0;
            for n in 1..=per_shift {
                let mut f = e1;
                let mut e = e1;
                for i in 1..d {
                    let t = (n as f64 * gen[i - 1] + shift[i - 1]).fract();
                    let w = (2.0 * t - 1.0).abs();
                    let p = (w * e).clamp(1e-300, 1.0 - 1e-16);
                    y[i - 1] = std_normal_quantile(p);
                    let s: f64 = (0..i).map(|j| l[(i, j)] * y[j]).sum();
                    e = std_normal_cdf((self.upper[i] - s) / l[(i, i)]);
                    f *= e;
                    if f == 0.0 {
                        break;
                    }
                }
                acc += f;
            }
            *mean = acc / per_shift as f64;
        }
        let value = means.iter().sum::<f64>() / SHIFTS as f64;
        let var = means.iter().map(|m| (m - value).powi(2)).sum::<f64>()
            / (SHIFTS * (SHIFTS - 1)) as f64;
        MvnEstimate { value, std_error: var.sqrt() }
    }
}

/// `P(X ≤ upper)` for `X ~ N(0, corr)`.
pub fn mvn_cdf(
    upper: &[f64],
    corr: &CorrelationMatrix,
    qmc_points: usize,
    seed: u64,
) -> Result<MvnEstimate> {
    Ok(MvnProblem::new(upper, corr)?.estimate(qmc_points, seed))
}
