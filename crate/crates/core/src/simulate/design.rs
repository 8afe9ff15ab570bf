use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{rescaled_times, StudyDesign};

/// Altitude covariate `2 φ(x; 0.5, 0.25) − 1` of the synthetic mountain range.
pub fn mountain_altitude(x: f64) -> f64 {
    let sd = 0.25;
    let z = (x - 0.5) / sd;
    2.0 * (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt()) - 1.0
}

/// `grid × grid` sites on the unit square, jittered uniformly by up to
/// `perturbation` in each coordinate (clamped inside the square), with the
/// mountain-range altitude covariate and `n_replicates` rescaled times.
pub fn mountain_range_design(grid: usize, perturbation: f64, seed: u64, n_replicates: usize) -> Result<StudyDesign> {
    if grid < 2 {
        return Err(Error::InvalidInput("grid must have at least 2 points per side".into()));
    }
    if !(perturbation >= 0.0 && perturbation < 0.5 / grid as f64) {
        return Err(Error::InvalidInput(format!(
            "perturbation must lie in [0, {}), got {perturbation}",
            0.5 / grid as f64
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = Vec::with_capacity(grid * grid);
    for i in 0..grid {
        for j in 0..grid {
            let mut x = (j as f64 + 0.5) / grid as f64;
            let mut y = (i as f64 + 0.5) / grid as f64;
            if perturbation > 0.0 {
                x += rng.random_range(-perturbation..perturbation);
                y += rng.random_range(-perturbation..perturbation);
            }
            coords.push((x, y, mountain_altitude(x)));
        }
    }
    StudyDesign::planar(&coords, rescaled_times(n_replicates))
}
