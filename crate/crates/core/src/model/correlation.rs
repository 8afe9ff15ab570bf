//! Range function, anisotropy matrices and the (non-)stationary exponential
//! correlation of the Gaussian spectral fields.

use super::design::StudyDesign;
use super::params::DependenceParams;
use crate::error::{Error, Result};
use crate::numerics::{cholesky_jittered, CholeskyFactor, CorrelationMatrix, SquareMatrix};

/// Clamp on the log-range so optimizer excursions stay finite.
const LOG_RANGE_CLAMP: f64 = 30.0;
/// Maximum diagonal jitter accepted when factorising a correlation matrix.
pub const MAX_CORRELATION_JITTER: f64 = 1e-6;

pub type Mat2 = [[f64; 2]; 2];

/// `λ_{s,t} = exp(λ0 + λ1·alt + λ2·t)`.
#[inline]
pub fn lambda_range(alt: f64, time: f64, p: &DependenceParams) -> f64 {
    let eta = p.lambda0 + p.lambda1 * alt + p.lambda2 * time;
    eta.clamp(-LOG_RANGE_CLAMP, LOG_RANGE_CLAMP).exp()
}

/// Rotated anisotropy matrix `R(θ) diag(1, a) R(θ)ᵀ`.
pub fn anisotropy_matrix(a: f64, theta: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    let off = c * s * (1.0 - a);
    [[c * c + a * s * s, off], [off, s * s + a * c * c]]
}

/// `hᵀ A(θ)⁻¹ h`.
#[inline]
pub fn aniso_quadratic(h: [f64; 2], a: f64, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let u = c * h[0] + s * h[1];
    let v = -s * h[0] + c * h[1];
    u * u + v * v / a
}

/// `Ω = λ²(1+r)^{−2ν} A(θ)` at a site with altitude `alt`.
pub fn omega_matrix(alt: f64, time: f64, r: f64, p: &DependenceParams) -> Mat2 {
    let lam = lambda_range(alt, time, p);
    let scale = lam * lam * (1.0 + r).powf(-2.0 * p.nu);
    let a = anisotropy_matrix(p.aniso_a, p.aniso_theta);
    [[scale * a[0][0], scale * a[0][1]], [scale * a[1][0], scale * a[1][1]]]
}

fn det2(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// General non-stationary correlation between two sites with covariance
/// matrices `o1`, `o2` and displacement `h`, for `C(h) = exp(−h)`.
pub fn nonstationary_correlation(h: [f64; 2], o1: &Mat2, o2: &Mat2) -> f64 {
    let avg = [
        [0.5 * (o1[0][0] + o2[0][0]), 0.5 * (o1[0][1] + o2[0][1])],
        [0.5 * (o1[1][0] + o2[1][0]), 0.5 * (o1[1][1] + o2[1][1])],
    ];
    let det = det2(&avg);
    // Q = hᵀ avg⁻¹ h using the adjugate.
    let q = (avg[1][1] * h[0] * h[0] - (avg[0][1] + avg[1][0]) * h[0] * h[1] + avg[0][0] * h[1] * h[1]) / det;
    let pref = det2(o1).powf(0.25) * det2(o2).powf(0.25) / det.sqrt();
    (pref * (-q.max(0.0).sqrt()).exp()).min(1.0)
}

/// Correlation between sites `i` and `j` at time `time` for magnitude `r`.
pub fn pair_correlation(
    design: &StudyDesign,
    i: usize,
    j: usize,
    time: f64,
    r: f64,
    p: &DependenceParams,
) -> f64 {
    if i == j {
        return 1.0;
    }
    let h = design.displacement(i, j);
    let o1 = omega_matrix(design.sites[i].alt, time, r, p);
    let o2 = omega_matrix(design.sites[j].alt, time, r, p);
    nonstationary_correlation(h, &o1, &o2)
}

/// Reduced form of the pair correlation as a function of magnitude:
/// `ρ(r) = pref · exp{−m (1+r)^ν}`.
///
/// Exact because both sites share the anisotropy matrix, so all
/// determinant factors collapse to a ratio of the two ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairKernel {
    pub pref: f64,
    pub m: f64,
    pub nu: f64,
}

impl PairKernel {
    pub fn new(h: [f64; 2], lam1: f64, lam2: f64, p: &DependenceParams) -> Self {
        let s2 = lam1 * lam1 + lam2 * lam2;
        let q = aniso_quadratic(h, p.aniso_a, p.aniso_theta);
        Self { pref: 2.0 * (lam1 * lam2) / s2, m: (2.0 * q / s2).sqrt(), nu: p.nu }
    }

    pub fn for_pair(design: &StudyDesign, i: usize, j: usize, time: f64, p: &DependenceParams) -> Self {
        let lam1 = lambda_range(design.sites[i].alt, time, p);
        let lam2 = lambda_range(design.sites[j].alt, time, p);
        Self::new(design.displacement(i, j), lam1, lam2, p)
    }

    /// Magnitude-independent kernel.
    pub fn is_constant(&self) -> bool {
        self.nu == 0.0 || self.m == 0.0
    }

    #[inline]
    pub fn rho(&self, r: f64) -> f64 {
        if self.nu == 0.0 {
            self.pref * (-self.m).exp()
        } else {
            self.pref * (-self.m * (1.0 + r).powf(self.nu)).exp()
        }
    }
}

fn build_matrix(design: &StudyDesign, time: f64, r: f64, p: &DependenceParams) -> SquareMatrix {
    let d = design.n_sites();
    let mut m = SquareMatrix::identity(d);
    let lams: Vec<f64> = design.sites.iter().map(|s| lambda_range(s.alt, time, p)).collect();
    let g = (1.0 + r).powf(p.nu);
    for i in 0..d {
        for j in 0..i {
            let k = PairKernel::new(design.displacement(i, j), lams[i], lams[j], p);
            let v = (k.pref * (-k.m * g).exp()).min(1.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

fn most_collinear_pair(m: &SquareMatrix) -> (usize, usize) {
    let mut best = (1, 0, f64::NEG_INFINITY);
    for i in 0..m.dim() {
        for j in 0..i {
            if m[(i, j)] > best.2 {
                best = (j, i, m[(i, j)]);
            }
        }
    }
    (best.0, best.1)
}

/// Cholesky factor of the site correlation matrix, with jitter repair.
pub fn correlation_cholesky(
    design: &StudyDesign,
    time: f64,
    r: f64,
    p: &DependenceParams,
) -> Result<CholeskyFactor> {
    let m = build_matrix(design, time, r, p);
    cholesky_jittered(&m, MAX_CORRELATION_JITTER).map_err(|_| {
        let (i, j) = most_collinear_pair(&m);
        Error::CorrelationRepair(i, j)
    })
}

/// Site correlation matrix; fails if it cannot be made positive definite.
pub fn correlation_matrix(
    design: &StudyDesign,
    time: f64,
    r: f64,
    p: &DependenceParams,
) -> Result<CorrelationMatrix> {
    let m = build_matrix(design, time, r, p);
    if cholesky_jittered(&m, MAX_CORRELATION_JITTER).is_err() {
        let (i, j) = most_collinear_pair(&m);
        return Err(Error::CorrelationRepair(i, j));
    }
    CorrelationMatrix::new(m)
}
