//! Small dense matrices, jittered Cholesky factorisation and correlation matrices.

use crate::error::{Error, Result};

/// Dense square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> f64>(n: usize, mut f: F) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("matrix must be square".into()));
        }
        Ok(Self { n, data: rows.concat() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    /// `L·Lᵀ` for a lower-triangular `self`.
    pub fn mul_transpose_self(&self) -> SquareMatrix {
        let n = self.n;
        SquareMatrix::from_fn(n, |i, j| {
            let m = i.min(j);
            (0..=m).map(|k| self[(i, k)] * self[(j, k)]).sum()
        })
    }

    pub fn max_abs_diff(&self, other: &SquareMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Lower-triangular matrix-vector product (`self` assumed lower triangular).
    pub fn lower_mul_vec(&self, v: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let row = &self.data[i * self.n..i * self.n + i + 1];
            out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }
}

impl std::ops::Index<(usize, usize)> for SquareMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for SquareMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Lower Cholesky factor together with the diagonal jitter that was needed.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    pub lower: SquareMatrix,
    pub jitter: f64,
}

fn cholesky_plain(m: &SquareMatrix, jitter: f64) -> Option<SquareMatrix> {
    let n = m.dim();
    let mut l = SquareMatrix::zeros(n);
    for j in 0..n {
        let mut d = m[(j, j)] + jitter;
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

/// Cholesky factorisation with escalating diagonal jitter.
///
/// The first attempt uses no jitter; subsequent attempts add
/// `1e-10·mean(diag)` multiplied by successive decades until `max_jitter`.
pub fn cholesky_jittered(m: &SquareMatrix, max_jitter: f64) -> Result<CholeskyFactor> {
    let n = m.dim();
    if !m.is_symmetric(1e-12) {
        return Err(Error::InvalidInput("matrix is not symmetric".into()));
    }
    if let Some(lower) = cholesky_plain(m, 0.0) {
        return Ok(CholeskyFactor { lower, jitter: 0.0 });
    }
    let mean_diag = (0..n).map(|i| m[(i, i)]).sum::<f64>() / n.max(1) as f64;
    let mut jitter = 1e-10 * mean_diag.abs().max(f64::MIN_POSITIVE);
    while jitter <= max_jitter * (1.0 + 1e-12) {
        if let Some(lower) = cholesky_plain(m, jitter) {
            return Ok(CholeskyFactor { lower, jitter });
        }
        jitter *= 10.0;
    }
    Err(Error::NotPositiveDefinite { jitter: max_jitter })
}

/// Symmetric unit-diagonal correlation matrix over a site set.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    inner: SquareMatrix,
}

impl CorrelationMatrix {
    pub fn new(m: SquareMatrix) -> Result<Self> {
        let n = m.dim();
        for i in 0..n {
            if m[(i, i)] != 1.0 {
                return Err(Error::InvalidInput(format!("diagonal entry {i} is not 1")));
            }
            for j in 0..i {
                let v = m[(i, j)];
                if (v - m[(j, i)]).abs() > 1e-14 || !(-1.0..=1.0).contains(&v) {
                    return Err(Error::InvalidInput(format!(
                        "entry ({i},{j}) is not a symmetric correlation"
                    )));
                }
            }
        }
        Ok(Self { inner: m })
    }

    pub fn identity(n: usize) -> Self {
        Self { inner: SquareMatrix::identity(n) }
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.inner
    }

    pub fn cholesky(&self, max_jitter: f64) -> Result<CholeskyFactor> {
        cholesky_jittered(&self.inner, max_jitter)
    }
}
