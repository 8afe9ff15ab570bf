//! Adaptive Gauss-Kronrod quadrature on finite and semi-infinite ranges, plus
//! fixed Gauss-Legendre rules for composite panel integration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Change of variables mapping `(0, ∞)` onto an interval suited to the adaptive rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Substitution {
    /// `r = exp(u)`, `u ∈ ℝ`, clipped where the integrand tail is negligible.
    LogTransform,
    /// `r = c·t / (1 - t)`, `t ∈ (0, 1)`.
    RationalTransform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub substitution: Substitution,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_subdivisions: 400,
            substitution: Substitution::LogTransform,
        }
    }
}

impl QuadratureSpec {
    pub fn with_substitution(mut self, substitution: Substitution) -> Self {
        self.substitution = substitution;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(Error::InvalidInput(
                "quadrature tolerances must be strictly positive".into(),
            ));
        }
        if self.max_subdivisions < 8 {
            return Err(Error::InvalidInput("max_subdivisions must be at least 8".into()));
        }
        Ok(())
    }
}

// Gauss-Kronrod 10/21 abscissae and weights (QUADPACK qk21).
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

struct Segment<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: [f64; N],
}

fn gk21<const N: usize, F: FnMut(f64) -> [f64; N]>(f: &mut F, a: f64, b: f64) -> Segment<N> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = [0.0; N];
    let mut gauss = [0.0; N];
    for i in 0..N {
        kron[i] = WGK[10] * fc[i];
    }
    for j in 0..10 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for i in 0..N {
            let s = f1[i] + f2[i];
            kron[i] += WGK[j] * s;
            if j % 2 == 1 {
                gauss[i] += WG[j / 2] * s;
            }
        }
    }
    let mut value = [0.0; N];
    let mut error = [0.0; N];
    for i in 0..N {
        value[i] = kron[i] * h;
        error[i] = ((kron[i] - gauss[i]) * h).abs();
        // QUADPACK-style error sharpening
        let e = error[i];
        if e > 0.0 {
            let scaled = (200.0 * e / value[i].abs().max(1e-300)).powf(1.5);
            if scaled < 1.0 {
                error[i] = e.min(value[i].abs() * scaled).max(e * 1e-3);
            }
        }
    }
    Segment { a, b, value, error }
}

/// Adaptive GK21 integration of a vector-valued integrand over `[bp[0], bp[last]]`,
/// starting from the panels delimited by the breakpoints.
///
/// Converges when every component meets `max(abs_tol, rel_tol·|I_i|)`.
pub fn integrate_panels<const N: usize, F: FnMut(f64) -> [f64; N]>(
    mut f: F,
    breakpoints: &[f64],
    spec: &QuadratureSpec,
) -> Result<[f64; N]> {
    spec.validate()?;
    if breakpoints.len() < 2 {
        return Err(Error::InvalidInput("need at least two breakpoints".into()));
    }
    let mut segs: Vec<Segment<N>> = breakpoints
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gk21(&mut f, w[0], w[1]))
        .collect();
    if segs.is_empty() {
        return Ok([0.0; N]);
    }
    loop {
        let mut total = [0.0; N];
        let mut err = [0.0; N];
        for s in &segs {
            for i in 0..N {
                total[i] += s.value[i];
                err[i] += s.error[i];
            }
        }
        let tol: [f64; N] = std::array::from_fn(|i| spec.abs_tol.max(spec.rel_tol * total[i].abs()));
        if (0..N).all(|i| err[i] <= tol[i]) {
            return Ok(total);
        }
        if segs.len() >= spec.max_subdivisions {
            let worst = (0..N).fold(0.0_f64, |m, i| m.max(err[i]));
            return Err(Error::Quadrature {
                estimate: total[0],
                error: worst,
                subdivisions: segs.len(),
            });
        }
        // Bisect the segment with the largest error relative to the tolerance.
        let (idx, _) = segs
            .iter()
            .enumerate()
            .map(|(k, s)| (k, (0..N).fold(0.0_f64, |m, i| m.max(s.error[i] / tol[i]))))
            .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        let s = segs.swap_remove(idx);
        let mid = 0.5 * (s.a + s.b);
        if !(mid > s.a && mid < s.b) {
            let worst = (0..N).fold(0.0_f64, |m, i| m.max(err[i]));
            return Err(Error::Quadrature {
                estimate: total[0],
                error: worst,
                subdivisions: segs.len() + 1,
            });
        }
        segs.push(gk21(&mut f, s.a, mid));
        segs.push(gk21(&mut f, mid, s.b));
    }
}

/// Integrate a scalar function over `(0, ∞)`.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(f: F, spec: &QuadratureSpec) -> Result<f64> {
    let [v] = integrate_semi_infinite_vec(|r| [f(r)], spec, 1.0)?;
    Ok(v)
}

/// Integrate a vector-valued function over `(0, ∞)`; `scale` is a typical
/// magnitude of `r` where the integrand lives and seeds the clipping scan.
pub fn integrate_semi_infinite_vec<const N: usize, F: Fn(f64) -> [f64; N]>(
    f: F,
    spec: &QuadratureSpec,
    scale: f64,
) -> Result<[f64; N]> {
    spec.validate()?;
    let scale = if scale.is_finite() && scale > 0.0 { scale } else { 1.0 };
    match spec.substitution {
        Substitution::LogTransform => {
            let g = |u: f64| {
                let r = u.exp();
                let v = f(r);
                std::array::from_fn(|i| {
                    let x = v[i] * r;
                    if x.is_finite() {
                        x
                    } else {
                        0.0
                    }
                })
            };
            let (lo, hi) = clip_log_range(&g, scale.ln(), spec);
            let mut bps = Vec::new();
            let mut u = lo;
            while u < hi {
                bps.push(u);
                u += 4.0;
            }
            bps.push(hi);
            integrate_panels(g, &bps, spec)
        }
        Substitution::RationalTransform => {
            let g = |t: f64| {
                let om = 1.0 - t;
                let r = scale * t / om;
                let jac = scale / (om * om);
                let v = f(r);
                std::array::from_fn(|i| {
                    let x = v[i] * jac;
                    if x.is_finite() {
                        x
                    } else {
                        0.0
                    }
                })
            };
            let bps: Vec<f64> = (0..=16).map(|k| k as f64 / 16.0).collect();
            integrate_panels(g, &bps, spec)
        }
    }
}

const U_LIMIT: f64 = 700.0;

// Walk outward from `u0` in unit steps until the estimated tail mass of every
// component is negligible against its tolerance.
fn clip_log_range<const N: usize, G: Fn(f64) -> [f64; N]>(
    g: &G,
    u0: f64,
    spec: &QuadratureSpec,
) -> (f64, f64) {
    let mut peak = [0.0_f64; N];
    let center = g(u0);
    for i in 0..N {
        peak[i] = center[i].abs();
    }
    let mut ends = [u0, u0];
    for (side, dir) in [(0usize, -1.0), (1usize, 1.0)] {
        let mut u = u0;
        let mut prev = center;
        let mut quiet = 0;
        loop {
            u += dir;
            if u.abs() >= U_LIMIT {
                u = dir * U_LIMIT;
                break;
            }
            let cur = g(u);
            let mut negligible = true;
            for i in 0..N {
                let a = cur[i].abs();
                peak[i] = peak[i].max(a);
                let tol = 0.01 * spec.abs_tol.max(spec.rel_tol * peak[i]);
                let pa = prev[i].abs();
                let tail = if a == 0.0 {
                    0.0
                } else if pa > a {
                    a / (pa / a).ln().max(0.05)
                } else {
                    f64::INFINITY
                };
                if tail > tol {
                    negligible = false;
                }
            }
            quiet = if negligible { quiet + 1 } else { 0 };
            prev = cur;
            if quiet >= 2 {
                break;
            }
        }
        ends[side] = u;
    }
    (ends[0], ends[1])
}

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..(n + 1) / 2 {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                if n == 1 {
                    p0 = 1.0;
                    p1 = x;
                }
                dp = nf * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Integrate over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(c + h * x))
            .sum::<f64>()
            * h
    }
}
