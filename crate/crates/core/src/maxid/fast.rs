//! Fixed-rule evaluation of `(V, V1, V2, V12)` for the likelihood hot path.
//!
//! Integration by parts moves κ onto its tail mass and removes the bivariate
//! normal CDF from the exponent integrand:
//!
//! `V = ∫ κ([r,∞)) {x1 φ(x1) Φ(c2) + x2 φ(x2) Φ(c1) − φ₂(x1, x2; ρ) dρ/du} du`
//!
//! with `u = log r`, `x_j = z_j/r` and `c_j` the conditional standardised
//! levels. All integrands are then sums of elementary functions. Nodes sit on
//! a global lattice of Gauss-Legendre panels in `u`, so the κ factors and the
//! magnitude modulation `(1+r)^ν` are computed once per parameter value and
//! shared by every pair and replicate.

use super::exponent::{ExponentPartials, RHO_CAP};
use crate::model::kappa::{log_kappa_tail, BETA_SWITCH};
use crate::model::PairKernel;
use crate::numerics::{std_normal_cdf, std_normal_pdf, GaussLegendre};

/// Panel layout of the fixed rule.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FastRule {
    /// Body panel width as a multiple of the narrowest peak width in `u`.
    pub body_scale: f64,
    /// Upper bound on the body panel width.
    pub max_body_width: f64,
    /// Upper bound on the tail panel width.
    pub max_tail_width: f64,
    /// Gauss-Legendre nodes per panel.
    pub nodes: usize,
}

impl Default for FastRule {
    fn default() -> Self {
        Self { body_scale: 1.5, max_body_width: 0.5, max_tail_width: 2.0, nodes: 6 }
    }
}

/// Location `x* = z/r*` of the integrand peak and its width in `u = log r`.
///
/// The peak balances the Gaussian factor `exp(−x²/2)` against the decay of
/// κ; the width follows from the curvature of the log-integrand there.
pub fn peak_shape(z: f64, alpha: f64, beta: f64) -> (f64, f64) {
    if beta <= BETA_SWITCH {
        let x = alpha.sqrt().max(1.0);
        return (x, 1.0 / (2.0 * x * x).sqrt());
    }
    let zb = (beta * z.ln()).exp();
    let x = (alpha * zb).powf(1.0 / (beta + 2.0)).max(1.0);
    let r_b = zb / x.powf(beta);
    let curvature = 2.0 * x * x + alpha * beta * r_b;
    (x, 1.0 / curvature.sqrt())
}

/// Log-budget of the tails dropped by the cutoffs.
const TAIL_BUDGET: f64 = 28.0;

/// Smallest `u ≥ lz` with `c·(u − lz) + log κ̄(e^{lz}) − log κ̄(e^u) ≥ TAIL_BUDGET`,
/// where `κ̄` is the κ tail. For β > 0 the tail decays super-exponentially
/// and the root is found by Newton's method from above.
fn tail_cutoff(lz: f64, c: f64, alpha: f64, beta: f64) -> f64 {
    if beta <= BETA_SWITCH {
        return lz + TAIL_BUDGET / (c + alpha);
    }
    let e0 = (beta * lz).exp();
    let f = |u: f64| c * (u - lz) + alpha * ((beta * u).exp() - e0) / beta - TAIL_BUDGET;
    // Convex and increasing: the linearisation at lz overshoots the root.
    let mut u = lz + TAIL_BUDGET / (c + alpha * e0);
    for _ in 0..50 {
        let fu = f(u);
        let step = fu / (c + alpha * (beta * u).exp());
        u -= step;
        if step.abs() < 1e-6 {
            break;
        }
    }
    u
}

/// Integration limits in `u` for a single level `z`: below `u_lo` the
/// Gaussian factor is negligible, above `u_hi` the κ tail is.
pub fn level_cutoffs(z: f64, alpha: f64, beta: f64) -> (f64, f64) {
    let lz = z.ln();
    let (x_star, _) = peak_shape(z, alpha, beta);
    (lz - (x_star + 9.0).ln(), tail_cutoff(lz, 1.0, alpha, beta).max(lz + 2.0))
}

/// Upper cutoff extended past the drop of a magnitude-dependent correlation
/// (to where `m(1+r)^ν ≈ 36`, so that ρ is below 1e-15), but not beyond
/// where the κ tail alone is negligible.
pub fn kernel_cutoff(u_hi: f64, z_max: f64, kernel: &PairKernel, alpha: f64, beta: f64) -> f64 {
    if kernel.nu > 0.0 && kernel.m > 0.0 {
        let uc = -kernel.m.ln() / kernel.nu;
        let ext = (uc + 36f64.ln() / kernel.nu).min(tail_cutoff(z_max.ln(), 0.0, alpha, beta));
        u_hi.max(ext)
    } else {
        u_hi
    }
}

/// Node data of the global lattice for fixed `(α, β, ν)`.
#[derive(Debug, Clone)]
pub struct FastGrid {
    nodes: usize,
    /// Panel edges; panel `k` spans `edges[k]..edges[k+1]`.
    edges: Vec<f64>,
    inv_r: Vec<f64>,
    /// Quadrature weight × κ([r, ∞)).
    wk: Vec<f64>,
    /// Quadrature weight × r κ′(r).
    wkd: Vec<f64>,
    /// `(1+r)^ν`.
    g: Vec<f64>,
    /// `d(1+r)^ν / du`.
    dg: Vec<f64>,
}

impl FastGrid {
    /// Lattice for levels in `[z_min, z_max]` extending up to `u_max`.
    ///
    /// Body panels (up to `log z_max + 2`) are sized to resolve the narrowest
    /// integrand peak; tail panels widen geometrically but stay narrow
    /// enough to follow the magnitude-dependent correlation.
    pub fn new(alpha: f64, beta: f64, nu: f64, z_min: f64, z_max: f64, u_max: f64, rule: FastRule) -> Self {
        let (lo_min, _) = level_cutoffs(z_min, alpha, beta);
        let (lo_max, _) = level_cutoffs(z_max, alpha, beta);
        let sigma = peak_shape(z_min, alpha, beta).1.min(peak_shape(z_max, alpha, beta).1);
        let mut w_body = (rule.body_scale * sigma).min(rule.max_body_width);
        let nu_width = if nu > 0.0 { 1.5 / nu } else { f64::INFINITY };
        w_body = w_body.min(nu_width);
        let w_tail = rule.max_tail_width.min(nu_width).max(w_body);
        // Body edges on a lattice of multiples of w_body (stable under small data changes).
        let start = (lo_min.min(lo_max) / w_body).floor() * w_body;
        let body_end = z_max.ln() + 2.0;
        let mut edges = vec![start];
        let mut e = start;
        while e < body_end {
            e += w_body;
            edges.push(e);
        }
        let mut w = w_body;
        while e < u_max {
            w = (w * 1.25).min(w_tail);
            e += w;
            edges.push(e);
        }
        let gl = GaussLegendre::new(rule.nodes);
        let n = (edges.len() - 1) * rule.nodes;
        let mut grid = Self {
            nodes: rule.nodes,
            edges,
            inv_r: Vec::with_capacity(n),
            wk: Vec::with_capacity(n),
            wkd: Vec::with_capacity(n),
            g: Vec::with_capacity(n),
            dg: Vec::with_capacity(n),
        };
        let power_law = beta <= BETA_SWITCH;
        for k in 0..grid.edges.len() - 1 {
            let (a, b) = (grid.edges[k], grid.edges[k + 1]);
            for (xi, wi) in gl.nodes.iter().zip(&gl.weights) {
                let u = a + 0.5 * (b - a) * (1.0 + xi);
                let r = u.exp();
                let weight = 0.5 * (b - a) * wi;
                let tail = log_kappa_tail(r, alpha, beta).exp();
                let hazard = if power_law { alpha } else { beta + alpha * (beta * u).exp() };
                grid.inv_r.push(1.0 / r);
                grid.wk.push(weight * tail);
                grid.wkd.push(weight * tail * hazard);
                if nu == 0.0 {
                    grid.g.push(1.0);
                    grid.dg.push(0.0);
                } else {
                    let g = (nu * r.ln_1p()).exp();
                    grid.g.push(g);
                    grid.dg.push(nu * r / (1.0 + r) * g);
                }
            }
        }
        grid
    }

    pub fn u_range(&self) -> (f64, f64) {
        (self.edges[0], self.edges[self.edges.len() - 1])
    }

    pub fn n_nodes(&self) -> usize {
        self.inv_r.len()
    }

    /// `(V, V1, V2, V12)` at `(z1, z2)` integrating over the panels that
    /// intersect `[u_lo, u_hi]` (clipped to the lattice).
    pub fn partials(&self, z1: f64, z2: f64, kernel: &PairKernel, u_lo: f64, u_hi: f64) -> ExponentPartials {
        let n_panels = self.edges.len() - 1;
        let p_lo = self.edges.partition_point(|&e| e <= u_lo).saturating_sub(1).min(n_panels);
        let p_hi = self.edges.partition_point(|&e| e < u_hi).min(n_panels);
        let (n_lo, n_hi) = (p_lo * self.nodes, p_hi * self.nodes);
        let constant = kernel.nu == 0.0 || kernel.m == 0.0;
        let rho_c = (kernel.pref * (-kernel.m).exp()).min(RHO_CAP);
        let (mut v, mut v1, mut v2, mut v12) = (0.0, 0.0, 0.0, 0.0);
        let mut rho = rho_c;
        let mut s = ((1.0 - rho) * (1.0 + rho)).sqrt();
        for n in n_lo..n_hi {
            let ir = self.inv_r[n];
            let x1 = z1 * ir;
            let x2 = z2 * ir;
            let p1 = std_normal_pdf(x1);
            let p2 = std_normal_pdf(x2);
            if p1 == 0.0 && p2 == 0.0 {
                continue;
            }
            let mut drho = 0.0;
            if !constant {
                rho = (kernel.pref * (-kernel.m * self.g[n]).exp()).min(RHO_CAP);
                s = ((1.0 - rho) * (1.0 + rho)).sqrt();
                // −dρ/du
                drho = rho * kernel.m * self.dg[n];
            }
            let c1 = (x1 - rho * x2) / s;
            let c2 = (x2 - rho * x1) / s;
            let cdf1 = std_normal_cdf(c1);
            let cdf2 = std_normal_cdf(c2);
            let phi2 = p1 * std_normal_pdf(c2) / s;
            v += self.wk[n] * (x1 * p1 * cdf2 + x2 * p2 * cdf1 + phi2 * drho);
            let wd = self.wkd[n] * ir;
            v1 -= wd * p1 * cdf2;
            v2 -= wd * p2 * cdf1;
            v12 -= wd * ir * phi2;
        }
        ExponentPartials { v, v1, v2, v12 }
    }
}
