//! Maps between natural parameters and the unconstrained optimizer scale.

use crate::model::{DependenceParams, ModelSpec, ParamId};

/// Optimizer floor on β for max-id families.
pub const BETA_FLOOR: f64 = 1e-3;
/// β is capped here; the marginal tables break down well above it.
pub const BETA_MAX: f64 = 50.0;
/// Smallest `β − floor` represented on the log scale.
const BETA_EXCESS_MIN: f64 = 1e-4;

/// Free parameters of a model spec and their transforms.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTransform {
    ids: Vec<ParamId>,
}

impl ParamTransform {
    pub fn new(spec: &ModelSpec) -> Self {
        Self { ids: spec.free_params() }
    }

    pub fn ids(&self) -> &[ParamId] {
        &self.ids
    }

    pub fn dim(&self) -> usize {
        self.ids.len()
    }

    /// Natural-scale value of one coordinate.
    pub fn to_natural(id: ParamId, t: f64) -> f64 {
        match id {
            ParamId::Alpha | ParamId::AnisoA => t.exp(),
            ParamId::Beta => (BETA_FLOOR + t.exp()).min(BETA_MAX),
            ParamId::AnisoTheta => std::f64::consts::FRAC_PI_2 / (1.0 + (-t).exp()),
            ParamId::Lambda0 | ParamId::Lambda1 | ParamId::Lambda2 | ParamId::Nu => t,
        }
    }

    /// Unconstrained value of one coordinate (values outside the range are pulled inside).
    pub fn to_unconstrained(id: ParamId, v: f64) -> f64 {
        match id {
            ParamId::Alpha | ParamId::AnisoA => v.max(1e-12).ln(),
            ParamId::Beta => (v.min(BETA_MAX) - BETA_FLOOR).max(BETA_EXCESS_MIN).ln(),
            ParamId::AnisoTheta => {
                let f = (v / std::f64::consts::FRAC_PI_2).clamp(1e-9, 1.0 - 1e-9);
                (f / (1.0 - f)).ln()
            }
            ParamId::Lambda0 | ParamId::Lambda1 | ParamId::Lambda2 | ParamId::Nu => v,
        }
    }

    /// Parameters with the free coordinates replaced by `to_natural(x)`.
    pub fn forward(&self, x: &[f64], base: &DependenceParams) -> DependenceParams {
        let mut p = *base;
        for (&id, &t) in self.ids.iter().zip(x) {
            p.set(id, Self::to_natural(id, t));
        }
        p
    }

    pub fn inverse(&self, p: &DependenceParams) -> Vec<f64> {
        self.ids.iter().map(|&id| Self::to_unconstrained(id, p.get(id))).collect()
    }
}
