//! Dependence parameters and the model families built from them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dependence parameters of the max-id model and the competing copulas.
///
/// `beta = 0` encodes the max-stable limit of the Poisson intensity. For the
/// Student-t copula `alpha` is the degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DependenceParams {
    pub alpha: f64,
    pub beta: f64,
    /// Log-range intercept.
    pub lambda0: f64,
    /// Log-range slope per km of altitude.
    pub lambda1: f64,
    /// Log-range slope per unit of rescaled time.
    pub lambda2: f64,
    /// Magnitude-modulation exponent of the range.
    pub nu: f64,
    pub aniso_a: f64,
    pub aniso_theta: f64,
}

impl Default for DependenceParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.0,
            lambda0: 0.0,
            lambda1: 0.0,
            lambda2: 0.0,
            nu: 0.0,
            aniso_a: 1.0,
            aniso_theta: 0.0,
        }
    }
}

impl DependenceParams {
    pub fn validate(&self) -> Result<()> {
        let all_finite = ParamId::ALL.iter().all(|&p| self.get(p).is_finite());
        if !all_finite {
            return Err(Error::InvalidInput("dependence parameters must be finite".into()));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidInput(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.beta >= 0.0) {
            return Err(Error::InvalidInput(format!("beta must be >= 0, got {}", self.beta)));
        }
        if !(self.aniso_a > 0.0) {
            return Err(Error::InvalidInput(format!("aniso_a must be > 0, got {}", self.aniso_a)));
        }
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&self.aniso_theta) {
            return Err(Error::InvalidInput(format!(
                "aniso_theta must lie in [0, pi/2], got {}",
                self.aniso_theta
            )));
        }
        Ok(())
    }

    pub fn get(&self, id: ParamId) -> f64 {
        match id {
            ParamId::Alpha => self.alpha,
            ParamId::Beta => self.beta,
            ParamId::Lambda0 => self.lambda0,
            ParamId::Lambda1 => self.lambda1,
            ParamId::Lambda2 => self.lambda2,
            ParamId::Nu => self.nu,
            ParamId::AnisoA => self.aniso_a,
            ParamId::AnisoTheta => self.aniso_theta,
        }
    }

    pub fn set(&mut self, id: ParamId, value: f64) {
        match id {
            ParamId::Alpha => self.alpha = value,
            ParamId::Beta => self.beta = value,
            ParamId::Lambda0 => self.lambda0 = value,
            ParamId::Lambda1 => self.lambda1 = value,
            ParamId::Lambda2 => self.lambda2 = value,
            ParamId::Nu => self.nu = value,
            ParamId::AnisoA => self.aniso_a = value,
            ParamId::AnisoTheta => self.aniso_theta = value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamId {
    Alpha,
    Beta,
    Lambda0,
    Lambda1,
    Lambda2,
    Nu,
    AnisoA,
    AnisoTheta,
}

impl ParamId {
    pub const ALL: [ParamId; 8] = [
        ParamId::Alpha,
        ParamId::Beta,
        ParamId::Lambda0,
        ParamId::Lambda1,
        ParamId::Lambda2,
        ParamId::Nu,
        ParamId::AnisoA,
        ParamId::AnisoTheta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamId::Alpha => "alpha",
            ParamId::Beta => "beta",
            ParamId::Lambda0 => "lambda0",
            ParamId::Lambda1 => "lambda1",
            ParamId::Lambda2 => "lambda2",
            ParamId::Nu => "nu",
            ParamId::AnisoA => "aniso_a",
            ParamId::AnisoTheta => "aniso_theta",
        }
    }
}

impl fmt::Display for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParamId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ParamId::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown parameter `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    MaxStable,
    SimpleMaxId,
    GeneralMaxId,
    GaussianCopula,
    TCopula,
}

impl Family {
    pub fn is_max_id(self) -> bool {
        matches!(self, Family::MaxStable | Family::SimpleMaxId | Family::GeneralMaxId)
    }

    /// Parameters that the family never uses (held at their neutral values).
    fn unused(self) -> &'static [ParamId] {
        match self {
            Family::MaxStable => &[ParamId::Beta, ParamId::Nu],
            Family::SimpleMaxId => &[ParamId::Nu],
            Family::GeneralMaxId => &[],
            Family::GaussianCopula => &[ParamId::Alpha, ParamId::Beta, ParamId::Nu],
            Family::TCopula => &[ParamId::Beta, ParamId::Nu],
        }
    }
}

/// A dependence model: family, structural flags and the free/fixed mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub nonstationary: bool,
    pub anisotropic: bool,
    /// Free flags indexed like [`ParamId::ALL`].
    pub free: [bool; 8],
}

impl ModelSpec {
    /// Builds the spec with every parameter the family and flags allow left free.
    pub fn new(family: Family, nonstationary: bool, anisotropic: bool) -> Self {
        let mut free = [true; 8];
        for (k, id) in ParamId::ALL.iter().enumerate() {
            let structural = match id {
                ParamId::Lambda1 | ParamId::Lambda2 => nonstationary,
                ParamId::AnisoA | ParamId::AnisoTheta => anisotropic,
                _ => true,
            };
            free[k] = structural && !family.unused().contains(id);
        }
        Self { family, nonstationary, anisotropic, free }
    }

    /// Models 1-10 of the comparison study.
    pub fn numbered(k: u32) -> Result<Self> {
        let (family, ns) = match k {
            1 => (Family::MaxStable, false),
            2 => (Family::MaxStable, true),
            3 => (Family::SimpleMaxId, false),
            4 => (Family::SimpleMaxId, true),
            5 => (Family::GeneralMaxId, false),
            6 => (Family::GeneralMaxId, true),
            7 => (Family::GaussianCopula, false),
            8 => (Family::GaussianCopula, true),
            9 => (Family::TCopula, false),
            10 => (Family::TCopula, true),
            _ => return Err(Error::InvalidInput(format!("model number must be 1..=10, got {k}"))),
        };
        Ok(Self::new(family, ns, false))
    }

    pub fn is_free(&self, id: ParamId) -> bool {
        self.free[id as usize]
    }

    pub fn fix(mut self, id: ParamId) -> Self {
        self.free[id as usize] = false;
        self
    }

    pub fn set_free(mut self, id: ParamId, free: bool) -> Self {
        self.free[id as usize] = free;
        self
    }

    pub fn free_params(&self) -> Vec<ParamId> {
        ParamId::ALL.into_iter().filter(|&p| self.is_free(p)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        for &id in self.family.unused() {
            if self.is_free(id) {
                return Err(Error::InvalidInput(format!(
                    "parameter {id} cannot be free in the {:?} family",
                    self.family
                )));
            }
        }
        if !self.nonstationary && (self.is_free(ParamId::Lambda1) || self.is_free(ParamId::Lambda2)) {
            return Err(Error::InvalidInput(
                "lambda1/lambda2 can only be free in a non-stationary model".into(),
            ));
        }
        if !self.anisotropic && (self.is_free(ParamId::AnisoA) || self.is_free(ParamId::AnisoTheta)) {
            return Err(Error::InvalidInput(
                "aniso_a/aniso_theta can only be free in an anisotropic model".into(),
            ));
        }
        Ok(())
    }

    /// Overwrites the values the family and flags pin (β = ν = 0 for max-stable,
    /// λ1 = λ2 = 0 when stationary, a = 1, θ = 0 when isotropic).
    pub fn normalize(&self, p: &DependenceParams) -> DependenceParams {
        let mut out = *p;
        for &id in self.family.unused() {
            match id {
                ParamId::Beta | ParamId::Nu => out.set(id, 0.0),
                ParamId::Alpha => out.set(id, 1.0),
                _ => {}
            }
        }
        if !self.nonstationary {
            out.lambda1 = 0.0;
            out.lambda2 = 0.0;
        }
        if !self.anisotropic {
            out.aniso_a = 1.0;
            out.aniso_theta = 0.0;
        }
        out
    }
}

impl FromStr for ModelSpec {
    type Err = Error;
    /// Accepts `model1` … `model10`.
    fn from_str(s: &str) -> Result<Self> {
        let k = s
            .strip_prefix("model")
            .and_then(|n| n.parse::<u32>().ok())
            .ok_or_else(|| Error::InvalidInput(format!("unknown model name `{s}`")))?;
        ModelSpec::numbered(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbered_models_have_expected_free_sets() {
        use ParamId::*;
        let expect: [&[ParamId]; 10] = [
            &[Alpha, Lambda0],
            &[Alpha, Lambda0, Lambda1, Lambda2],
            &[Alpha, Beta, Lambda0],
            &[Alpha, Beta, Lambda0, Lambda1, Lambda2],
            &[Alpha, Beta, Lambda0, Nu],
            &[Alpha, Beta, Lambda0, Lambda1, Lambda2, Nu],
            &[Lambda0],
            &[Lambda0, Lambda1, Lambda2],
            &[Alpha, Lambda0],
            &[Alpha, Lambda0, Lambda1, Lambda2],
        ];
        for (k, e) in expect.iter().enumerate() {
            let m = ModelSpec::numbered(k as u32 + 1).unwrap();
            assert_eq!(m.free_params(), e.to_vec(), "model {}", k + 1);
            m.validate().unwrap();
        }
    }

    #[test]
    fn max_stable_rejects_free_nu() {
        let m = ModelSpec::numbered(1).unwrap().set_free(ParamId::Nu, true);
        assert!(m.validate().is_err());
        let m = ModelSpec::numbered(3).unwrap().set_free(ParamId::Nu, true);
        assert!(m.validate().is_err());
    }

    #[test]
    fn normalize_pins_structural_values() {
        let p = DependenceParams { beta: 0.7, nu: 0.3, lambda1: 1.0, ..Default::default() };
        let q = ModelSpec::numbered(1).unwrap().normalize(&p);
        assert_eq!((q.beta, q.nu, q.lambda1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn parse_names() {
        assert_eq!("model6".parse::<ModelSpec>().unwrap(), ModelSpec::numbered(6).unwrap());
        assert!("model11".parse::<ModelSpec>().is_err());
        assert_eq!("lambda1".parse::<ParamId>().unwrap(), ParamId::Lambda1);
    }

    #[test]
    fn validate_params() {
        let mut p = DependenceParams::default();
        p.validate().unwrap();
        p.aniso_theta = 2.0;
        assert!(p.validate().is_err());
        p.aniso_theta = 0.0;
        p.alpha = 0.0;
        assert!(p.validate().is_err());
    }
}
