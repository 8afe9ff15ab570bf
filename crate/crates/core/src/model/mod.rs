//! Dependence parameters, the Poisson mean measure and the correlation families.

pub mod correlation;
pub mod design;
pub mod kappa;
pub mod params;

pub use correlation::{
    anisotropy_matrix, correlation_cholesky, correlation_matrix, lambda_range, omega_matrix,
    pair_correlation, PairKernel,
};
pub use design::{haversine, rescaled_times, Metric, Site, StudyDesign};
pub use kappa::{
    kappa_density, kappa_inverse, kappa_inverse_log, kappa_tail, log_kappa_density, log_kappa_tail,
    BETA_SWITCH,
};
pub use params::{DependenceParams, Family, ModelSpec, ParamId};
