//! Pairwise-likelihood inference: objective, fitting, bootstrap and
//! cross-validated model comparison.

pub mod bootstrap;
pub mod copula;
pub mod cv;
pub mod empirical;
pub mod fit;
pub mod functionals;
pub mod objective;
pub mod transform;
pub mod weights;

pub use bootstrap::{
    bootstrap_seed, parametric_bootstrap, sample_quantile, simulate_fitted, BootstrapEnsemble, ParamInterval,
};
pub use copula::{gaussian_pair_copula_logdensity, t_pair_copula_logdensity};
pub use cv::{cv_logscore, select_sites, station_logscore, CvResult, StationScore};
pub use empirical::{empirical_chi, empirical_theta_d};
pub use functionals::{spatial_exceedance, ExceedanceEstimate, SpatialSummary};
pub use fit::{fit_dependence, FitOptions, FitResult, RestartTrace};
pub use objective::{negative_log_pl, replicate_time, EvalMode, PairTerms, PairwiseObjective};
pub use transform::{ParamTransform, BETA_FLOOR, BETA_MAX};
pub use weights::{PairWeights, WeightRule};

#[cfg(test)]
mod tests;
