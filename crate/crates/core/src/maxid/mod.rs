//! Exponent function of the max-id model, its derivatives, margins, copula
//! density and dependence summaries.

pub mod coefficients;
pub mod exponent;
pub mod fast;
pub mod marginal;

pub use coefficients::{
    effective_range, eta_closed_form, theta2, theta_d, ThetaEstimate, THETA_D_QMC_POINTS,
};
pub use exponent::{
    copula_pair_density, exponent_V2, exponent_partials, log_copula_pair_density,
    ExponentPartials, PairContext, RHO_CAP,
};
pub use fast::{kernel_cutoff, level_cutoffs, peak_shape, FastGrid, FastRule};
pub use marginal::{
    marginal_V, marginal_V_with, marginal_density, marginal_integrals, marginal_quantile,
    MarginalTable, U_CLAMP,
};
