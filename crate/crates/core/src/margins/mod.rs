//! GEV margins: distribution functions, the independence-likelihood fit,
//! probability integral transforms, return levels and diagnostics.

mod diagnostics;
mod fit;
mod gev;

pub use diagnostics::{gumbel_qq, kolmogorov_sf, ks_statistic, station_ks_table, KsResult, StationKs};
pub use fit::{fit_gev_independence, pit_inverse, pit_to_uniform, standard_errors, MarginFitOptions, MarginalFit, MuDesign};
pub use gev::{gev_cdf, gev_logpdf, gev_quantile, gumbel_scale, return_level, GevParams, XI_SWITCH};
