//! Scalar and matrix numerical kernels shared by the rest of the crate.

pub mod linalg;
pub mod mvn;
pub mod normal;
pub mod optim;
pub mod quadrature;
pub mod roots;
pub mod student;

pub use linalg::{cholesky_jittered, CholeskyFactor, CorrelationMatrix, SquareMatrix};
pub use mvn::{mvn_cdf, MvnEstimate, MvnProblem};
pub use normal::{
    bvn_cdf, bvn_pdf, bvn_upper, std_normal_cdf, std_normal_log_sf, std_normal_logpdf, std_normal_pdf,
    std_normal_quantile, std_normal_sf,
};
pub use optim::{nelder_mead, NelderMeadOptions, NelderMeadResult};
pub use quadrature::{
    integrate_panels, integrate_semi_infinite, integrate_semi_infinite_vec, GaussLegendre,
    QuadratureSpec, Substitution,
};
pub use roots::brent_root;
pub use student::{student_t_cdf, student_t_logpdf, student_t_pdf, student_t_quantile};
