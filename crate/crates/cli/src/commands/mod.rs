pub mod dependence;
pub mod diagnostics;
pub mod margins;
pub mod simulate;
