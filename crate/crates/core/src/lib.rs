//! Magnitude-dependent max-infinitely divisible spatial processes for block maxima.

pub mod data;
pub mod error;
pub mod inference;
pub mod margins;
pub mod maxid;
pub mod model;
pub mod numerics;
pub mod simulate;

pub use error::{Error, Result};
