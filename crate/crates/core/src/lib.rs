//! Pair-copula constructions, Archimedean and elliptical conditional copulas,
//! and the trivariate Marshall-Olkin conditional copula.

pub mod archimedean;
pub mod bicop;
pub mod elliptical;
pub mod pcc;
pub mod mo;
pub mod error;
pub mod numerics;

pub use error::{Error, Result};
