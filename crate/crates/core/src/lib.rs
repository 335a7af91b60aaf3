//! Sato-Tate groups of abelian varieties from endomorphism data, Haar-measure
//! moment statistics of compact symplectic groups, and empirical Frobenius
//! statistics of hyperelliptic curves to compare them against.

pub mod cli;
pub mod endo_group;
pub mod error;
pub mod ff_arith;
pub mod group;
pub mod linalg;
pub mod lpoly;
pub mod rng;
pub mod st_group;
pub mod stats;

pub use error::{Error, Result};
