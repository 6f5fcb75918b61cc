//! Metric-adjusted skew informations, metric-adjusted f-correlations and the
//! two-sided quantum f-correlation quantifier, with the numerical
//! experiments built on them.

pub mod appendix;
pub mod channels;
pub mod cli;
pub mod correlations;
pub mod error;
pub mod fops;
pub mod hermitian;
pub mod io;
pub mod qfcorr;
pub mod quadrature;
pub mod thermal;

pub use error::{Error, Result};
