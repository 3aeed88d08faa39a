//! Numerical toolkit for one-frequency quasi-periodic Schrödinger cocycles:
//! translations on tori, sampling functions, Lyapunov exponents, Weyl
//! m-functions, and grid estimates of the zero-exponent set.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cocycle;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod halfplane;
pub mod measure;
pub mod potentials;
pub mod quad;
pub mod report;
pub mod runner;

pub use error::{Error, Result};
