//! Weighted lq-penalized minimization through q-dependent shrinkage.
//!
//! [`shrinkage`] holds the scalar rules, [`prox`] the decoupled minimizer and
//! its brute-force oracle, [`variational`] the closed form over a frame, and
//! [`solver`] the shrinked Landweber iteration with a maximum-entropy baseline.
//! [`modelsel`] picks α from the L-curve; [`fredholm`] builds test problems.

pub mod benchmark;
pub mod error;
pub mod frames;
pub mod fredholm;
pub mod io;
pub mod modelsel;
pub mod par;
pub mod prox;
pub mod shrinkage;
pub mod solver;
pub mod variational;

pub use error::{Error, Result};
