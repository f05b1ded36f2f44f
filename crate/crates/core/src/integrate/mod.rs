//! Stochastic integrals against cylindrical semimartingales.

pub mod scalar;
pub mod vector;
