//! Hierarchical model reduction for advection-diffusion-reaction transport in thin
//! channels, with transverse modal bases built either from homogenisation
//! correctors or from the cosine eigenfunctions of the Neumann Laplacian.
//!
//! The pipeline is
//! [`corrector::compute_correctors`] → [`modal_basis::hiphome_basis`] →
//! [`reduced::assemble`] → [`reduced::ReducedSystem::solve_steady`], with
//! [`reference`] providing independent full-order and homogenised baselines and
//! [`metrics`] the error norms used to compare them.

pub mod corrector;
pub mod error;
pub mod experiment;
pub mod fem1d;
pub mod geometry;
pub mod linalg;
pub mod metrics;
pub mod modal_basis;
pub mod quadrature;
pub mod reduced;
pub mod reference;
pub mod selftest;

pub use error::{Error, Result};
