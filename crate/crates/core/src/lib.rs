//! Simulation library for continuous-variable storage and cloning of light
//! in a three-level EIT medium.
//!
//! The pieces:
//! - [`gaussian`]: multimode quadrature-moment states and linear mode maps;
//! - [`medium`]: atomic-medium strategies and exact spin-excitation moments;
//! - [`qnd`]: the polariton rotation and storage correlation criteria;
//! - [`cloning`]: the gain-2 amplifier, the symmetric cloner and fidelity;
//! - [`stirap`]: mean-field dynamics of stimulated Raman photoassociation;
//! - [`fock`]: truncated Fock-space oracle backing the analytic claims;
//! - [`report`]: parameter sweeps, reports and the oracle check suite.

pub mod cloning;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod medium;
pub mod qnd;
pub mod report;
pub mod stirap;

pub use error::{Error, Result};
