//! Steady-state simulation of injection-locked nonlinear lasers and
//! exciton-polariton condensates.
//!
//! Two independent numerical routes are provided for the same physics:
//!
//! * a truncated Fock-space route ([`fock`], [`liouvillian`], [`evolve`])
//!   that integrates the density-matrix master equation or solves its
//!   null space directly, followed by a Wigner transform ([`wigner`]);
//! * a phase-space route ([`fp`]) that integrates the corresponding
//!   Fokker-Planck equation for the Wigner function on a polar grid.
//!
//! The figure of merit throughout is the negativity of the Wigner
//! function, `N = ∫ d²α (W − |W|)/2 ≤ 0`. [`params`] estimates
//! master-equation rates from physical device parameters.

pub mod evolve;
pub mod fock;
pub mod fp;
pub mod liouvillian;
pub mod params;
pub mod wigner;

pub use fock::{DensityMatrix, FockSpace};
pub use liouvillian::{LaserSpec, LiouvillianSpec, PolaritonSpec};
