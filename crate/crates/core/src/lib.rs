//! Feynman-Kac propagation of convection-diffusion type PDEs.
//!
//! The central piece is [`kernel::Propagator`]: a deterministic one-step map
//! `u_t -> u_{t+dt}` that traces every grid point backwards along the drift
//! (Heun) and replaces the diffusion expectation by a quadrature of the
//! boundary-aware Brownian transition density over neighbouring grid points.
//! Around it sit the particle Monte Carlo estimator, classical reference
//! solvers, initial-condition samplers, a benchmark harness and a small
//! framed protocol for serving propagation targets to external trainers.

pub mod bench;
pub mod error;
pub mod fkf;
pub mod grid;
pub mod init;
pub mod kernel;
pub mod kv;
pub mod pde;
pub mod reference;
pub mod service;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{make_grid, neighborhood, BoundaryKind, Field, Grid};
pub use kernel::{
    assemble_linear_operator, heun_backtrace, mc_propagate, propagate, select_radius,
    transition_kernel, DriftScheme, Interpolation, Propagator, PropagatorConfig, SparseOperator,
    TransitionKernel,
};
pub use pde::{ForcingEval, PdeKind, PdeSpec};
pub use spectral::{spectral_interpolate, spectral_interpolate_capped};
