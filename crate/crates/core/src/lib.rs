//! Interior penalty discontinuous Galerkin (IPDG) discretisation of linear
//! parabolic diffusion problems on 2D simplicial meshes, with backward Euler
//! time stepping and a fully discrete a posteriori error estimator suite.
//!
//! The crate is organised bottom-up:
//!
//! - [`quadrature`]: Gauss rules on the reference triangle, edges and time intervals
//! - [`mesh`]: crisscross meshes, bisection-based refinement forests, common refinements
//! - [`dg_space`]: orthonormal modal DG spaces, projections, evaluation and transfer
//! - [`ipdg`]: diffusion tensors, IPDG stiffness assembly, penalty and energy norm
//! - [`solver`]: sparse linear solvers and the backward Euler time loop
//! - [`estimators`]: the elliptic IPDG estimator and all per-step indicators
//! - [`benchmarks`]: exact benchmark solutions, true errors, EOC and effectivity
//! - [`study`]: run configuration, refinement studies and CSV/JSON reports

pub mod benchmarks;
pub mod dg_space;
mod error;
pub mod estimators;
pub mod exec;
pub mod geometry;
pub mod ipdg;
pub mod mesh;
pub mod quadrature;
pub mod solver;
pub mod study;

pub use error::{Error, Result};
