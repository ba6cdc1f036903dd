//! hooklab: a desk-scale numerical laboratory for rotationally symmetric
//! Ricci flow.
//!
//! The crate builds a family of "thin hook" tube hypersurfaces and two classes
//! of symmetric surrogate metrics (profile metrics `phi_g^2 dx^2 + psi^2 *
//! round fiber` and twisted products `k + e^{2u} dtheta^2`), computes their
//! curvature two independent ways, evolves them under Ricci flow with adaptive
//! explicit time stepping, and analyses the resulting trajectories: minimal
//! slices and their stability, extinction-time comparisons for twisted necks,
//! neck detection and Type I/II singularity classification.
//!
//! Entry points:
//! - [`hookgen`] — constructors for spines, radius profiles, tube meshes and
//!   the symmetric metrics.
//! - [`curvature`] — closed-form curvature for the symmetric metrics plus an
//!   independent finite-difference oracle on embedded meshes.
//! - [`ricci`] — the flow solvers, runtime monitors and trajectory recording.
//! - [`minimal`] — minimal slices, stability classification, area tracking,
//!   the foliation-width surrogate and the closed-geodesic audit.
//! - [`singular`] — singularity classification and neck predicates.
//! - [`cli`] — the deterministic experiment runner behind the `hooklab` binary.

pub mod cli;
pub mod curvature;
pub mod error;
pub mod hookgen;
pub mod minimal;
pub mod num;
pub mod ricci;
pub mod singular;

pub use error::{HookError, Result};
