//! Source identification for `-div(sigma grad u) + eps u = f` with homogeneous
//! Neumann conditions, from Dirichlet traces of the state.
//!
//! Sources are piecewise constant on a grid of control cells. The forward map
//! from control coefficients to boundary traces has a large nullspace; the
//! regularizers in [`solvers`] reweight the control basis by the norms of its
//! projections onto the orthogonal complement of that nullspace, so that
//! localized sources are recovered at the right place.
//!
//! Pipeline: [`mesh::build_mesh`] -> [`fem::assemble`] ->
//! [`control::build_control_basis`] -> [`spectral::build_forward_model`] ->
//! [`spectral::analyze`] -> [`solvers`]. [`experiments`] wires all of it to
//! JSON configs and CSV output.

pub mod band;
pub mod control;
pub mod error;
pub mod experiments;
pub mod fem;
pub mod mesh;
pub mod solvers;
pub mod spectral;
pub mod verify;

pub use control::{build_control_basis, ControlBasis};
pub use error::{Error, Result};
pub use fem::{assemble, CoefficientField, FemSystem};
pub use mesh::{build_mesh, refine_uniform, DomainSpec, Mesh, Shape};
pub use solvers::{Method, MorozovSettings, SolveResult};
pub use spectral::{analyze, build_forward_model, ForwardModel, SpectralData};
