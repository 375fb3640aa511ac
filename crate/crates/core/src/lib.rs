//! Edge-based semidefinite relaxations for 2-D sensor network localization.
//!
//! The crate is organised bottom-up:
//!
//! * [`network`] generates, perturbs and persists localization instances.
//! * [`formulation`] compiles an instance into a standard-form conic program
//!   (`min cᵀy  s.t.  Ay + s = b,  s ∈ K`) for the plain edge-based relaxation
//!   (ESDP) or its perturbed variant (PESDP), where every edge block
//!   `Z_{1,2,i,j} + p·I₄` must be positive semidefinite.
//! * [`solver`] is a first-order operator-splitting solver for programs over
//!   products of zero, nonnegative and PSD cones.
//! * [`analysis`] recovers positions and dual certificates from a solve and
//!   checks duality, sensitivity and rank properties numerically.

pub mod analysis;
pub mod cone;
pub mod error;
pub mod formulation;
pub mod network;
pub mod rng;
pub mod sdpa;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
pub use formulation::{build_esdp, build_pesdp, ConicProgram, FormulationMap, FormulationOptions};
pub use network::{MeasuredNetwork, Network, NetworkParams};
pub use solver::{solve, SolveResult, SolveSettings, SolveStatus};
