//! Deterministic six-process model of a quantum particle and the complex
//! min-plus mechanics built on top of it.
//!
//! The crate is organised bottom-up:
//!
//! | module | contents |
//! |--------|----------|
//! | [`geometry`] | cube vertices, the eight hexagonal spin permutations, wedge sums |
//! | [`process`] | the six complex processes, the basic trajectory, ε-convergence |
//! | [`statistics`] | angular momentum, position/momentum spreads, temporal commutators |
//! | [`dynkin`] | the complex Dynkin operator and the one-step averaging identity |
//! | [`cminplus`] | complex minimum (saddle points), complex convexity, complex Fenchel transform |
//! | [`action`] | complex-action recurrence, Riccati flow, Hamilton–Jacobi residual, wavefunctions, Crank–Nicolson solver |
//! | [`bohm`] | Bohmian velocities, trajectory ensembles, continuity check, de Broglie ε |

pub mod action;
pub mod bohm;
pub mod cminplus;
pub mod dynkin;
mod error;
pub mod geometry;
pub mod order;
pub mod process;
pub mod statistics;
mod types;

pub use error::{Error, Result};
pub use geometry::{Permutation, Vertex};
pub use process::{PhysicalParams, ProcessState, VelocityField};
pub use types::{CMat3, CVec3, Complex64, RVec3};
