//! Singular-fibration analysis of the classical two-spin Tavis-Cummings system.
//!
//! The crate is organised bottom-up:
//!
//! * [`phase_space`] : parameters, phase points, the integral map `F = (H1, H2, K)`,
//!   Hamiltonian vector fields and the global S¹ action.
//! * [`flows`] : adaptive Dormand-Prince integration of commuting flows with
//!   sphere re-projection.
//! * [`reduction`] : S¹ invariants, syzygies, the invariant Poisson table, the
//!   local-section reduced Hamiltonians and the Delzant polygons of the reduced spaces.
//! * [`critical`] : rank-0/1/2 critical sets and the bifurcation diagram.
//! * [`monodromy`] : period lattices, their continuation along loops of regular
//!   values and SL(3,Z) monodromy matrices.
//! * [`unfolding`] : the A₂ normal form, discriminant, root tracking and
//!   Picard-Lefschetz monodromy.
//! * [`lax`] : the spectral Lax pair and its spectral polynomial.

pub mod critical;
pub mod error;
pub mod flows;
pub mod jet;
pub mod lax;
pub mod linalg;
pub mod monodromy;
pub mod phase_space;
pub mod poly;
pub mod reduction;
pub mod unfolding;

pub use error::{Error, Result};
pub use phase_space::{Integral, IntegralValue, PhasePoint, SystemParams, TangentVector};
