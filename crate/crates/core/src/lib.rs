//! Numerical dynamics of polynomial correspondences on the complex plane.
//!
//! A correspondence is a multivalued map whose graph is an algebraic curve in
//! `(x, y)` space, proper over both coordinates. The crate estimates its
//! equilibrium measure by backward sampling, counts and classifies periodic
//! points, follows inverse branches, finds the totally invariant exceptional
//! set, and checks preimage-set identities `f⁻¹(K) = g⁻¹(K)` for polynomials.

pub mod branches;
pub mod catalog;
pub mod correspondence;
pub mod equilibrium;
pub mod error;
pub mod exceptional;
pub mod periodic;
pub mod poly;
pub mod uniqueness;

pub use correspondence::{Composition, Correspondence, DegreePair, FiberPoint, LojasiewiczEstimate, Repr};
pub use error::{CorrError, Result};
pub use num_complex::Complex64;
pub use poly::{chebyshev, BiPoly, Root, RootSet, UniPoly};
