//! Numerical toolkit for the linearized log-KdV equation around the Gaussian
//! solitary wave `V(x) = exp(1/2 - x^2/4)`.
//!
//! The crate is organised by representation:
//!
//! * [`hermite`]: the scaled Hermite functions `u_n` (eigenfunctions of
//!   `L = -d^2/dx^2 + (x^2 - 6)/4`), their product and projection sequences.
//! * [`coercivity`]: the energy and norm quadratic forms in Hermite
//!   coefficients and the constrained coercivity constant.
//! * [`jacobi`]: the Jacobi difference operator, its null solution, the
//!   shooting recursion and discrete Wronskian used to locate eigenvalues.
//! * [`lattice`]: norm-conserving time stepping of the skew-symmetric lattice.
//! * [`halfline`]: the dissipative half-line evolution `w_t = H w` with the
//!   modulation equations.
//! * [`reconstruct`]: synthesis of physical-space profiles.
//!
//! Supporting numerics live in [`grid`], [`fit`] and [`tridiag`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coercivity;
pub mod fit;
pub mod grid;
pub mod halfline;
pub mod hermite;
pub mod jacobi;
pub mod lattice;
pub mod reconstruct;
pub mod tridiag;

mod error;

pub use error::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;
