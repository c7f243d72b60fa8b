//! Ground states of the saturating mean-field energy
//!
//! ```text
//! E(u) = ∫ |∇u|² / (1 - u²)₊ dx - (a/2) ∫ u⁴ dx,     ∫ u² dx = ν,
//! ```
//!
//! restricted to real radial fields on a uniform radial mesh.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`]: radial mesh, quadrature for the measure 4πr²dr, nodal fields.
//! * [`energy`]: the functional `E`, its signed-denominator variant `F`,
//!   the exact gradient of the discrete energy and the dilation `u_γ`.
//! * [`minimizer`]: normalized (Sobolev-preconditioned) gradient flow for
//!   `I_ν = inf E` at fixed mass, Lagrange multiplier extraction.
//! * [`shooting`]: the first-order radial system for `(f, g)` integrated by an
//!   adaptive Dormand–Prince pair, trajectory classification and bisection on
//!   `g(0)`.
//! * [`analysis`]: closed-form constants (Sobolev constant, cosine test
//!   function), cut-off functions, concentration functions, the critical
//!   coupling search and the unbounded family for `F`.
//! * [`io`]: CSV/JSON artifacts.
//! * [`selftest`]: reduced-resolution consistency checks used by the CLI.

pub mod analysis;
pub mod energy;
pub mod error;
pub mod grid;
pub mod io;
pub mod minimizer;
pub mod ode;
pub mod selftest;
pub mod shooting;

pub use error::{Error, Result};
pub use grid::{RadialField, RadialGrid};
