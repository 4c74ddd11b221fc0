//! Spectral analysis of 1-D periodic Dirac operators with a dislocation.
//!
//! The operator is `H_t f = Jf′ + V_t f` on the line, where `V` is a
//! 1-periodic trace-free symmetric 2×2 potential and the dislocation glues
//! `V` on the negative half-line to `V(· + t)` on the positive one. The
//! crate computes:
//!
//! - spectral bands and gaps of the periodic background via the Lyapunov
//!   function of the monodromy matrix ([`spectrum`]),
//! - Weyl-Titchmarsh functions and Bloch solutions on the two-sheeted
//!   Riemann surface glued over the gaps ([`surface`]),
//! - the two bound/antibound states per open gap of the dislocated
//!   operator and their motion in `t`, including sheet switching, winding
//!   counts and local asymptotics ([`dislocation`]),
//! - an independent shooting oracle that finds the same states without any
//!   Weyl-function machinery ([`oracle`]).
//!
//! Transfer matrices are exact per-segment exponentials of the
//! piecewise-constant potential; no ODE stepping error enters anywhere.

pub mod dislocation;
pub mod mat2;
pub mod oracle;
pub mod potential;
pub mod scalar;
pub mod spectrum;
pub mod surface;
pub mod transfer;

pub use potential::{Potential, PotentialError};

/// Real 2×2 matrix used throughout the spectral pipeline.
pub type RMat2 = mat2::Mat2<f64>;
/// Complex 2×2 matrix for growth bounds and band-side Bloch solutions.
pub type CMat2 = mat2::Mat2<num_complex::Complex64>;
pub type RVec2 = mat2::Vec2<f64>;
pub type CVec2 = mat2::Vec2<num_complex::Complex64>;
