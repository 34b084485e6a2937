//! Heat-kernel numerics on Heisenberg groups.
//!
//! The group `H(K, A)` is `C^n x R` with a group law twisted block-wise by
//! frequencies `A = (a_1, ..., a_l)`, `0 < a_1 < ... < a_l = 1`, where block
//! `j` has complex dimension `k_j`.  The library computes, for the canonical
//! sub-Laplacian on such a group:
//!
//! * the Carnot-Caratheodory distance, through the phase function
//!   `mu(w) = (2w - sin 2w) / (2 sin^2 w)` and a geodesic-parameter solver
//!   ([`geometry`]);
//! * the heat kernel `p_h(z, t)`, by adaptive Gauss-Kronrod quadrature of its
//!   Fourier representation on the real axis, on a stationary shifted
//!   contour, on a fixed-height contour near the cut locus, and by
//!   convolution identities used as independent cross-checks ([`kernel`]);
//! * closed-form leading terms of the kernel for `d >> 1` in each asymptotic
//!   regime, and small-time expansions `p_h ~ C h^{-gamma} e^{-d^2/4h}`
//!   ([`asympt`]);
//! * modified-Bessel-type special functions and the two-sided estimates for
//!   the Gaussian-weighted Bessel transform that drive the near-cut-locus
//!   asymptotics ([`bessel`]);
//! * global two-sided comparator sweeps and derivative (gradient and mixed
//!   second-order) checks ([`bounds`]).
//!
//! All quadratures report a-posteriori error estimates; operations that
//! cannot certify the requested tolerance return
//! [`error::Error::Accuracy`] carrying the best value obtained.

pub mod asympt;
pub mod bessel;
pub mod bounds;
pub mod error;
pub mod geometry;
pub mod group;
pub mod kernel;
pub mod phase;
pub(crate) mod quad;
pub mod verify;

pub use error::{Error, Result};
pub use group::{FullPoint, RadialPoint, Signature};
