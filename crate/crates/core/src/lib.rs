//! Spectral analysis and growth-bound certification for linear neutral-type
//! delay systems with distributed delay,
//!
//! ```text
//! ż(t) = A₋₁ ż(t−1) + ∫₋₁⁰ A₂(θ) ż(t+θ) dθ + ∫₋₁⁰ A₃(θ) z(t+θ) dθ,
//! ```
//!
//! posed as `ẋ = 𝒜x` on the state space `M₂ = ℂⁿ × L₂(−1,0;ℂⁿ)`.
//!
//! The crate is organised bottom-up:
//!
//! - [`system`]: the system triple `(A₋₁, A₂, A₃)` with piecewise-polynomial kernels,
//!   and the `M₂` state type.
//! - [`modulus`]: modulus-ordered eigenvalue and Jordan structure of `A₋₁`.
//! - [`kernel`]: closed-form Laplace transforms of the kernels.
//! - [`characteristic`]: the characteristic matrix `Δ(λ)`, argument-principle root
//!   counting inside the asymptotic discs and moment-based root refinement.
//! - [`state`]: the generator `𝒜`, its inverse, smoothing `𝒜⁻ⁿ` and eigenfunctions.
//! - [`solver`]: method-of-steps time integration.
//! - [`growth`]: growth exponent estimation and certification.
//! - [`appendix`]: randomized checks of determinant, cofactor and inverse-norm
//!   bounds for perturbed Jordan blocks.
//! - [`io`]: file formats (system JSON, state/spectrum/trajectory/appendix CSV,
//!   certificate JSON).

pub mod appendix;
pub mod characteristic;
pub mod error;
pub mod grid;
pub mod growth;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod modulus;
pub mod solver;
pub mod state;
pub mod system;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec, C64};
