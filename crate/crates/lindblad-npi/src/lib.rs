//! Completely positive, trace preserving (CPTP) low-rank time integrators
//! for the Lindblad master equation with time-dependent Hamiltonians.
//!
//! The equation
//!
//! ```text
//! dρ/dt = -i[H(t), ρ] + Σ_α L_α ρ L_α† - ½{L_α†L_α, ρ}
//! ```
//!
//! is rewritten with the effective generator `J(t) = -iH(t) - ½ Σ L†L` and
//! integrated by a nested family of one-step schemes of orders 1-4 that keep
//! the update in Kraus form. The density matrix is stored as a low-rank
//! factor `V` with `ρ = V V†`, compressed after every step by a truncated
//! SVD (itself a CP operation).
//!
//! Module map:
//! - [`model`]: Lindblad models (generic and transmon/qudit-cavity), control
//!   pulses, initial states, populations.
//! - [`flow`]: one-step approximations of the flow operator of `dV/dt = J(t)V`.
//! - [`npi`]: the nested stepper, Kraus column assembly, SVD truncation,
//!   trace renormalization.
//! - [`oracle`]: dense brute-force references (vectorized superoperator,
//!   high-resolution integration, closed-form two-qubit solution).
//! - [`stability`]: amplification matrices and stability conditions for the
//!   single-qubit test equations, plus stability-region scans.

pub mod error;
pub mod flow;
pub mod linalg;
pub mod model;
pub mod npi;
pub mod oracle;
pub mod stability;

pub use error::Error;
pub use linalg::C64;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
