//! Trapped-ion multi-spin dynamics engine.
//!
//! Builds the sideband-engineered drive Hamiltonians of a linear ion chain,
//! propagates exact spin ⊗ phonon dynamics under them, evaluates the
//! analytic effective single-, two-, and three-spin couplings they induce,
//! and applies the resulting three-spin interaction to a U(1) quantum link
//! model (string breaking, Gauss-law diagnostics, gate decomposition).
//!
//! All numerics are generic over the floating-point scalar (see
//! [`scalar::Scalar`]); the `*64` aliases at the crate root fix `f64`, which
//! every quoted tolerance assumes.

pub mod scalar;
pub mod linalg;
pub mod hilbert;
pub mod trap;
pub mod drives;
pub mod effective;
pub mod evolve;
pub mod qlm;

pub use scalar::{Scalar, C};

/// f64 concrete aliases for the common types.
pub type C64 = num_complex::Complex<f64>;
pub type TrapConfig64 = trap::TrapConfig<f64>;
pub type ModeSpectrum64 = trap::ModeSpectrum<f64>;
pub type StateVector64 = hilbert::StateVector<f64>;
pub type SparseOperator64 = hilbert::SparseOperator<f64>;
