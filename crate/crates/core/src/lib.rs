//! Dense quantum-dynamics workbench.
//!
//! `qcore` is the linear-algebra substrate and the oracle layer the other
//! modules are checked against. Everything operates on dense matrices over a
//! truncated qubit ⊗ Fock space, capped at [`qcore::MAX_DIM`].

// `!(x > 0.0)` guards are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod daqs;
pub mod eqs;
pub mod error;
pub mod ionrabi;
pub mod openmaster;
pub mod par;
pub mod qcore;
pub mod timecorr;

pub use error::{Error, Result};

pub use nalgebra;
pub use num_complex;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVec = nalgebra::DVector<C64>;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) const I: C64 = C64::new(0.0, 1.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
