//! Random test instances: states, Hermitian operators, Pauli strings.

use rand::Rng;
use rand_distr::StandardNormal;

use super::pauli::{Pauli, PauliString};
use crate::{c, CMat, CVec, C64};

fn gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Haar-random normalized vector.
pub fn state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CVec {
    let v = CVec::from_fn(dim, |_, _| c(gauss(rng), gauss(rng)));
    let n = v.norm();
    v / c(n, 0.0)
}

/// GUE-like Hermitian matrix.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMat {
    let a = CMat::from_fn(dim, dim, |_, _| c(gauss(rng), gauss(rng)));
    (&a + a.adjoint()) * c(0.5, 0.0)
}

/// Random complex matrix with Gaussian entries.
pub fn matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMat {
    CMat::from_fn(dim, dim, |_, _| c(gauss(rng), gauss(rng)))
}

/// Random density matrix `GG†/Tr`.
pub fn density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMat {
    let g = matrix(rng, dim);
    let m = &g * g.adjoint();
    let tr = m.trace();
    m / tr
}

pub fn pauli<R: Rng + ?Sized>(rng: &mut R, allow_identity: bool) -> Pauli {
    let all = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    if allow_identity {
        all[rng.random_range(0..4)]
    } else {
        all[rng.random_range(1..4)]
    }
}

pub fn pauli_string<R: Rng + ?Sized>(rng: &mut R, n: usize, allow_identity: bool) -> PauliString {
    PauliString::new((0..n).map(|_| pauli(rng, allow_identity)).collect())
}

pub fn complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    c(gauss(rng), gauss(rng))
}

pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    gauss(rng)
}
