use std::fmt;

use nalgebra::DMatrix;

use super::space::{Factor, HilbertSpace};
use crate::error::{Error, Result};
use crate::{c, CMat, C64, I, ONE, ZERO};

/// Single-qubit primitive. `|e⟩` is index 0, `|g⟩` index 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QubitOp {
    I,
    X,
    Y,
    Z,
    /// `|e⟩⟨g|`
    SigmaPlus,
    /// `|g⟩⟨e|`
    SigmaMinus,
    /// `|g⟩⟨g|`
    ProjG,
    /// `|e⟩⟨e|`
    ProjE,
}

/// Single-mode primitive on a truncated Fock space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BosonOp {
    I,
    A,
    Adag,
    N,
    /// `a + a†`
    X,
    /// `i(a† − a)`
    P,
    /// `a²`, needed for two-phonon couplings.
    A2,
    /// `a†²`
    Adag2,
    /// `exp(iη(a + a†))`, exponentiated after truncation so it stays unitary.
    Displace(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Prim {
    Q(QubitOp),
    B(BosonOp),
}

impl QubitOp {
    pub fn adjoint(self) -> Self {
        match self {
            QubitOp::SigmaPlus => QubitOp::SigmaMinus,
            QubitOp::SigmaMinus => QubitOp::SigmaPlus,
            o => o,
        }
    }

    /// Nonzero entries `(row, col, value)`.
    pub fn triplets(self) -> Vec<(usize, usize, C64)> {
        match self {
            QubitOp::I => vec![(0, 0, ONE), (1, 1, ONE)],
            QubitOp::X => vec![(0, 1, ONE), (1, 0, ONE)],
            QubitOp::Y => vec![(0, 1, -I), (1, 0, I)],
            QubitOp::Z => vec![(0, 0, ONE), (1, 1, -ONE)],
            QubitOp::SigmaPlus => vec![(0, 1, ONE)],
            QubitOp::SigmaMinus => vec![(1, 0, ONE)],
            QubitOp::ProjG => vec![(1, 1, ONE)],
            QubitOp::ProjE => vec![(0, 0, ONE)],
        }
    }

    pub fn matrix(self) -> CMat {
        let mut m = CMat::zeros(2, 2);
        for (r, col, v) in self.triplets() {
            m[(r, col)] = v;
        }
        m
    }
}

impl BosonOp {
    pub fn adjoint(self) -> Self {
        match self {
            BosonOp::A => BosonOp::Adag,
            BosonOp::Adag => BosonOp::A,
            BosonOp::A2 => BosonOp::Adag2,
            BosonOp::Adag2 => BosonOp::A2,
            BosonOp::Displace(eta) => BosonOp::Displace(-eta),
            o => o,
        }
    }

    pub fn triplets(self, n_max: usize) -> Vec<(usize, usize, C64)> {
        let d = n_max + 1;
        let sq = |n: usize| (n as f64).sqrt();
        match self {
            BosonOp::I => (0..d).map(|n| (n, n, ONE)).collect(),
            BosonOp::N => (1..d).map(|n| (n, n, c(n as f64, 0.0))).collect(),
            BosonOp::A => (1..d).map(|n| (n - 1, n, c(sq(n), 0.0))).collect(),
            BosonOp::Adag => (1..d).map(|n| (n, n - 1, c(sq(n), 0.0))).collect(),
            BosonOp::X => (1..d)
                .flat_map(|n| [(n - 1, n, c(sq(n), 0.0)), (n, n - 1, c(sq(n), 0.0))])
                .collect(),
            BosonOp::P => (1..d)
                .flat_map(|n| [(n - 1, n, c(0.0, -sq(n))), (n, n - 1, c(0.0, sq(n)))])
                .collect(),
            BosonOp::A2 => (2..d).map(|n| (n - 2, n, c(sq(n) * sq(n - 1), 0.0))).collect(),
            BosonOp::Adag2 => (2..d).map(|n| (n, n - 2, c(sq(n) * sq(n - 1), 0.0))).collect(),
            BosonOp::Displace(eta) => {
                let m = displacement(eta, n_max);
                let mut out = Vec::with_capacity(d * d);
                for col in 0..d {
                    for r in 0..d {
                        let v = m[(r, col)];
                        if v != ZERO {
                            out.push((r, col, v));
                        }
                    }
                }
                out
            }
        }
    }

    pub fn matrix(self, n_max: usize) -> CMat {
        let d = n_max + 1;
        if let BosonOp::Displace(eta) = self {
            return displacement(eta, n_max);
        }
        let mut m = CMat::zeros(d, d);
        for (r, col, v) in self.triplets(n_max) {
            m[(r, col)] = v;
        }
        m
    }
}

/// `exp(iη(a + a†))` on the truncated space, via the eigenbasis of the
/// truncated real-symmetric `a + a†`.
pub fn displacement(eta: f64, n_max: usize) -> CMat {
    let d = n_max + 1;
    let mut x = DMatrix::<f64>::zeros(d, d);
    for n in 1..d {
        let s = (n as f64).sqrt();
        x[(n - 1, n)] = s;
        x[(n, n - 1)] = s;
    }
    let eig = x.symmetric_eigen();
    let v = eig.eigenvectors.map(|r| c(r, 0.0));
    let phases = eig.eigenvalues.map(|l| C64::from_polar(1.0, eta * l));
    let mut vd = v.clone();
    for (j, ph) in phases.iter().enumerate() {
        let mut col = vd.column_mut(j);
        col *= *ph;
    }
    vd * v.transpose()
}

impl Prim {
    pub fn identity_for(f: Factor) -> Prim {
        match f {
            Factor::Qubit => Prim::Q(QubitOp::I),
            Factor::Boson { .. } => Prim::B(BosonOp::I),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Prim::Q(QubitOp::I) | Prim::B(BosonOp::I))
    }

    pub fn adjoint(self) -> Prim {
        match self {
            Prim::Q(q) => Prim::Q(q.adjoint()),
            Prim::B(b) => Prim::B(b.adjoint()),
        }
    }

    fn fits(&self, f: Factor) -> bool {
        matches!(
            (self, f),
            (Prim::Q(_), Factor::Qubit) | (Prim::B(_), Factor::Boson { .. })
        )
    }

    pub fn triplets(&self, f: Factor) -> Vec<(usize, usize, C64)> {
        match (self, f) {
            (Prim::Q(q), _) => q.triplets(),
            (Prim::B(b), Factor::Boson { n_max }) => b.triplets(n_max),
            _ => unreachable!("primitive/factor kind checked at construction"),
        }
    }

    pub fn matrix(&self, f: Factor) -> CMat {
        match (self, f) {
            (Prim::Q(q), _) => q.matrix(),
            (Prim::B(b), Factor::Boson { n_max }) => b.matrix(n_max),
            _ => unreachable!("primitive/factor kind checked at construction"),
        }
    }
}

/// One tensor-product term: `coeff · f_0 ⊗ f_1 ⊗ …`.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coeff: C64,
    pub factors: Vec<Prim>,
}

/// Weighted sum of tensor-product terms over a fixed space.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSum {
    space: HilbertSpace,
    terms: Vec<Term>,
    hermitian: bool,
}

impl OperatorSum {
    pub fn zero(space: &HilbertSpace) -> Self {
        Self {
            space: space.clone(),
            terms: Vec::new(),
            hermitian: true,
        }
    }

    pub fn identity(space: &HilbertSpace) -> Self {
        let factors = space.factors().iter().map(|f| Prim::identity_for(*f)).collect();
        Self {
            space: space.clone(),
            terms: vec![Term { coeff: ONE, factors }],
            hermitian: true,
        }
    }

    pub fn from_terms(space: &HilbertSpace, terms: Vec<Term>) -> Result<Self> {
        for t in &terms {
            check_term(space, t)?;
        }
        Ok(Self {
            space: space.clone(),
            terms,
            hermitian: false,
        })
    }

    /// A single term with the given primitives at `sites` and identity elsewhere.
    pub fn term(space: &HilbertSpace, coeff: C64, sites: &[(usize, Prim)]) -> Result<Self> {
        let mut s = Self::zero(space);
        s.hermitian = false;
        s.push(coeff, sites)?;
        Ok(s)
    }

    /// Convenience for a real-weighted Hermitian single-site operator.
    pub fn single(space: &HilbertSpace, site: usize, p: Prim, coeff: f64) -> Result<Self> {
        let s = Self::term(space, c(coeff, 0.0), &[(site, p)])?;
        let herm = !matches!(
            p,
            Prim::Q(QubitOp::SigmaPlus | QubitOp::SigmaMinus)
                | Prim::B(BosonOp::A | BosonOp::Adag | BosonOp::A2 | BosonOp::Adag2 | BosonOp::Displace(_))
        );
        Ok(if herm { s.assume_hermitian() } else { s })
    }

    /// Append `coeff · ⊗ sites` to the sum.
    pub fn push(&mut self, coeff: C64, sites: &[(usize, Prim)]) -> Result<&mut Self> {
        let mut factors: Vec<Prim> = self.space.factors().iter().map(|f| Prim::identity_for(*f)).collect();
        for &(k, p) in sites {
            if k >= factors.len() {
                return Err(Error::DimensionMismatch(format!(
                    "site {k} outside a {}-factor space",
                    factors.len()
                )));
            }
            factors[k] = p;
        }
        let t = Term { coeff, factors };
        check_term(&self.space, &t)?;
        self.terms.push(t);
        self.hermitian = false;
        Ok(self)
    }

    /// Mark as Hermitian after checking the dense matrix to 1e−10.
    pub fn into_hermitian(mut self) -> Result<Self> {
        self.hermitian = false;
        let m = self.to_dense()?;
        let dev = hermitian_deviation(&m);
        if dev > 1e-10 {
            return Err(Error::Invariant(format!(
                "operator flagged Hermitian deviates by {dev:e}"
            )));
        }
        self.hermitian = true;
        Ok(self)
    }

    /// Mark Hermitian without the dense check; `to_dense` still verifies.
    pub fn assume_hermitian(mut self) -> Self {
        self.hermitian = true;
        self
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        self.space.check_same(&other.space)?;
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self {
            space: self.space.clone(),
            terms,
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn scale(&self, k: C64) -> Self {
        Self {
            space: self.space.clone(),
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff * k,
                    factors: t.factors.clone(),
                })
                .collect(),
            hermitian: self.hermitian && k.im == 0.0,
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space.clone(),
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff.conj(),
                    factors: t.factors.iter().map(|p| p.adjoint()).collect(),
                })
                .collect(),
            hermitian: self.hermitian,
        }
    }

    /// Dense matrix. Hermitian-flagged sums are checked to 1e−10.
    pub fn to_dense(&self) -> Result<CMat> {
        let d = self.space.dim();
        let mut m = CMat::zeros(d, d);
        let factors = self.space.factors();
        let strides = self.space.strides();
        for t in &self.terms {
            if t.coeff == ZERO {
                continue;
            }
            let trips: Vec<Vec<(usize, usize, C64)>> =
                t.factors.iter().zip(factors).map(|(p, f)| p.triplets(*f)).collect();
            accumulate(&mut m, &trips, &strides, 0, 0, 0, t.coeff);
        }
        if self.hermitian {
            let dev = hermitian_deviation(&m);
            if dev > 1e-10 {
                return Err(Error::Invariant(format!(
                    "operator flagged Hermitian deviates by {dev:e}"
                )));
            }
        }
        Ok(m)
    }
}

fn accumulate(
    m: &mut CMat,
    trips: &[Vec<(usize, usize, C64)>],
    strides: &[usize],
    k: usize,
    row: usize,
    col: usize,
    val: C64,
) {
    if k == trips.len() {
        m[(row, col)] += val;
        return;
    }
    for &(r, cl, v) in &trips[k] {
        accumulate(
            m,
            trips,
            strides,
            k + 1,
            row + r * strides[k],
            col + cl * strides[k],
            val * v,
        );
    }
}

fn check_term(space: &HilbertSpace, t: &Term) -> Result<()> {
    if t.factors.len() != space.n_factors() {
        return Err(Error::DimensionMismatch(format!(
            "term has {} factors, space has {}",
            t.factors.len(),
            space.n_factors()
        )));
    }
    for (p, f) in t.factors.iter().zip(space.factors()) {
        if !p.fits(*f) {
            return Err(Error::Unsupported(format!("{p:?} on a {f:?} factor")));
        }
    }
    Ok(())
}

/// `max |M − M†|` entrywise.
pub fn hermitian_deviation(m: &CMat) -> f64 {
    let mut dev: f64 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..=j.min(m.nrows() - 1) {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Kronecker product of a list of matrices, leftmost factor slowest.
pub fn kron_all(ms: &[CMat]) -> CMat {
    let mut out = CMat::from_element(1, 1, ONE);
    for m in ms {
        out = out.kronecker(m);
    }
    out
}

impl fmt::Display for Prim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prim::Q(q) => write!(f, "{q:?}"),
            Prim::B(b) => write!(f, "{b:?}"),
        }
    }
}
