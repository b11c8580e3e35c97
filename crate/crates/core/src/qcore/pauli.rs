use std::fmt;
use std::str::FromStr;

use super::ops::{BosonOp, OperatorSum, Prim, QubitOp};
use super::space::{Factor, HilbertSpace};
use crate::error::{Error, Result};
use crate::{c, CMat, CVec, C64, I, ONE, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn qubit_op(self) -> QubitOp {
        match self {
            Pauli::I => QubitOp::I,
            Pauli::X => QubitOp::X,
            Pauli::Y => QubitOp::Y,
            Pauli::Z => QubitOp::Z,
        }
    }

    pub fn matrix(self) -> CMat {
        self.qubit_op().matrix()
    }

    pub fn anticommutes(self, other: Pauli) -> bool {
        self != Pauli::I && other != Pauli::I && self != other
    }

    /// `self · other = phase · result`.
    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, other: Pauli) -> (C64, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (ONE, p),
            (a, b) if a == b => (ONE, I),
            (X, Y) => (I_, Z),
            (Y, X) => (-I_, Z),
            (Y, Z) => (I_, X),
            (Z, Y) => (-I_, X),
            (Z, X) => (I_, Y),
            (X, Z) => (-I_, Y),
            _ => unreachable!(),
        }
    }

    fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

const I_: C64 = I;

/// Tensor product of Paulis; factor 0 is the leftmost (most significant) qubit.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString(Vec<Pauli>);

impl PauliString {
    pub fn new(p: Vec<Pauli>) -> Self {
        Self(p)
    }

    pub fn identity(n: usize) -> Self {
        Self(vec![Pauli::I; n])
    }

    /// `p` on qubit `k`, identity elsewhere.
    pub fn single(n: usize, k: usize, p: Pauli) -> Self {
        let mut v = vec![Pauli::I; n];
        v[k] = p;
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[Pauli] {
        &self.0
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|p| **p != Pauli::I).count()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&k| self.0[k] != Pauli::I).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.weight() == 0
    }

    pub fn commutes(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).filter(|(a, b)| a.anticommutes(**b)).count() % 2 == 0
    }

    /// `self · other = phase · result`.
    pub fn mul(&self, other: &Self) -> (C64, Self) {
        let mut phase = ONE;
        let mut out = Vec::with_capacity(self.0.len());
        for (a, b) in self.0.iter().zip(&other.0) {
            let (ph, p) = a.mul(*b);
            phase *= ph;
            out.push(p);
        }
        (phase, Self(out))
    }

    /// Bit flip mask and the mask of bits whose value sets a sign.
    fn masks(&self) -> (usize, usize, usize) {
        let n = self.0.len();
        let (mut x, mut zy, mut ny) = (0usize, 0usize, 0usize);
        for (k, p) in self.0.iter().enumerate() {
            let bit = 1usize << (n - 1 - k);
            match p {
                Pauli::I => {}
                Pauli::X => x |= bit,
                Pauli::Y => {
                    x |= bit;
                    zy |= bit;
                    ny += 1;
                }
                Pauli::Z => zy |= bit,
            }
        }
        (x, zy, ny)
    }

    /// `P|k⟩ = phase(k)|k ⊕ x⟩`; returns `(x, base, sign mask)` with
    /// `phase(k) = base · (−1)^{popcount(k & mask)}`.
    pub fn signed_permutation(&self) -> (usize, C64, usize) {
        let (x, zy, ny) = self.masks();
        let base = [ONE, I, -ONE, -I][ny % 4];
        (x, base, zy)
    }

    pub fn apply(&self, v: &CVec) -> CVec {
        let (x, base, mask) = self.signed_permutation();
        let mut out = CVec::zeros(v.len());
        for k in 0..v.len() {
            let s = if (k & mask).count_ones() % 2 == 0 { base } else { -base };
            out[k ^ x] = s * v[k];
        }
        out
    }

    pub fn to_dense(&self) -> CMat {
        let d = 1usize << self.0.len();
        let (x, base, mask) = self.signed_permutation();
        let mut m = CMat::zeros(d, d);
        for k in 0..d {
            let s = if (k & mask).count_ones() % 2 == 0 { base } else { -base };
            m[(k ^ x, k)] = s;
        }
        m
    }

    /// As an operator on `space`, placing factor `k` of the string on
    /// qubit site `sites[k]`.
    pub fn embed(&self, space: &HilbertSpace, sites: &[usize], coeff: C64) -> Result<OperatorSum> {
        if sites.len() != self.0.len() {
            return Err(Error::DimensionMismatch("one site per Pauli factor".into()));
        }
        let prims: Vec<(usize, Prim)> = sites
            .iter()
            .zip(&self.0)
            .map(|(&s, p)| (s, Prim::Q(p.qubit_op())))
            .collect();
        let op = OperatorSum::term(space, coeff, &prims)?;
        Ok(if coeff.im == 0.0 { op.assume_hermitian() } else { op })
    }

    /// As an operator on an all-qubit space of matching length.
    pub fn to_operator(&self, coeff: C64) -> Result<OperatorSum> {
        let space = HilbertSpace::qubits(self.0.len())?;
        let sites: Vec<usize> = (0..self.0.len()).collect();
        self.embed(&space, &sites, coeff)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.to_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|ch| match ch.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::InvalidArgument(format!("'{other}' is not a Pauli"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(PauliString)
    }
}

/// Pauli expansion of a single-qubit primitive.
pub fn qubit_prim_paulis(q: QubitOp) -> Vec<(C64, Pauli)> {
    let h = c(0.5, 0.0);
    match q {
        QubitOp::I => vec![(ONE, Pauli::I)],
        QubitOp::X => vec![(ONE, Pauli::X)],
        QubitOp::Y => vec![(ONE, Pauli::Y)],
        QubitOp::Z => vec![(ONE, Pauli::Z)],
        QubitOp::SigmaPlus => vec![(h, Pauli::X), (c(0.0, 0.5), Pauli::Y)],
        QubitOp::SigmaMinus => vec![(h, Pauli::X), (c(0.0, -0.5), Pauli::Y)],
        QubitOp::ProjE => vec![(h, Pauli::I), (h, Pauli::Z)],
        QubitOp::ProjG => vec![(h, Pauli::I), (-h, Pauli::Z)],
    }
}

fn coeff_cut(v: &[C64]) -> f64 {
    1e-14 * v.iter().map(|z| z.norm()).fold(1.0, f64::max)
}

/// `op = Σ q_k Q_k` over Pauli strings, nonzero coefficients only, sorted by
/// string. Bosonic factors are rejected; embed into qubits first.
pub fn pauli_decompose(op: &OperatorSum) -> Result<Vec<(C64, PauliString)>> {
    if let Some(f) = op.space().factors().iter().find(|f| **f != Factor::Qubit) {
        return Err(Error::Unsupported(format!("pauli_decompose on a {f:?} factor")));
    }
    let mixed = expand_qubit_factors(op)?;
    Ok(mixed.into_iter().map(|(q, p, _)| (q, p)).collect())
}

/// Expand every qubit primitive into Paulis, keeping bosonic primitives.
///
/// Returns `(coeff, Pauli string over the qubit sites in order, boson
/// primitives over the boson sites in order)`, with equal keys merged.
pub fn expand_qubit_factors(op: &OperatorSum) -> Result<Vec<(C64, PauliString, Vec<BosonOp>)>> {
    let mut out: Vec<(C64, PauliString, Vec<BosonOp>)> = Vec::new();
    for t in op.terms() {
        let mut partial: Vec<(C64, Vec<Pauli>)> = vec![(t.coeff, Vec::new())];
        let mut bos = Vec::new();
        for p in &t.factors {
            match p {
                Prim::Q(q) => {
                    let exp = qubit_prim_paulis(*q);
                    let mut next = Vec::with_capacity(partial.len() * exp.len());
                    for (cf, s) in &partial {
                        for (ce, pe) in &exp {
                            let mut s2 = s.clone();
                            s2.push(*pe);
                            next.push((*cf * *ce, s2));
                        }
                    }
                    partial = next;
                }
                Prim::B(b) => bos.push(*b),
            }
        }
        for (cf, s) in partial {
            let ps = PauliString(s);
            if let Some(e) = out.iter_mut().find(|e| e.1 == ps && e.2 == bos) {
                e.0 += cf;
            } else {
                out.push((cf, ps, bos.clone()));
            }
        }
    }
    let coeffs: Vec<C64> = out.iter().map(|e| e.0).collect();
    let cut = coeff_cut(&coeffs);
    out.retain(|e| e.0.norm() > cut);
    out.sort_by(|a, b| a.1.cmp(&b.1));
    Ok(out)
}

/// Dense-matrix variant: `q_P = Tr(P M) / 2^n` by signed-permutation sums.
pub fn pauli_decompose_dense(m: &CMat, n_qubits: usize) -> Result<Vec<(C64, PauliString)>> {
    let d = 1usize << n_qubits;
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} is not 2^{n_qubits}",
            m.nrows(),
            m.ncols()
        )));
    }
    let total = 1usize << (2 * n_qubits);
    let mut raw = Vec::with_capacity(total);
    for code in 0..total {
        let s = PauliString(
            (0..n_qubits)
                .map(|k| Pauli::ALL[(code >> (2 * (n_qubits - 1 - k))) & 3])
                .collect(),
        );
        let (x, base, mask) = s.signed_permutation();
        let mut acc = ZERO;
        for k in 0..d {
            let v = m[(k, k ^ x)];
            if (k & mask).count_ones() % 2 == 0 {
                acc += v;
            } else {
                acc -= v;
            }
        }
        raw.push((acc * base / c(d as f64, 0.0), s));
    }
    let coeffs: Vec<C64> = raw.iter().map(|e| e.0).collect();
    let cut = coeff_cut(&coeffs);
    raw.retain(|e| e.0.norm() > cut);
    Ok(raw)
}

/// Rebuild `Σ q_k Q_k` densely.
pub fn pauli_rebuild(terms: &[(C64, PauliString)], n_qubits: usize) -> CMat {
    let d = 1usize << n_qubits;
    let mut m = CMat::zeros(d, d);
    for (q, p) in terms {
        m += p.to_dense() * *q;
    }
    m
}
