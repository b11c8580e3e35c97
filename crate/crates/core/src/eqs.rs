//! Embedding quantum simulator.
//!
//! An `N`-qubit state `ψ = ψ_re + iψ_im` is stored on `N + 1` qubits as the
//! real vector `|0⟩ ⊗ ψ_re + |1⟩ ⊗ ψ_im`; the embedding qubit is factor 0.
//! Complex conjugation becomes the physical gate `σz ⊗ 1`, so antilinear
//! quantities `⟨ψ|O|ψ*⟩` turn into `⟨σz ⊗ O⟩ − i⟨σx ⊗ O⟩` in the enlarged
//! space.

use std::f64::consts::FRAC_PI_4;

use crate::error::{invalid, Error, Result};
use crate::qcore::expm::HermitianEig;
use crate::qcore::op_norm;
use crate::qcore::ops::{hermitian_deviation, kron_all, BosonOp, OperatorSum, Prim};
use crate::qcore::pauli::{pauli_decompose, Pauli, PauliString};
use crate::qcore::space::{Factor, HilbertSpace};
use crate::qcore::state::NORM_TOL;
use crate::qcore::state::{expectation_dense, DensityMatrix, PureState, QState};
use crate::{c, par, CMat, CVec, C64, I, ONE, ZERO};

const HERMITIAN_TOL: f64 = 1e-10;

/// `(Re ψ; Im ψ)` stacking for an `n_qubits` register.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EmbeddingMap {
    n_qubits: usize,
}

impl EmbeddingMap {
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 {
            return invalid("embedding needs at least one simulated qubit");
        }
        HilbertSpace::qubits(n_qubits + 1)?;
        Ok(Self { n_qubits })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn simulated_space(&self) -> HilbertSpace {
        HilbertSpace::qubits(self.n_qubits).expect("checked in new")
    }

    pub fn enlarged_space(&self) -> HilbertSpace {
        HilbertSpace::qubits(self.n_qubits + 1).expect("checked in new")
    }

    fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Real components of the embedded vector.
    pub fn forward(&self, psi: &CVec) -> Result<Vec<f64>> {
        if psi.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for {} qubits",
                psi.len(),
                self.n_qubits
            )));
        }
        Ok(psi.iter().map(|z| z.re).chain(psi.iter().map(|z| z.im)).collect())
    }

    pub fn embed_state(&self, psi: &PureState) -> Result<PureState> {
        psi.space().check_same(&self.simulated_space())?;
        let v = self.forward(psi.amplitudes())?;
        PureState::new(
            &self.enlarged_space(),
            CVec::from_iterator(v.len(), v.into_iter().map(|x| c(x, 0.0))),
        )
    }

    /// `ψ = M ψ̃` with `M = (1, i) ⊗ 1`.
    pub fn decode(&self, v: &CVec) -> Result<CVec> {
        let d = self.dim();
        if v.len() != 2 * d {
            return Err(Error::DimensionMismatch(format!(
                "{} components for {} qubits",
                v.len(),
                self.n_qubits
            )));
        }
        Ok(CVec::from_fn(d, |k, _| v[k] + I * v[k + d]))
    }

    pub fn decode_matrix(&self) -> CMat {
        let d = self.dim();
        let mut m = CMat::zeros(d, 2 * d);
        for k in 0..d {
            m[(k, k)] = ONE;
            m[(k, k + d)] = I;
        }
        m
    }

    /// `K̃ = σz ⊗ 1`.
    pub fn conjugation_gate(&self) -> CMat {
        kron_all(&[Pauli::Z.matrix(), CMat::identity(self.dim(), self.dim())])
    }
}

/// `H̃ = i 1⊗B − σy⊗A` for `H = A + iB`, so that `M H̃ = H M`.
pub fn embed_hamiltonian(h: &CMat) -> Result<CMat> {
    let d = h.nrows();
    if h.ncols() != d || !d.is_power_of_two() || d < 2 {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} is not a qubit register",
            h.nrows(),
            h.ncols()
        )));
    }
    if hermitian_deviation(h) > HERMITIAN_TOL {
        return invalid("embedding needs a Hermitian Hamiltonian");
    }
    let a = h.map(|z| c(z.re, 0.0));
    let b = h.map(|z| c(z.im, 0.0));
    let asym = (&a - a.transpose()).norm();
    let bsym = (&b + b.transpose()).norm();
    if asym > HERMITIAN_TOL || bsym > HERMITIAN_TOL {
        return Err(Error::Invariant(format!(
            "Re H not symmetric ({asym:e}) or Im H not antisymmetric ({bsym:e})"
        )));
    }
    let id2 = CMat::identity(2, 2);
    Ok(kron_all(&[id2, b]) * I - kron_all(&[Pauli::Y.matrix(), a]))
}

/// Pauli-form embedding: strings with an odd number of `Y` factors are
/// imaginary and become `1 ⊗ P`, the real ones become `−σy ⊗ P`.
pub fn embed_pauli_hamiltonian(terms: &[(f64, PauliString)]) -> Vec<(f64, PauliString)> {
    terms
        .iter()
        .map(|(q, p)| {
            let ny = p.factors().iter().filter(|f| **f == Pauli::Y).count();
            let mut f = Vec::with_capacity(p.len() + 1);
            if ny % 2 == 1 {
                f.push(Pauli::I);
                f.extend_from_slice(p.factors());
                (*q, PauliString::new(f))
            } else {
                f.push(Pauli::Y);
                f.extend_from_slice(p.factors());
                (-*q, PauliString::new(f))
            }
        })
        .collect()
}

/// Embed a qubit-only Hermitian operator, keeping it in operator form.
pub fn embed_operator(h: &OperatorSum) -> Result<OperatorSum> {
    if !h.space().is_qubits_only() {
        return Err(Error::Unsupported("embedding needs a qubit-only register".into()));
    }
    let mut real = Vec::new();
    for (q, p) in pauli_decompose(h)? {
        if q.im.abs() > HERMITIAN_TOL * q.norm().max(1.0) {
            return invalid("embedding needs a Hermitian Hamiltonian");
        }
        real.push((q.re, p));
    }
    pauli_sum(
        &HilbertSpace::qubits(h.space().n_qubits() + 1)?,
        &embed_pauli_hamiltonian(&real),
    )
}

fn pauli_sum(space: &HilbertSpace, terms: &[(f64, PauliString)]) -> Result<OperatorSum> {
    let sites: Vec<usize> = (0..space.n_qubits()).collect();
    let mut out = OperatorSum::zero(space);
    for (q, p) in terms {
        out = out.plus(&p.embed(space, &sites, c(*q, 0.0))?)?;
    }
    Ok(out.assume_hermitian())
}

/// `⟨ψ|O|ψ*⟩` read from an embedded state as `⟨σz⊗O⟩ − i⟨σx⊗O⟩`.
pub fn conj_expectation(embedded: &QState, o: &CMat) -> Result<C64> {
    let d = o.nrows();
    if embedded.space().dim() != 2 * d || !embedded.space().is_qubits_only() {
        return Err(Error::DimensionMismatch(
            "observable does not match the simulated register".into(),
        ));
    }
    if hermitian_deviation(o) > HERMITIAN_TOL {
        return invalid("observable must be Hermitian");
    }
    let z = expectation_dense(embedded, &kron_all(&[Pauli::Z.matrix(), o.clone()]))?;
    let x = expectation_dense(embedded, &kron_all(&[Pauli::X.matrix(), o.clone()]))?;
    Ok(c(z.re, 0.0) - I * x.re)
}

/// Direct classical evaluation of `⟨ψ|O|ψ*⟩`.
pub fn conj_expectation_direct(psi: &CVec, o: &CMat) -> C64 {
    psi.dotc(&(o * psi.map(|z| z.conj())))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MonotoneKind {
    Concurrence2,
    SecondOrder2,
    Tangle3,
    EvenN,
    OddN,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MonotoneSpec {
    kind: MonotoneKind,
    n: usize,
}

/// `g^{μν}` diagonal, indexed by `[1, σx, σy, σz]`.
pub const METRIC: [f64; 4] = [-1.0, 1.0, 0.0, 1.0];

/// The algebraic form of a monotone over values `c(O) = ⟨ψ|O|ψ*⟩`.
#[derive(Clone, Debug, PartialEq)]
pub enum MonotoneForm {
    /// `|c(O)|`
    Linear(PauliString),
    /// `|Σ w c(O)²|`
    Quadratic(Vec<(f64, PauliString)>),
}

impl MonotoneSpec {
    pub fn new(kind: MonotoneKind, n: usize) -> Result<Self> {
        let ok = match kind {
            MonotoneKind::Concurrence2 | MonotoneKind::SecondOrder2 => n == 2,
            MonotoneKind::Tangle3 => n == 3,
            MonotoneKind::EvenN => n >= 2 && n.is_multiple_of(2),
            MonotoneKind::OddN => n >= 3 && n % 2 == 1,
        };
        if !ok {
            return invalid(format!("{kind:?} is not defined for N = {n}"));
        }
        Ok(Self { kind, n })
    }

    pub fn kind(&self) -> MonotoneKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn form(&self) -> MonotoneForm {
        let ys = |k: usize| vec![Pauli::Y; k];
        match self.kind {
            MonotoneKind::Concurrence2 | MonotoneKind::EvenN => MonotoneForm::Linear(PauliString::new(ys(self.n))),
            MonotoneKind::Tangle3 | MonotoneKind::OddN => MonotoneForm::Quadratic(
                weighted_paulis()
                    .map(|(w, p)| {
                        let mut f = vec![p];
                        f.extend(ys(self.n - 1));
                        (w, PauliString::new(f))
                    })
                    .collect(),
            ),
            MonotoneKind::SecondOrder2 => MonotoneForm::Quadratic(
                weighted_paulis()
                    .flat_map(|(w1, p1)| {
                        weighted_paulis().map(move |(w2, p2)| (w1 * w2, PauliString::new(vec![p1, p2])))
                    })
                    .collect(),
            ),
        }
    }

    /// Simulated-register strings whose `c(O)` enters the monotone.
    pub fn simulated_observables(&self) -> Vec<PauliString> {
        match self.form() {
            MonotoneForm::Linear(p) => vec![p],
            MonotoneForm::Quadratic(t) => t.into_iter().map(|(_, p)| p).collect(),
        }
    }

    /// Enlarged-space observables, `σz ⊗ O` and `σx ⊗ O` per string.
    pub fn enlarged_observables(&self) -> Vec<PauliString> {
        self.simulated_observables()
            .iter()
            .flat_map(|o| {
                [Pauli::Z, Pauli::X].map(|a| {
                    let mut f = vec![a];
                    f.extend_from_slice(o.factors());
                    PauliString::new(f)
                })
            })
            .collect()
    }
}

fn weighted_paulis() -> impl Iterator<Item = (f64, Pauli)> + Clone {
    Pauli::ALL
        .into_iter()
        .zip(METRIC)
        .filter(|(_, w)| *w != 0.0)
        .map(|(p, w)| (w, p))
}

fn assemble(form: &MonotoneForm, mut value_of: impl FnMut(&PauliString) -> Result<C64>) -> Result<f64> {
    Ok(match form {
        MonotoneForm::Linear(p) => value_of(p)?.norm(),
        MonotoneForm::Quadratic(terms) => {
            let mut acc = ZERO;
            for (w, p) in terms {
                let v = value_of(p)?;
                acc += v * v * *w;
            }
            acc.norm()
        }
    })
}

#[derive(Clone, Debug)]
pub enum MonotoneInput {
    Simulated(PureState),
    /// A state on the enlarged `N + 1` qubit register.
    Embedded(QState),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonotoneValue {
    pub value: f64,
    /// Enlarged-space Pauli strings that were measured.
    pub observables: Vec<PauliString>,
}

/// Evaluate a monotone through the enlarged-space observables.
pub fn monotone(input: &MonotoneInput, spec: &MonotoneSpec) -> Result<MonotoneValue> {
    let map = EmbeddingMap::new(spec.n)?;
    let embedded: QState = match input {
        MonotoneInput::Simulated(psi) => {
            if psi.space().n_qubits() != spec.n || !psi.space().is_qubits_only() {
                return invalid(format!("{:?} expects {} qubits", spec.kind, spec.n));
            }
            map.embed_state(psi)?.into()
        }
        MonotoneInput::Embedded(s) => {
            if s.space().n_qubits() != spec.n + 1 || !s.space().is_qubits_only() {
                return invalid(format!(
                    "{:?} expects an enlarged register of {} qubits",
                    spec.kind,
                    spec.n + 1
                ));
            }
            s.clone()
        }
    };
    let value = assemble(&spec.form(), |p| {
        let z = expectation_dense(&embedded, &prefixed(Pauli::Z, p).to_dense())?;
        let x = expectation_dense(&embedded, &prefixed(Pauli::X, p).to_dense())?;
        Ok(c(z.re, 0.0) - I * x.re)
    })?;
    Ok(MonotoneValue {
        value,
        observables: spec.enlarged_observables(),
    })
}

fn prefixed(a: Pauli, p: &PauliString) -> PauliString {
    let mut f = vec![a];
    f.extend_from_slice(p.factors());
    PauliString::new(f)
}

/// The same monotone from the full complex amplitudes.
pub fn monotone_direct(psi: &CVec, spec: &MonotoneSpec) -> Result<f64> {
    if psi.len() != 1 << spec.n {
        return Err(Error::DimensionMismatch(format!(
            "{} amplitudes for {} qubits",
            psi.len(),
            spec.n
        )));
    }
    assemble(&spec.form(), |p| Ok(conj_expectation_direct(psi, &p.to_dense())))
}

/// `Σ p_i E(ψ_i)` for one given pure-state decomposition.
pub fn monotone_average(decomposition: &[(f64, PureState)], spec: &MonotoneSpec) -> Result<f64> {
    let total: f64 = decomposition.iter().map(|(p, _)| *p).sum();
    if decomposition.iter().any(|(p, _)| *p < 0.0) || (total - 1.0).abs() > NORM_TOL {
        return invalid("decomposition weights must be a probability vector");
    }
    let vals = par::map_slice(decomposition, |(p, psi)| {
        monotone(&MonotoneInput::Simulated(psi.clone()), spec).map(|v| p * v.value)
    });
    vals.into_iter().sum()
}

/// Controlled-Z between qubits `a` and `b` of an `n`-qubit register.
pub fn cz(n: usize, a: usize, b: usize) -> CMat {
    let d = 1usize << n;
    let (ba, bb) = (1usize << (n - 1 - a), 1usize << (n - 1 - b));
    CMat::from_fn(d, d, |r, col| {
        if r != col {
            ZERO
        } else if r & ba != 0 && r & bb != 0 {
            -ONE
        } else {
            ONE
        }
    })
}

/// `exp(iφP)` for a Pauli string `P`.
pub fn pauli_exp(p: &PauliString, phi: f64) -> CMat {
    let d = 1usize << p.len();
    CMat::identity(d, d) * c(phi.cos(), 0.0) + p.to_dense() * c(0.0, phi.sin())
}

/// `R_y(φ) = exp(−iσyφ)` on qubit 0 of three.
fn ry0(phi: f64) -> CMat {
    pauli_exp(&PauliString::new(vec![Pauli::Y, Pauli::I, Pauli::I]), -phi)
}

/// `CZ⁰² CZ⁰¹ R_y⁰(φ) CZ⁰¹ CZ⁰²`.
pub fn reduced_circuit_unitary(phi: f64) -> CMat {
    let (c01, c02) = (cz(3, 0, 1), cz(3, 0, 2));
    &c02 * &c01 * ry0(phi) * &c01 * &c02
}

/// The two-gate variant, valid on inputs with the ancilla in `|0⟩`.
pub fn reduced_circuit_two_gate(phi: f64) -> CMat {
    cz(3, 0, 2) * cz(3, 0, 1) * ry0(phi)
}

/// `exp(−iφ σy⊗σz⊗σz)`.
pub fn reduced_circuit_target(phi: f64) -> CMat {
    pauli_exp(&PauliString::new(vec![Pauli::Y, Pauli::Z, Pauli::Z]), -phi)
}

/// One concurrence sample of the photonic-style scenario.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConcurrencePoint {
    pub t: f64,
    pub eqs: f64,
    pub direct: f64,
}

/// `H = −g σz⊗σz` from `|++⟩`, run exactly in the enlarged space under
/// `H̃ = g σy⊗σz⊗σz`; `direct` evaluates `|⟨ψ|σy⊗σy|ψ*⟩|` on the simulated
/// state.
pub fn concurrence_scenario(g: f64, times: &[f64]) -> Result<Vec<ConcurrencePoint>> {
    let map = EmbeddingMap::new(2)?;
    let zz = PauliString::new(vec![Pauli::Z, Pauli::Z]).to_dense();
    let h = zz * c(-g, 0.0);
    let ht = embed_hamiltonian(&h)?;
    let eig_sim = HermitianEig::new(&h)?;
    let eig_emb = HermitianEig::new(&ht)?;
    let plus = CVec::from_element(4, c(0.5, 0.0));
    let psi0 = PureState::new(&map.simulated_space(), plus)?;
    let psi0e = map.embed_state(&psi0)?;
    let spec = MonotoneSpec::new(MonotoneKind::Concurrence2, 2)?;
    let out = par::map_slice(times, |&t| -> Result<ConcurrencePoint> {
        let e = PureState::new_unchecked(&map.enlarged_space(), eig_emb.apply(t, psi0e.amplitudes()))?;
        let eqs = monotone(&MonotoneInput::Embedded(e.into()), &spec)?.value;
        let direct = monotone_direct(&eig_sim.apply(t, psi0.amplitudes()), &spec)?;
        Ok(ConcurrencePoint { t, eqs, direct })
    });
    out.into_iter().collect()
}

/// Elementary operations of a trapped-ion style circuit.
#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    /// `exp(−iθ/4 (cos φ S_x + sin φ S_y)²)` over `sites`.
    Ms {
        sites: Vec<usize>,
        theta: f64,
        phase: f64,
    },
    /// `exp(−i angle/2 σ)` on one qubit.
    Rot {
        site: usize,
        axis: Pauli,
        angle: f64,
    },
    /// `exp(iφ σ)` on one qubit; the central gate of an MS sandwich.
    Central {
        site: usize,
        axis: Pauli,
        phi: f64,
    },
    /// `exp(iφ σ (a + a†))` with the mode as the last factor.
    SpinBoson {
        site: usize,
        axis: Pauli,
        phi: f64,
    },
    Cz {
        a: usize,
        b: usize,
    },
    /// `Π_k exp(−i angle/2 σ_k)` over every qubit.
    Global {
        axis: Pauli,
        angle: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    space: HilbertSpace,
    gates: Vec<Gate>,
}

fn single_site(space: &HilbertSpace, site: usize, m: CMat) -> CMat {
    let mats: Vec<CMat> = space
        .factors()
        .iter()
        .enumerate()
        .map(|(k, f)| {
            if k == site {
                m.clone()
            } else {
                CMat::identity(f.dim(), f.dim())
            }
        })
        .collect();
    kron_all(&mats)
}

impl Circuit {
    pub fn new(space: &HilbertSpace, gates: Vec<Gate>) -> Result<Self> {
        let circ = Self {
            space: space.clone(),
            gates,
        };
        for g in &circ.gates {
            circ.check(g)?;
        }
        Ok(circ)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    fn is_qubit(&self, s: usize) -> bool {
        self.space.factors().get(s) == Some(&Factor::Qubit)
    }

    fn check(&self, g: &Gate) -> Result<()> {
        let ok = match g {
            Gate::Ms { sites, .. } => !sites.is_empty() && sites.iter().all(|s| self.is_qubit(*s)),
            Gate::Rot { site, axis, .. } | Gate::Central { site, axis, .. } => {
                self.is_qubit(*site) && *axis != Pauli::I
            }
            Gate::SpinBoson { site, axis, .. } => {
                self.is_qubit(*site)
                    && *axis != Pauli::I
                    && matches!(self.space.factors().last(), Some(Factor::Boson { .. }))
            }
            Gate::Cz { a, b } => a != b && self.is_qubit(*a) && self.is_qubit(*b),
            Gate::Global { axis, .. } => *axis != Pauli::I,
        };
        if ok {
            Ok(())
        } else {
            invalid(format!("{g:?} does not fit the register"))
        }
    }

    pub fn gate_matrix(&self, g: &Gate) -> Result<CMat> {
        let sp = &self.space;
        Ok(match g {
            Gate::Ms { sites, theta, phase } => {
                let mut s = CMat::zeros(sp.dim(), sp.dim());
                let local = Pauli::X.matrix() * c(phase.cos(), 0.0) + Pauli::Y.matrix() * c(phase.sin(), 0.0);
                for &k in sites {
                    s += single_site(sp, k, local.clone());
                }
                HermitianEig::new(&s)?.function(|l| C64::from_polar(1.0, -theta * l * l / 4.0))
            }
            Gate::Rot { site, axis, angle } => {
                single_site(sp, *site, pauli_exp(&PauliString::new(vec![*axis]), -angle / 2.0))
            }
            Gate::Central { site, axis, phi } => {
                single_site(sp, *site, pauli_exp(&PauliString::new(vec![*axis]), *phi))
            }
            Gate::SpinBoson { site, axis, phi } => {
                let last = sp.n_factors() - 1;
                let gen = single_site(sp, *site, axis.matrix())
                    * single_site(sp, last, Prim::B(BosonOp::X).matrix(sp.factors()[last]));
                HermitianEig::new(&gen)?.propagator(-phi)
            }
            Gate::Cz { a, b } => {
                let pe = Prim::Q(crate::qcore::QubitOp::ProjG).matrix(Factor::Qubit);
                let d = sp.dim();
                CMat::identity(d, d) - single_site(sp, *a, pe.clone()) * single_site(sp, *b, pe) * c(2.0, 0.0)
            }
            Gate::Global { axis, angle } => {
                let d = sp.dim();
                let local = pauli_exp(&PauliString::new(vec![*axis]), -angle / 2.0);
                (0..sp.n_factors())
                    .filter(|&k| sp.factors()[k] == Factor::Qubit)
                    .fold(CMat::identity(d, d), |u, k| single_site(sp, k, local.clone()) * u)
            }
        })
    }

    /// Rewrite with addressed operations restricted to z rotations, as on an
    /// ion chain: `R_x^j(θ) = G_y(π/2) R_z^j(θ) G_y(−π/2)` and
    /// `R_y^j(θ) = G_x(−π/2) R_z^j(θ) G_x(π/2)` with global rotations `G`.
    pub fn ion_native(&self) -> Circuit {
        use std::f64::consts::FRAC_PI_2;
        let mut out = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            let rot = match g {
                Gate::Rot { site, axis, angle } => Some((*site, *axis, *angle)),
                Gate::Central { site, axis, phi } => Some((*site, *axis, -2.0 * phi)),
                _ => None,
            };
            match rot {
                Some((site, Pauli::Z, angle)) => out.push(Gate::Rot {
                    site,
                    axis: Pauli::Z,
                    angle,
                }),
                Some((site, axis, angle)) => {
                    let (gaxis, gangle) = if axis == Pauli::X {
                        (Pauli::Y, FRAC_PI_2)
                    } else {
                        (Pauli::X, -FRAC_PI_2)
                    };
                    out.push(Gate::Global {
                        axis: gaxis,
                        angle: -gangle,
                    });
                    out.push(Gate::Rot {
                        site,
                        axis: Pauli::Z,
                        angle,
                    });
                    out.push(Gate::Global {
                        axis: gaxis,
                        angle: gangle,
                    });
                }
                None => out.push(g.clone()),
            }
        }
        Circuit {
            space: self.space.clone(),
            gates: out,
        }
    }

    /// Product of the gates, first gate applied first.
    pub fn unitary(&self) -> Result<CMat> {
        let d = self.space.dim();
        let mut u = CMat::identity(d, d);
        for g in &self.gates {
            u = self.gate_matrix(g)? * u;
        }
        Ok(u)
    }
}

fn rotation_to(from: Pauli, to: Pauli) -> Option<(Pauli, f64)> {
    use std::f64::consts::FRAC_PI_2;
    use Pauli::*;
    match (from, to) {
        (a, b) if a == b => None,
        (X, Y) => Some((Z, FRAC_PI_2)),
        (X, Z) => Some((Y, -FRAC_PI_2)),
        (Z, X) => Some((Y, FRAC_PI_2)),
        (Z, Y) => Some((X, -FRAC_PI_2)),
        _ => unreachable!("only X and Z sources are used"),
    }
}

/// Sign flip `φ′ = s φ` of the central gate for `k` qubits.
pub fn ms_sign(k: usize) -> f64 {
    let half = if k % 2 == 1 { (k - 1) / 2 } else { k / 2 };
    if half % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

enum Central {
    Pauli,
    Boson,
}

/// `MS(−π/2) · C · MS(π/2)` yields `exp(iφ σz ⊗ σx ⊗ … ⊗ σx)`; local
/// rotations then turn each factor into the requested Pauli.
fn ms_gates(target: &PauliString, sites: &[usize], phi: f64, central: Central) -> Result<Vec<Gate>> {
    let k = target.len();
    if k < 2 {
        return invalid("MS compilation needs at least two qubits");
    }
    if target.factors().contains(&Pauli::I) {
        return Err(Error::Unsupported(format!("identity factor in {target}")));
    }
    let mut frame = Vec::new();
    for (j, (&p, &s)) in target.factors().iter().zip(sites).enumerate() {
        let src = if j == 0 { Pauli::Z } else { Pauli::X };
        if let Some((axis, angle)) = rotation_to(src, p) {
            frame.push((s, axis, angle));
        }
    }
    let axis = if k % 2 == 1 { Pauli::Z } else { Pauli::Y };
    let phi_c = ms_sign(k) * phi;
    let mut gates: Vec<Gate> = frame
        .iter()
        .map(|&(site, axis, angle)| Gate::Rot {
            site,
            axis,
            angle: -angle,
        })
        .collect();
    gates.push(Gate::Ms {
        sites: sites.to_vec(),
        theta: std::f64::consts::FRAC_PI_2,
        phase: 0.0,
    });
    gates.push(match central {
        Central::Pauli => Gate::Central {
            site: sites[0],
            axis,
            phi: phi_c,
        },
        Central::Boson => Gate::SpinBoson {
            site: sites[0],
            axis,
            phi: phi_c,
        },
    });
    gates.push(Gate::Ms {
        sites: sites.to_vec(),
        theta: -std::f64::consts::FRAC_PI_2,
        phase: 0.0,
    });
    gates.extend(frame.iter().map(|&(site, axis, angle)| Gate::Rot { site, axis, angle }));
    Ok(gates)
}

/// Gate sequence for `exp(iφP)` on `k = |P|` qubits.
pub fn ms_compile(target: &PauliString, phi: f64) -> Result<Circuit> {
    let sites: Vec<usize> = (0..target.len()).collect();
    let gates = ms_gates(target, &sites, phi, Central::Pauli)?;
    Circuit::new(&HilbertSpace::qubits(target.len())?, gates)
}

/// Gate sequence for `exp(iφ P (a + a†))`, the mode being the last factor.
pub fn ms_compile_spin_boson(target: &PauliString, phi: f64, n_max: usize) -> Result<Circuit> {
    let sites: Vec<usize> = (0..target.len()).collect();
    let gates = ms_gates(target, &sites, phi, Central::Boson)?;
    Circuit::new(&HilbertSpace::qubits_boson(target.len(), n_max)?, gates)
}

/// Dense `exp(iφP)`, or `exp(iφ P (a + a†))` on `space` when it ends in a mode.
pub fn ms_target(target: &PauliString, phi: f64, space: &HilbertSpace) -> Result<CMat> {
    let k = target.len();
    if space.n_qubits() != k {
        return Err(Error::DimensionMismatch(format!(
            "{k}-qubit target on {} qubits",
            space.n_qubits()
        )));
    }
    match space.factors().last() {
        Some(Factor::Boson { .. }) => {
            let last = space.n_factors() - 1;
            let p = kron_all(&[
                target.to_dense(),
                CMat::identity(space.factors()[last].dim(), space.factors()[last].dim()),
            ]);
            let gen = p * single_site(space, last, Prim::B(BosonOp::X).matrix(space.factors()[last]));
            Ok(HermitianEig::new(&gen)?.propagator(-phi))
        }
        _ => Ok(pauli_exp(target, phi)),
    }
}

/// Operator-norm distance between a compiled circuit and a target unitary.
pub fn ms_verify(circuit: &Circuit, target: &CMat) -> Result<f64> {
    let u = circuit.unitary()?;
    if u.shape() != target.shape() {
        return Err(Error::DimensionMismatch("circuit and target differ in size".into()));
    }
    Ok(op_norm(&(u - target)))
}

/// Gates for `exp(iφP)` on an `n`-qubit register where `P` may contain
/// identities; the MS gates act on the support only.
pub fn pauli_exponential_gates(p: &PauliString, phi: f64) -> Result<Vec<Gate>> {
    let support = p.support();
    match support.len() {
        0 => Ok(Vec::new()),
        1 => Ok(vec![Gate::Rot {
            site: support[0],
            axis: p.factors()[support[0]],
            angle: -2.0 * phi,
        }]),
        _ => {
            let sub = PauliString::new(support.iter().map(|&s| p.factors()[s]).collect());
            ms_gates(&sub, &support, phi, Central::Pauli)
        }
    }
}

/// First-order Trotter circuit for `H = Σ q_j P_j` over `steps` slices.
/// Identity strings only contribute a global phase and are dropped.
pub fn trotter_circuit(n_qubits: usize, terms: &[(f64, PauliString)], t: f64, steps: usize) -> Result<Circuit> {
    if steps == 0 {
        return invalid("at least one Trotter step");
    }
    if terms.iter().any(|(_, p)| p.len() != n_qubits) {
        return Err(Error::DimensionMismatch("term length differs from the register".into()));
    }
    let mut slice = Vec::new();
    for (q, p) in terms {
        slice.extend(pauli_exponential_gates(p, -q * t / steps as f64)?);
    }
    let gates = (0..steps).flat_map(|_| slice.iter().cloned()).collect();
    Circuit::new(&HilbertSpace::qubits(n_qubits)?, gates)
}

/// Per-gate depolarizing fidelity and nearest-neighbour crosstalk.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    pub epsilon: f64,
    pub delta0: f64,
}

impl NoiseModel {
    pub fn new(epsilon: f64, delta0: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return invalid(format!("gate fidelity {epsilon} outside (0, 1]"));
        }
        if !delta0.is_finite() {
            return invalid("crosstalk strength must be finite");
        }
        Ok(Self { epsilon, delta0 })
    }

    pub fn ideal() -> Self {
        Self {
            epsilon: 1.0,
            delta0: 0.0,
        }
    }

    /// `Δ = δ_kj + Δ₀ δ_{k±1,j}`.
    pub fn crosstalk_matrix(&self, n: usize) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(n, n, |k, j| {
            if k == j {
                1.0
            } else if k.abs_diff(j) == 1 {
                self.delta0
            } else {
                0.0
            }
        })
    }
}

/// `ρ → ε^n ρ + (1 − ε^n) 1/d`, the closed form of `n` depolarizing steps.
pub fn apply_noise(rho: &DensityMatrix, epsilon: f64, n: u32) -> Result<DensityMatrix> {
    NoiseModel::new(epsilon, 0.0)?;
    let d = rho.space().dim();
    let f = epsilon.powi(n as i32);
    let m = rho.matrix() * c(f, 0.0) + CMat::identity(d, d) * c((1.0 - f) / d as f64, 0.0);
    DensityMatrix::new_unchecked(rho.space(), m)
}

/// Ideal expectation from a noisy one: `(m − (1 − ε^n) Tr O / d) / ε^n`.
pub fn rescale_expectation(measured: f64, epsilon: f64, n: u32, o: &CMat) -> Result<f64> {
    NoiseModel::new(epsilon, 0.0)?;
    let f = epsilon.powi(n as i32);
    let d = o.nrows() as f64;
    Ok((measured - (1.0 - f) * o.trace().re / d) / f)
}

/// Repetition cost of the embedded readout relative to tomography on a
/// one-to-one simulator: `l (δ/ε)^{2n} / 3^{N}`. With `n = N` gates this is
/// `l (δ / (√3 ε))^{2N}`.
pub fn cost_ratio(n_qubits: u32, l: u32, n_gates: u32, epsilon: f64, delta: f64) -> Result<f64> {
    NoiseModel::new(epsilon, 0.0)?;
    if !(delta > 0.0 && delta <= 1.0) {
        return invalid(format!("gate fidelity {delta} outside (0, 1]"));
    }
    Ok(l as f64 * (delta / epsilon).powi(2 * n_gates as i32) / 3f64.powi(n_qubits as i32))
}

/// Run a qubit circuit on a density matrix, depolarizing after every gate
/// and smearing single-qubit z rotations over neighbours by the crosstalk
/// matrix.
pub fn run_noisy(circuit: &Circuit, rho0: &DensityMatrix, noise: &NoiseModel) -> Result<DensityMatrix> {
    rho0.space().check_same(circuit.space())?;
    let sp = circuit.space();
    let n = sp.n_factors();
    let delta = noise.crosstalk_matrix(n);
    let d = sp.dim();
    let f = noise.epsilon;
    let mut rho = rho0.matrix().clone();
    for g in circuit.gates() {
        let u = match g {
            Gate::Rot {
                site,
                axis: Pauli::Z,
                angle,
            } if noise.delta0 != 0.0 => {
                let mut u = CMat::identity(d, d);
                for k in 0..n {
                    let w = delta[(k, *site)];
                    if w != 0.0 && sp.factors()[k] == Factor::Qubit {
                        u = single_site(sp, k, pauli_exp(&PauliString::new(vec![Pauli::Z]), -w * angle / 2.0)) * u;
                    }
                }
                u
            }
            _ => circuit.gate_matrix(g)?,
        };
        rho = &u * rho * u.adjoint();
        if f < 1.0 {
            rho = rho * c(f, 0.0) + CMat::identity(d, d) * c((1.0 - f) / d as f64, 0.0);
        }
    }
    DensityMatrix::new_unchecked(sp, rho)
}

/// How an observable with identity slots was read out through one or two
/// dressing evolutions `exp(−iφ P)` and a one- or two-site measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct AnticommutationReadout {
    pub value: f64,
    pub readout: PauliString,
    /// `(P, φ)` applied in order; `φ = ±π/4`.
    pub dressings: Vec<(PauliString, f64)>,
}

fn readout_candidates(n: usize) -> Vec<PauliString> {
    let order = [Pauli::Z, Pauli::X, Pauli::Y];
    let mut out = Vec::new();
    for a in 0..n {
        for p in order {
            out.push(PauliString::single(n, a, p));
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            for p in order {
                for q in order {
                    let mut f = vec![Pauli::I; n];
                    f[a] = p;
                    f[b] = q;
                    out.push(PauliString::new(f));
                }
            }
        }
    }
    out
}

fn others(p: Pauli) -> [Pauli; 2] {
    match p {
        Pauli::X => [Pauli::Y, Pauli::Z],
        Pauli::Y => [Pauli::X, Pauli::Z],
        Pauli::Z => [Pauli::X, Pauli::Y],
        Pauli::I => unreachable!(),
    }
}

/// Conjugating `R` by `exp(−iε_j π/4 P_j)` with every `P_j` anticommuting
/// with `R` gives `R Π(−iε_j P_j)`; returns that phase and string.
fn dressed(r: &PauliString, dressings: &[(PauliString, f64)]) -> (C64, PauliString) {
    let mut phase = ONE;
    let mut s = r.clone();
    for (p, phi) in dressings {
        let (ph, next) = s.mul(p);
        phase *= ph * c(0.0, -phi.signum());
        s = next;
    }
    (phase, s)
}

/// Find the dressing evolutions that turn `readout` into `theta`.
pub fn anticommutation_plan(theta: &PauliString) -> Result<(PauliString, Vec<(PauliString, f64)>)> {
    let n = theta.len();
    if theta.is_identity() {
        return invalid("the identity string carries no correlation");
    }
    if theta.weight() <= 2 {
        return Ok((theta.clone(), Vec::new()));
    }
    let cands = readout_candidates(n);
    // a single full-weight evolution suffices for strings without identities
    if theta.weight() == n {
        for r in cands.iter().filter(|r| r.weight() == 1) {
            if r.commutes(theta) {
                continue;
            }
            let (_, s) = r.mul(theta);
            for phi in [FRAC_PI_4, -FRAC_PI_4] {
                let plan = vec![(s.clone(), phi)];
                if dressed(r, &plan) == (ONE, theta.clone()) {
                    return Ok((r.clone(), plan));
                }
            }
        }
    }
    for r in &cands {
        let (_, t) = r.mul(theta);
        if t.weight() % 2 == 1 {
            continue;
        }
        // per-site options for (P1, P2): equal off the support of t, the two
        // complementary Paulis on it; only readout sites need a search
        let opts: Vec<Vec<(Pauli, Pauli)>> = t
            .factors()
            .iter()
            .map(|&f| match f {
                Pauli::I => vec![(Pauli::X, Pauli::X), (Pauli::Y, Pauli::Y), (Pauli::Z, Pauli::Z)],
                p => {
                    let [a, b] = others(p);
                    vec![(a, b), (b, a)]
                }
            })
            .collect();
        let rs = r.support();
        let mut choice = vec![0usize; n];
        let combos: usize = rs.iter().map(|&s| opts[s].len()).product();
        for code in 0..combos {
            let mut rem = code;
            for &s in &rs {
                choice[s] = rem % opts[s].len();
                rem /= opts[s].len();
            }
            let p1 = PauliString::new((0..n).map(|k| opts[k][choice[k]].0).collect());
            let p2 = PauliString::new((0..n).map(|k| opts[k][choice[k]].1).collect());
            if r.commutes(&p1) || r.commutes(&p2) || !p1.commutes(&p2) {
                continue;
            }
            for phi2 in [FRAC_PI_4, -FRAC_PI_4] {
                let plan = vec![(p1.clone(), FRAC_PI_4), (p2.clone(), phi2)];
                if dressed(r, &plan) == (ONE, theta.clone()) {
                    return Ok((r.clone(), plan));
                }
            }
        }
    }
    Err(Error::NotFound(format!("no dressing reads out {theta}")))
}

/// `⟨Θ⟩` obtained by evolving under the dressings and measuring the readout.
pub fn measure_via_anticommutation(theta: &PauliString, state: &QState) -> Result<AnticommutationReadout> {
    if !state.space().is_qubits_only() || state.space().n_qubits() != theta.len() {
        return Err(Error::DimensionMismatch(format!(
            "{}-qubit string on {:?}",
            theta.len(),
            state.space()
        )));
    }
    let (readout, dressings) = anticommutation_plan(theta)?;
    let d = state.space().dim();
    let mut u = CMat::identity(d, d);
    for (p, phi) in &dressings {
        u = pauli_exp(p, -phi) * u;
    }
    let value = match state {
        QState::Pure(psi) => {
            let v = &u * psi.amplitudes();
            v.dotc(&(readout.to_dense() * &v)).re
        }
        QState::Mixed(rho) => (readout.to_dense() * &u * rho.matrix() * u.adjoint()).trace().re,
    };
    Ok(AnticommutationReadout {
        value,
        readout,
        dressings,
    })
}

/// Embedded three-qubit Ising model whose evolution builds GHZ-type states:
/// `ω Σ σy_j − g σy_0 ⊗ σx_1 ⊗ σx_2 ⊗ σx_3` on four qubits.
pub fn ghz_embedded_terms(omega: f64, g: f64) -> Vec<(f64, PauliString)> {
    let mut terms: Vec<(f64, PauliString)> = (1..4).map(|k| (omega, PauliString::single(4, k, Pauli::Y))).collect();
    terms.push((-g, PauliString::new(vec![Pauli::Y, Pauli::X, Pauli::X, Pauli::X])));
    terms
}

/// 3-tangle of a (possibly noisy) enlarged-space state via its six observables.
pub fn tangle_embedded(state: &QState) -> Result<f64> {
    let spec = MonotoneSpec::new(MonotoneKind::Tangle3, 3)?;
    Ok(monotone(&MonotoneInput::Embedded(state.clone()), &spec)?.value)
}

/// Constant schedule of `H̃` for a qubit Hamiltonian given in operator form.
pub fn embedded_schedule(h: &OperatorSum) -> Result<crate::qcore::Schedule> {
    crate::qcore::Schedule::constant(&embed_operator(h)?)
}
