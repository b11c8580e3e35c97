//! Ancilla-based extraction of n-time correlation functions.
//!
//! A probe qubit (factor 0 of the joint space) starts in `(|e⟩ + |g⟩)/√2`.
//! Both branches follow the system evolution; at each time `t_k` the gate
//! `|e⟩⟨e| ⊗ 1 + |g⟩⟨g| ⊗ exp(−iθ O_k)` acts, with `θ = π/2` for Pauli
//! strings so the `|g⟩` branch picks up `−i O_k`. Afterwards
//! `⟨σx⟩ + i⟨σy⟩ = ⟨ψ_e|ψ_g⟩ = (−i)^n ⟨O_{n−1}(t_{n−1}) … O_0(t_0)⟩`.
//!
//! The initial state is given at time 0 and `O(t) = U(t;0)† O U(t;0)`;
//! the leftmost operator carries the latest time in ordered specs.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::qcore::expm::HermitianEig;
use crate::qcore::ops::{hermitian_deviation, BosonOp, OperatorSum, Prim, QubitOp};
use crate::qcore::pauli::expand_qubit_factors;
use crate::qcore::schedule::{propagator, Schedule};
use crate::qcore::space::{Factor, HilbertSpace};
use crate::qcore::state::{expectation_dense, DensityMatrix, PureState, QState};
use crate::qcore::{op_norm, DEFAULT_TOL};
use crate::{c, par, CMat, CVec, C64, I, ONE, ZERO};

/// Entangling gates per controlled Pauli-string gate.
pub const GATES_PER_CONTROLLED: usize = 4;

/// Gates needed for an n-time correlator when each free-evolution segment
/// costs `q` gates: `(m + q) n − q` with `m` = [`GATES_PER_CONTROLLED`].
pub fn gate_count(n: usize, q: usize) -> usize {
    if n == 0 {
        return 0;
    }
    (GATES_PER_CONTROLLED + q) * n - q
}

/// Fixed ancilla conventions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AncillaLayout;

impl AncillaLayout {
    /// The probe is the leftmost factor of the joint space.
    pub const ANCILLA_INDEX: usize = 0;
    /// Controlled gates fire on `|g⟩` (computational index 1).
    pub const CONTROL_LEVEL: usize = 1;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShotPlan {
    pub shots: u64,
    pub master_seed: u64,
}

impl ShotPlan {
    pub fn new(shots: u64, master_seed: u64) -> Result<Self> {
        if shots == 0 {
            return invalid("shots must be at least 1");
        }
        Ok(Self { shots, master_seed })
    }

    /// `⌈4(1 + c)/δ²⌉` shots, enough for `|error| ≤ δ` with probability
    /// at least `1 − e^{−c}`.
    pub fn for_accuracy(delta: f64, c_conf: f64, master_seed: u64) -> Result<Self> {
        if !(delta > 0.0) || c_conf < 0.0 {
            return invalid("need delta > 0 and c >= 0");
        }
        Self::new((4.0 * (1.0 + c_conf) / (delta * delta)).ceil() as u64, master_seed)
    }

    /// Shots in each of the σx and σy batches.
    pub fn per_batch(&self) -> u64 {
        self.shots.div_ceil(2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AncillaMode {
    ExactExpectation,
    Sampled(ShotPlan),
}

#[derive(Clone, Debug)]
pub struct CorrelationSpec {
    pub evolution: Schedule,
    pub times: Vec<f64>,
    pub operators: Vec<OperatorSum>,
    pub initial: QState,
    /// Integrator tolerance for time-dependent evolutions.
    pub tol: f64,
}

impl CorrelationSpec {
    /// Times must be nondecreasing.
    pub fn new(evolution: Schedule, times: Vec<f64>, operators: Vec<OperatorSum>, initial: QState) -> Result<Self> {
        if times.windows(2).any(|w| w[1] < w[0]) {
            return invalid("correlation times must be nondecreasing");
        }
        Self::unordered(evolution, times, operators, initial)
    }

    /// Arbitrary time order; the protocol then steps backward where needed.
    pub fn unordered(
        evolution: Schedule,
        times: Vec<f64>,
        operators: Vec<OperatorSum>,
        initial: QState,
    ) -> Result<Self> {
        if times.is_empty() {
            return invalid("a correlator needs at least one operator");
        }
        if times.len() != operators.len() {
            return invalid(format!("{} times for {} operators", times.len(), operators.len()));
        }
        let sys = evolution.space().clone();
        initial.space().check_same(&sys)?;
        for o in &operators {
            o.space().check_same(&sys)?;
        }
        Ok(Self {
            evolution,
            times,
            operators,
            initial,
            tol: DEFAULT_TOL,
        })
    }

    pub fn system(&self) -> &HilbertSpace {
        self.evolution.space()
    }

    pub fn n(&self) -> usize {
        self.times.len()
    }
}

/// Oracle: apply `U(t_k;0)† O_k U(t_k;0)` products directly to the state.
pub fn correlation_exact(spec: &CorrelationSpec) -> Result<C64> {
    let us: Vec<CMat> = spec
        .times
        .iter()
        .map(|&t| propagator(&spec.evolution, 0.0, t, spec.tol))
        .collect::<Result<_>>()?;
    let ops: Vec<CMat> = spec.operators.iter().map(|o| o.to_dense()).collect::<Result<_>>()?;
    match &spec.initial {
        QState::Pure(p) => {
            let mut v = p.amplitudes().clone();
            for (u, o) in us.iter().zip(&ops) {
                v = u.ad_mul(&(o * (u * v)));
            }
            Ok(p.amplitudes().dotc(&v))
        }
        QState::Mixed(r) => {
            let mut x = r.matrix().clone();
            for (u, o) in us.iter().zip(&ops) {
                x = u.ad_mul(&(o * (u * x)));
            }
            Ok(x.trace())
        }
    }
}

/// Boson part of an expanded operator term.
#[derive(Clone, Copy, Debug, PartialEq)]
enum BosonPart {
    Identity,
    /// `(a + a†)` on one bosonic site: needs the derivative protocol.
    Quadrature,
}

#[derive(Clone, Debug)]
struct ExpandedTerm {
    coeff: C64,
    /// Dense Hermitian operator on the system.
    op: CMat,
    kind: BosonPart,
    /// `exp(−iπ/2 · op) = −i op` for Pauli-only terms.
    gate: Option<CMat>,
}

/// An operator expanded once into probe-controllable terms, reusable across
/// many correlators with different times.
#[derive(Clone, Debug)]
pub struct PreparedOperator {
    terms: Vec<ExpandedTerm>,
}

impl PreparedOperator {
    pub fn new(op: &OperatorSum) -> Result<Self> {
        Ok(Self { terms: expand(op)? })
    }

    /// Number of controlled-gate variants (Pauli terms) in the expansion.
    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    /// Whether some term carries an `(a + a†)` factor.
    pub fn needs_derivative(&self) -> bool {
        self.terms.iter().any(|t| t.kind == BosonPart::Quadrature)
    }
}

/// Split an operator into `coeff · (Pauli string ⊗ boson part)` terms.
fn expand(op: &OperatorSum) -> Result<Vec<ExpandedTerm>> {
    let space = op.space();
    let qubit_sites: Vec<usize> = (0..space.n_factors())
        .filter(|&k| space.factors()[k] == Factor::Qubit)
        .collect();
    let boson_sites = space.boson_sites();
    let mut out = Vec::new();
    for (coeff, ps, bos) in expand_qubit_factors(op)? {
        let mut quad = None;
        for (j, b) in bos.iter().enumerate() {
            match b {
                BosonOp::I => {}
                BosonOp::X if quad.is_none() => quad = Some(boson_sites[j]),
                other => {
                    return Err(Error::Unsupported(format!(
                        "{other:?} on a bosonic site; only identity or a single (a + a†) factor is supported"
                    )))
                }
            }
        }
        let mut prims: Vec<(usize, Prim)> = qubit_sites
            .iter()
            .zip(ps.factors())
            .map(|(&s, p)| (s, Prim::Q(p.qubit_op())))
            .collect();
        if let Some(site) = quad {
            prims.push((site, Prim::B(BosonOp::X)));
        }
        let m = OperatorSum::term(space, ONE, &prims)?.to_dense()?;
        let gate = quad.is_none().then(|| pauli_gate(&m, FRAC_PI_2));
        out.push(ExpandedTerm {
            coeff,
            op: m,
            kind: if quad.is_some() {
                BosonPart::Quadrature
            } else {
                BosonPart::Identity
            },
            gate,
        });
    }
    Ok(out)
}

/// Joint probe ⊗ system state, stored as the `|e⟩` and `|g⟩` blocks.
#[derive(Clone, Debug)]
enum Joint {
    Pure(CVec),
    Mixed(CMat),
}

struct Protocol<'a> {
    evolution: &'a Schedule,
    initial: &'a QState,
    times: &'a [f64],
    tol: f64,
    joint_space: HilbertSpace,
    sx: CMat,
    sy: CMat,
    /// Propagators between consecutive times (mixed states only).
    steps: Option<Vec<CMat>>,
}

impl<'a> Protocol<'a> {
    fn new(evolution: &'a Schedule, initial: &'a QState, times: &'a [f64], tol: f64) -> Result<Self> {
        let joint_space = evolution.space().prepend(Factor::Qubit)?;
        let sx =
            OperatorSum::single(&joint_space, AncillaLayout::ANCILLA_INDEX, Prim::Q(QubitOp::X), 1.0)?.to_dense()?;
        let sy =
            OperatorSum::single(&joint_space, AncillaLayout::ANCILLA_INDEX, Prim::Q(QubitOp::Y), 1.0)?.to_dense()?;
        let steps = match initial {
            QState::Mixed(_) => {
                let mut v = Vec::with_capacity(times.len());
                let mut prev = 0.0;
                for &t in times {
                    v.push(evolution.unitary(prev, t, tol)?);
                    prev = t;
                }
                Some(v)
            }
            QState::Pure(_) => None,
        };
        Ok(Self {
            evolution,
            initial,
            times,
            tol,
            joint_space,
            sx,
            sy,
            steps,
        })
    }

    fn prepare(&self) -> Joint {
        let h = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        match self.initial {
            QState::Pure(p) => {
                let plus = CVec::from_vec(vec![h, h]);
                Joint::Pure(plus.kronecker(p.amplitudes()))
            }
            QState::Mixed(r) => {
                let plus = CMat::from_element(2, 2, c(0.5, 0.0));
                Joint::Mixed(plus.kronecker(r.matrix()))
            }
        }
    }

    /// Run the interleaved sequence; `gates[k]` acts on the `|g⟩` branch.
    /// Returns `(⟨σx⟩, ⟨σy⟩)` of the probe.
    fn run(&self, gates: &[&CMat]) -> Result<(f64, f64)> {
        let d = self.evolution.space().dim();
        let mut joint = self.prepare();
        let mut prev = 0.0;
        for (k, (&t, &g)) in self.times.iter().zip(gates).enumerate() {
            match &mut joint {
                Joint::Pure(v) => {
                    let e = v.rows(0, d).clone_owned();
                    let gb = v.rows(d, d).clone_owned();
                    let e2 = self.evolution.propagate_vec(&e, prev, t, self.tol)?;
                    let g2 = g * self.evolution.propagate_vec(&gb, prev, t, self.tol)?;
                    v.rows_mut(0, d).copy_from(&e2);
                    v.rows_mut(d, d).copy_from(&g2);
                }
                Joint::Mixed(m) => {
                    let u = &self.steps.as_ref().expect("mixed protocol has steps")[k];
                    let mut full = CMat::zeros(2 * d, 2 * d);
                    full.view_mut((0, 0), (d, d)).copy_from(u);
                    full.view_mut((d, d), (d, d)).copy_from(&(g * u));
                    *m = &full * &*m * full.adjoint();
                }
            }
            prev = t;
        }
        let st = match joint {
            Joint::Pure(v) => QState::Pure(PureState::new_unchecked(&self.joint_space, v)?),
            Joint::Mixed(m) => QState::Mixed(DensityMatrix::new_unchecked(&self.joint_space, m)?),
        };
        let x = expectation_dense(&st, &self.sx)?;
        let y = expectation_dense(&st, &self.sy)?;
        Ok((x.re, y.re))
    }
}

/// Index tuples of the cartesian product of term lists.
fn combos(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &s in sizes {
        let mut next = Vec::with_capacity(out.len() * s);
        for v in &out {
            for j in 0..s {
                let mut w = v.clone();
                w.push(j);
                next.push(w);
            }
        }
        out = next;
    }
    out
}

/// `exp(−iθO) = cos θ − i sin θ O` for an involution `O`.
fn pauli_gate(o: &CMat, theta: f64) -> CMat {
    let d = o.nrows();
    CMat::identity(d, d) * c(theta.cos(), 0.0) - o * c(0.0, theta.sin())
}

fn sample_mean<R: Rng>(rng: &mut R, expectation: f64, shots: u64) -> f64 {
    let p_plus = ((1.0 + expectation) / 2.0).clamp(0.0, 1.0);
    let mut plus = 0u64;
    for _ in 0..shots {
        if rng.random::<f64>() < p_plus {
            plus += 1;
        }
    }
    (2.0 * plus as f64 - shots as f64) / shots as f64
}

/// Correlator through the probe-qubit protocol.
///
/// Operators are expanded into Pauli strings (bosonic factors must be the
/// identity) and the correlator is the multilinear sum of one protocol run
/// per term combination. In sampled mode each run draws `⌈shots/2⌉`
/// σx outcomes and as many σy outcomes; shot `s` of run `r` uses the stream
/// keyed by `(master_seed, r, batch)` at position `s`.
pub fn correlation_ancilla(spec: &CorrelationSpec, mode: AncillaMode) -> Result<C64> {
    let prepared: Vec<PreparedOperator> = spec
        .operators
        .iter()
        .map(PreparedOperator::new)
        .collect::<Result<_>>()?;
    let refs: Vec<&PreparedOperator> = prepared.iter().collect();
    correlation_prepared(&spec.evolution, &spec.initial, &spec.times, &refs, spec.tol, mode)
}

/// [`correlation_ancilla`] on pre-expanded operators; `times` may be in any
/// order and the state is taken at time 0.
pub fn correlation_prepared(
    evolution: &Schedule,
    initial: &QState,
    times: &[f64],
    ops: &[&PreparedOperator],
    tol: f64,
    mode: AncillaMode,
) -> Result<C64> {
    if times.is_empty() || times.len() != ops.len() {
        return invalid(format!("{} times for {} operators", times.len(), ops.len()));
    }
    initial.space().check_same(evolution.space())?;
    if ops.iter().any(|o| o.needs_derivative()) {
        return Err(Error::Unsupported(
            "(a + a†) factors need the derivative protocol (correlation_bosonic)".into(),
        ));
    }
    if ops.iter().any(|o| o.terms.is_empty()) {
        return Ok(ZERO);
    }
    let proto = Protocol::new(evolution, initial, times, tol)?;
    let sizes: Vec<usize> = ops.iter().map(|o| o.terms.len()).collect();
    let correction = I.powi(ops.len() as i32);
    let mut total = ZERO;
    for (r, combo) in combos(&sizes).into_iter().enumerate() {
        let mut coeff = ONE;
        let mut gates = Vec::with_capacity(combo.len());
        for (k, &j) in combo.iter().enumerate() {
            let t = &ops[k].terms[j];
            coeff *= t.coeff;
            gates.push(t.gate.as_ref().expect("Pauli-only term has a gate"));
        }
        let (x, y) = proto.run(&gates)?;
        let (x, y) = match mode {
            AncillaMode::ExactExpectation => (x, y),
            AncillaMode::Sampled(plan) => {
                let m = plan.per_batch();
                let mut rx = par::keyed_rng(plan.master_seed, &[r as u64, 0]);
                let mut ry = par::keyed_rng(plan.master_seed, &[r as u64, 1]);
                (sample_mean(&mut rx, x, m), sample_mean(&mut ry, y, m))
            }
        };
        total += coeff * correction * c(x, y);
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BosonicOptions {
    /// Finite-difference step in gate angle (rad).
    pub h: f64,
    /// Apply one Richardson level `(4 D(h/2) − D(h)) / 3`.
    pub richardson: bool,
}

impl Default for BosonicOptions {
    fn default() -> Self {
        Self {
            h: 1e-3,
            richardson: true,
        }
    }
}

/// Correlator with spin-boson operators `P ⊗ (a + a†)`.
///
/// Gates for such operators are `exp(−iθ P⊗(a+a†))` and the signal is
/// differentiated in θ at 0 by nested central differences; Pauli-only
/// operators keep θ = π/2.
pub fn correlation_bosonic(spec: &CorrelationSpec, opts: BosonicOptions) -> Result<C64> {
    if !(opts.h > 0.0) || !opts.h.is_finite() {
        return invalid("derivative step must be positive");
    }
    let expanded: Vec<Vec<ExpandedTerm>> = spec.operators.iter().map(expand).collect::<Result<_>>()?;
    if expanded.iter().any(|e| e.is_empty()) {
        return Ok(ZERO);
    }
    let proto = Protocol::new(&spec.evolution, &spec.initial, &spec.times, spec.tol)?;
    let sizes: Vec<usize> = expanded.iter().map(|e| e.len()).collect();
    let correction = I.powi(spec.n() as i32);
    let mut total = ZERO;
    for combo in combos(&sizes) {
        let terms: Vec<&ExpandedTerm> = combo.iter().enumerate().map(|(k, &j)| &expanded[k][j]).collect();
        let coeff: C64 = terms.iter().map(|t| t.coeff).product();
        let eigs: Vec<Option<HermitianEig>> = terms
            .iter()
            .map(|t| match t.kind {
                BosonPart::Quadrature => HermitianEig::new(&t.op).map(Some),
                BosonPart::Identity => Ok(None),
            })
            .collect::<Result<_>>()?;
        let flagged: Vec<usize> = (0..terms.len()).filter(|&k| eigs[k].is_some()).collect();
        let signal = |h: f64| -> Result<C64> {
            let f = flagged.len();
            let mut acc = ZERO;
            for signs in 0..(1usize << f) {
                let mut sgn = 1.0;
                let mut gates = Vec::with_capacity(terms.len());
                let mut fi = 0;
                for (k, t) in terms.iter().enumerate() {
                    match &eigs[k] {
                        Some(e) => {
                            let s = if (signs >> fi) & 1 == 1 { -1.0 } else { 1.0 };
                            sgn *= s;
                            fi += 1;
                            gates.push(e.propagator(s * h));
                        }
                        None => gates.push(t.gate.clone().expect("Pauli-only term has a gate")),
                    }
                }
                let refs: Vec<&CMat> = gates.iter().collect();
                let (x, y) = proto.run(&refs)?;
                acc += c(x, y) * sgn;
            }
            Ok(acc / c((2.0 * h).powi(f as i32), 0.0))
        };
        let d = if flagged.is_empty() {
            signal(opts.h)?
        } else if opts.richardson {
            let h2 = opts.h / 2.0;
            if h2 < 1e-8 {
                return Err(Error::InvalidArgument(format!(
                    "derivative step {} underflows for Richardson halving",
                    opts.h
                )));
            }
            (signal(h2)? * c(4.0, 0.0) - signal(opts.h)?) / c(3.0, 0.0)
        } else {
            if opts.h < 1e-8 {
                return Err(Error::InvalidArgument(format!("derivative step {} underflows", opts.h)));
            }
            signal(opts.h)?
        };
        total += coeff * correction * d;
    }
    Ok(total)
}

/// Exact-expectation correlator choosing the plain or derivative protocol.
pub fn correlation_protocol(spec: &CorrelationSpec) -> Result<C64> {
    match correlation_ancilla(spec, AncillaMode::ExactExpectation) {
        Err(Error::Unsupported(_)) => correlation_bosonic(spec, BosonicOptions::default()),
        other => other,
    }
}

/// One fermionic ladder operator at a time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FermionOp {
    pub mode: usize,
    pub dagger: bool,
    pub time: f64,
}

/// Jordan–Wigner image of `b_p` or `b_p†` on an all-qubit register.
///
/// Occupied is `|e⟩` and `b_p† = Π_{q<p} (−σz_q) σ+_p`, which reproduces the
/// usual Fock-space sign `(−1)^{occupied modes before p}`.
pub fn jordan_wigner(space: &HilbertSpace, mode: usize, dagger: bool) -> Result<OperatorSum> {
    if !space.is_qubits_only() {
        return Err(Error::Unsupported("Jordan–Wigner needs an all-qubit register".into()));
    }
    if mode >= space.n_factors() {
        return Err(Error::InvalidArgument(format!(
            "mode {mode} outside a {}-qubit register",
            space.n_factors()
        )));
    }
    let mut sites: Vec<(usize, Prim)> = (0..mode).map(|q| (q, Prim::Q(QubitOp::Z))).collect();
    sites.push((
        mode,
        Prim::Q(if dagger {
            QubitOp::SigmaPlus
        } else {
            QubitOp::SigmaMinus
        }),
    ));
    let sign = if mode.is_multiple_of(2) { 1.0 } else { -1.0 };
    OperatorSum::term(space, c(sign, 0.0), &sites)
}

/// Fermionic correlator with operators in written order: `ops = [b†_2(t), b_1(0)]`
/// means `⟨b†_2(t) b_1(0)⟩`. Each ladder operator expands into σx/σy strings
/// and the result sums probe-qubit runs.
pub fn correlation_fermionic(
    ops: &[FermionOp],
    evolution: &Schedule,
    initial: &QState,
    mode: AncillaMode,
) -> Result<C64> {
    let space = evolution.space();
    let operators: Vec<OperatorSum> = ops
        .iter()
        .rev()
        .map(|o| jordan_wigner(space, o.mode, o.dagger))
        .collect::<Result<_>>()?;
    let spec = CorrelationSpec::unordered(
        evolution.clone(),
        ops.iter().rev().map(|o| o.time).collect(),
        operators,
        initial.clone(),
    )?;
    correlation_ancilla(&spec, mode)
}

fn check_hermitian(op: &OperatorSum, name: &str) -> Result<()> {
    let dev = hermitian_deviation(&op.to_dense()?);
    if dev > 1e-10 {
        return invalid(format!("{name} must be Hermitian (deviation {dev:e})"));
    }
    Ok(())
}

/// Kubo response `φ(τ) = i⟨[B(τ), A(0)]⟩` on a grid, from the two operator
/// orderings measured through the probe protocol.
pub fn response_function(
    h0: &Schedule,
    a: &OperatorSum,
    b: &OperatorSum,
    state: &QState,
    t_grid: &[f64],
) -> Result<Vec<f64>> {
    check_hermitian(a, "A")?;
    check_hermitian(b, "B")?;
    let vals = par::map_slice(t_grid, |&tau| -> Result<f64> {
        let ba = CorrelationSpec::unordered(h0.clone(), vec![0.0, tau], vec![a.clone(), b.clone()], state.clone())?;
        let ab = CorrelationSpec::unordered(h0.clone(), vec![tau, 0.0], vec![b.clone(), a.clone()], state.clone())?;
        let phi = I * (correlation_protocol(&ba)? - correlation_protocol(&ab)?);
        if phi.im.abs() > 1e-8 {
            return Err(Error::Invariant(format!(
                "response function has imaginary part {:e}",
                phi.im
            )));
        }
        Ok(phi.re)
    });
    vals.into_iter().collect()
}

/// `χ(ω) = ∫_0^t φ(τ) e^{−iωτ} dτ` by the trapezoid rule over the grid
/// points inside the window.
pub fn susceptibility(t_grid: &[f64], phi: &[f64], omega: f64, window: f64) -> Result<C64> {
    if t_grid.is_empty() || phi.is_empty() {
        return invalid("empty response grid");
    }
    if t_grid.len() != phi.len() {
        return invalid("grid and samples differ in length");
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("response grid must be strictly increasing");
    }
    let pts: Vec<(f64, f64)> = t_grid
        .iter()
        .zip(phi)
        .filter(|(t, _)| **t >= 0.0 && **t <= window * (1.0 + 1e-12))
        .map(|(t, p)| (*t, *p))
        .collect();
    let mut acc = ZERO;
    for w in pts.windows(2) {
        let dt = w[1].0 - w[0].0;
        if (omega * dt).abs() >= std::f64::consts::PI {
            return invalid(format!("grid too coarse for ω = {omega}: ω·dt = {}", omega * dt));
        }
        let f0 = C64::from_polar(w[0].1, -omega * w[0].0);
        let f1 = C64::from_polar(1.0, -omega * w[1].0) * w[1].1;
        acc += (f0 + f1) * c(dt / 2.0, 0.0);
    }
    Ok(acc)
}

/// Multi-frequency response: `∫ χ(ω) dω` over `[ω_lo, ω_hi]` (trapezoid,
/// `n` panels).
pub fn susceptibility_band(
    t_grid: &[f64],
    phi: &[f64],
    omega_lo: f64,
    omega_hi: f64,
    window: f64,
    n: usize,
) -> Result<C64> {
    if n == 0 || !(omega_hi > omega_lo) {
        return invalid("band needs omega_hi > omega_lo and n >= 1");
    }
    let dw = (omega_hi - omega_lo) / n as f64;
    let mut acc = ZERO;
    for k in 0..=n {
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        acc += susceptibility(t_grid, phi, omega_lo + k as f64 * dw, window)? * c(w * dw, 0.0);
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearResponse {
    /// First-order prediction `Re(f e^{iωt} χ(ω))`.
    pub predicted: f64,
    /// Exact shift of `⟨B(t)⟩` under `H0 − f cos(ωs) A`.
    pub exact: f64,
}

/// Compare the Kubo prediction with an exact perturbed evolution.
///
/// The state must be stationary under the constant `h0`.
#[allow(clippy::too_many_arguments)]
pub fn linear_response_check(
    h0: &Schedule,
    a: &OperatorSum,
    b: &OperatorSum,
    state: &QState,
    f: f64,
    omega: f64,
    t: f64,
    n_grid: usize,
) -> Result<LinearResponse> {
    let h = h0
        .constant_matrix()
        .ok_or_else(|| Error::InvalidArgument("linear response check needs a constant H0".into()))?
        .clone();
    let rho = state.to_density();
    let comm = &h * rho.matrix() - rho.matrix() * &h;
    let cn = op_norm(&comm);
    if cn > 1e-10 {
        return invalid(format!("state is not stationary under H0 (‖[H0, ρ]‖ = {cn:e})"));
    }
    if n_grid < 2 || !(t > 0.0) {
        return invalid("need t > 0 and at least two grid points");
    }
    let grid: Vec<f64> = (0..n_grid).map(|k| t * k as f64 / (n_grid - 1) as f64).collect();
    let phi = response_function(h0, a, b, state, &grid)?;
    let chi = susceptibility(&grid, &phi, omega, t)?;
    let predicted = (C64::from_polar(f, omega * t) * chi).re;

    let am = a.to_dense()?;
    let bm = b.to_dense()?;
    let space = h0.space().clone();
    let pert = Schedule::time_dependent(
        &space,
        std::sync::Arc::new(move |s: f64| &h - &am * c(f * (omega * s).cos(), 0.0)),
    );
    let tight = 1e-12;
    let with = crate::qcore::evolve(state, &pert, 0.0, t, tight)?.state;
    let without = crate::qcore::evolve(state, h0, 0.0, t, tight)?.state;
    let exact = expectation_dense(&with, &bm)?.re - expectation_dense(&without, &bm)?.re;
    Ok(LinearResponse { predicted, exact })
}
