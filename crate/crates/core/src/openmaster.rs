//! Open-system dynamics from unitary resources.
//!
//! The Lindblad solution is expanded in the dissipator around the unitary
//! flow, `ρ = Σ_n ρ_n`, where `ρ_n` is an n-fold time-ordered integral of
//! dissipators interleaved with unitary propagation. Each order becomes a sum
//! of multi-time correlators of the jump operators, which the probe-qubit
//! protocol in [`crate::timecorr`] can measure. This module holds the exact
//! oracle, both evaluation paths for the integrand, quadrature and
//! single-shot Monte Carlo integration, and the error bounds.
//!
//! Superoperators use column stacking: `vec(A X B) = (Bᵀ ⊗ A) vec X`.

use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::qcore::expm::expm;
use crate::qcore::ode::{dp45, OdeOptions};
use crate::qcore::ops::{hermitian_deviation, OperatorSum};
use crate::qcore::pauli::{pauli_decompose, pauli_decompose_dense};
use crate::qcore::schedule::Schedule;
use crate::qcore::space::HilbertSpace;
use crate::qcore::state::{DensityMatrix, QState};
use crate::qcore::{op_norm, DEFAULT_TOL};
use crate::timecorr::{correlation_prepared, AncillaMode, PreparedOperator, ShotPlan};
use crate::{c, par, CMat, CVec, ZERO};

/// Highest order [`reconstruct`] accepts.
pub const MAX_ORDER: usize = 6;
/// Highest order integrated by tensor Gauss–Legendre.
pub const MAX_QUADRATURE_ORDER: usize = 3;
/// Points per dimension of the simplex quadrature.
pub const QUADRATURE_POINTS: usize = 16;
/// Interior samples used to approximate `sup |γ_i(s)|`.
pub const RATE_GRID: usize = 1024;
/// Largest superoperator (rows) handled by a dense exponential.
const DENSE_SUPEROP_MAX: usize = 1024;

pub type RateFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Rate {
    Constant(f64),
    Function(RateFn),
}

impl Rate {
    pub fn at(&self, s: f64) -> f64 {
        match self {
            Rate::Constant(g) => *g,
            Rate::Function(f) => f(s),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Rate::Constant(_))
    }
}

impl fmt::Debug for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rate::Constant(g) => write!(f, "Constant({g})"),
            Rate::Function(_) => f.write_str("Function(..)"),
        }
    }
}

/// Sign of a rate over the sampled window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignPattern {
    Zero,
    NonNegative,
    NonPositive,
    /// Changes sign: a non-Markovian channel.
    Mixed,
}

#[derive(Clone, Debug)]
pub struct Channel {
    op: OperatorSum,
    l: CMat,
    ldl: CMat,
    rate: Rate,
    /// `‖L_raw‖²`, folded into the rate.
    scale: f64,
}

impl Channel {
    /// Jump operator rescaled to unit operator norm.
    pub fn operator(&self) -> &OperatorSum {
        &self.op
    }

    pub fn matrix(&self) -> &CMat {
        &self.l
    }

    /// Effective rate `‖L_raw‖² γ_raw(s)` paired with the unit-norm operator.
    pub fn gamma(&self, s: f64) -> f64 {
        self.scale * self.rate.at(s)
    }

    pub fn norm_factor(&self) -> f64 {
        self.scale
    }

    /// `L ξ L† − ½{L†L, ξ}` without the rate.
    fn apply(&self, xi: &CMat) -> CMat {
        &self.l * xi * self.l.adjoint() - (&self.ldl * xi + xi * &self.ldl) * c(0.5, 0.0)
    }

    /// Heisenberg adjoint `L† X L − ½{L†L, X}`.
    fn apply_adjoint(&self, x: &CMat) -> CMat {
        self.l.adjoint() * x * &self.l - (&self.ldl * x + x * &self.ldl) * c(0.5, 0.0)
    }
}

#[derive(Clone, Debug)]
pub struct LindbladModel {
    h: Schedule,
    channels: Vec<Channel>,
}

/// `n + 2` evenly spaced points on `[0, t]`.
fn grid(t: f64, interior: usize) -> Vec<f64> {
    let m = interior + 1;
    (0..=m).map(|k| t * k as f64 / m as f64).collect()
}

impl LindbladModel {
    /// Jump operators are rescaled to unit operator norm and the rates absorb
    /// `‖L‖²`, which leaves the master equation unchanged.
    pub fn new(h: Schedule, channels: Vec<(OperatorSum, Rate)>) -> Result<Self> {
        let space = h.space().clone();
        let mut out = Vec::with_capacity(channels.len());
        for (op, rate) in channels {
            op.space().check_same(&space)?;
            let raw = op.to_dense()?;
            let norm = op_norm(&raw);
            if norm < 1e-14 {
                return invalid("jump operator has zero norm");
            }
            let op = op.scale(c(1.0 / norm, 0.0));
            let l = raw / c(norm, 0.0);
            let ldl = l.adjoint() * &l;
            out.push(Channel {
                op,
                l,
                ldl,
                rate,
                scale: norm * norm,
            });
        }
        Ok(Self { h, channels: out })
    }

    pub fn hamiltonian(&self) -> &Schedule {
        &self.h
    }

    pub fn space(&self) -> &HilbertSpace {
        self.h.space()
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn gamma(&self, i: usize, s: f64) -> f64 {
        self.channels[i].gamma(s)
    }

    /// `max_{i, s ∈ [0, t]} |γ_i(s)|`, sampled on [`RATE_GRID`] interior
    /// points plus the endpoints.
    pub fn gamma_bar(&self, t: f64) -> f64 {
        let pts = if self.channels.iter().all(|ch| ch.rate.is_constant()) {
            vec![0.0]
        } else {
            grid(t, RATE_GRID)
        };
        self.channels
            .iter()
            .flat_map(|ch| pts.iter().map(move |&s| ch.gamma(s).abs()))
            .fold(0.0, f64::max)
    }

    pub fn sign_pattern(&self, t: f64) -> Vec<SignPattern> {
        let pts = grid(t, RATE_GRID);
        self.channels
            .iter()
            .map(|ch| {
                let pos = pts.iter().any(|&s| ch.gamma(s) > 0.0);
                let neg = pts.iter().any(|&s| ch.gamma(s) < 0.0);
                match (pos, neg) {
                    (false, false) => SignPattern::Zero,
                    (true, false) => SignPattern::NonNegative,
                    (false, true) => SignPattern::NonPositive,
                    (true, true) => SignPattern::Mixed,
                }
            })
            .collect()
    }

    /// Constant Hamiltonian and constant rates.
    pub fn is_constant(&self) -> bool {
        self.h.constant_matrix().is_some() && self.channels.iter().all(|ch| ch.rate.is_constant())
    }

    /// Largest number of Pauli strings in a (unit-norm) jump operator.
    pub fn max_pauli_terms(&self) -> Result<usize> {
        self.channels
            .iter()
            .map(|ch| pauli_decompose(&ch.op).map(|d| d.len()))
            .try_fold(0, |m, r| r.map(|k| m.max(k)))
    }

    /// `L_D(s) ξ` summed over channels.
    pub fn dissipator(&self, s: f64, xi: &CMat) -> CMat {
        let d = xi.nrows();
        self.channels
            .iter()
            .fold(CMat::zeros(d, d), |acc, ch| acc + ch.apply(xi) * c(ch.gamma(s), 0.0))
    }

    /// `L_D(s)† X` summed over channels.
    pub fn dissipator_adjoint(&self, s: f64, x: &CMat) -> CMat {
        let d = x.nrows();
        self.channels.iter().fold(CMat::zeros(d, d), |acc, ch| {
            acc + ch.apply_adjoint(x) * c(ch.gamma(s), 0.0)
        })
    }

    fn hamiltonian_part(&self, s: f64, xi: &CMat) -> Result<CMat> {
        let h = self.h.at(s)?;
        Ok((&h * xi - xi * &h) * c(0.0, -1.0))
    }

    /// Column-stacked generator `−i[H(s), ·] + L_D(s)`.
    pub fn superoperator(&self, s: f64) -> Result<CMat> {
        let h = self.h.at(s)?;
        let mut sup = commutator_superop(&h);
        for ch in &self.channels {
            sup += dissipator_superop(ch) * c(ch.gamma(s), 0.0);
        }
        Ok(sup)
    }

    fn dissipator_superop(&self, s: f64) -> CMat {
        let d = self.space().dim();
        self.channels.iter().fold(CMat::zeros(d * d, d * d), |acc, ch| {
            acc + dissipator_superop(ch) * c(ch.gamma(s), 0.0)
        })
    }
}

/// `−i[H, ·]` as a column-stacked superoperator.
fn commutator_superop(h: &CMat) -> CMat {
    let d = h.nrows();
    let id = CMat::identity(d, d);
    (id.kronecker(h) - h.transpose().kronecker(&id)) * c(0.0, -1.0)
}

/// `−{Γ, ·}` as a column-stacked superoperator.
fn anticommutator_superop(g: &CMat) -> CMat {
    let d = g.nrows();
    let id = CMat::identity(d, d);
    -(id.kronecker(g) + g.transpose().kronecker(&id))
}

fn dissipator_superop(ch: &Channel) -> CMat {
    let d = ch.l.nrows();
    let id = CMat::identity(d, d);
    ch.l.map(|z| z.conj()).kronecker(&ch.l) - (id.kronecker(&ch.ldl) + ch.ldl.transpose().kronecker(&id)) * c(0.5, 0.0)
}

fn vec_of(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

fn mat_of(v: &CVec, d: usize) -> CMat {
    CMat::from_column_slice(d, d, v.as_slice())
}

/// Exact solution of the master equation at time `t`: one superoperator
/// exponential for constant models (`d² ≤ 1024`), adaptive integration
/// otherwise. Positivity is not enforced.
pub fn lindblad_exact(model: &LindbladModel, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    lindblad_exact_tol(model, rho0, t, DEFAULT_TOL)
}

pub fn lindblad_exact_tol(model: &LindbladModel, rho0: &DensityMatrix, t: f64, tol: f64) -> Result<DensityMatrix> {
    rho0.space().check_same(model.space())?;
    if t < 0.0 {
        return invalid("master equation is integrated forward only");
    }
    let d = model.space().dim();
    let v0 = vec_of(rho0.matrix());
    let v = if model.is_constant() && d * d <= DENSE_SUPEROP_MAX {
        expm(&(model.superoperator(0.0)? * c(t, 0.0))) * v0
    } else {
        let rhs = |s: f64, y: &CVec| -> CVec {
            let xi = mat_of(y, d);
            let h = model.h.at(s).expect("schedule covers the integration window");
            let r = (&h * &xi - &xi * &h) * c(0.0, -1.0) + model.dissipator(s, &xi);
            vec_of(&r)
        };
        dp45(rhs, 0.0, t, &v0, &OdeOptions::with_tol(tol))?.0
    };
    DensityMatrix::new_unchecked(model.space(), mat_of(&v, d))
}

/// A point of the order-n integration domain.
#[derive(Clone, Debug, PartialEq)]
pub struct DysonSample {
    /// Channel index per dissipator, outermost (latest) first.
    pub channels: Vec<usize>,
    /// `s_1 ≥ s_2 ≥ … ≥ s_n ≥ 0`.
    pub times: Vec<f64>,
}

impl DysonSample {
    pub fn new(channels: Vec<usize>, times: Vec<f64>) -> Result<Self> {
        if channels.len() != times.len() {
            return invalid("one channel per dissipator time");
        }
        if times.windows(2).any(|w| w[1] > w[0]) || times.iter().any(|&s| s < 0.0) {
            return invalid("dissipator times must be nonnegative and sorted descending");
        }
        Ok(Self { channels, times })
    }

    pub fn order(&self) -> usize {
        self.times.len()
    }

    /// Uniform draw from `[0, N)^n × V_n(t)`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize, n_channels: usize, t: f64) -> Self {
        let channels = (0..n).map(|_| rng.random_range(0..n_channels)).collect();
        let mut times: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * t).collect();
        times.sort_by(|a, b| b.total_cmp(a));
        Self { channels, times }
    }
}

/// How [`dyson_term`] evaluates the integrand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DysonPath {
    /// Schrödinger-picture chain of propagators and dissipators.
    #[default]
    Direct,
    /// Sum of probe-protocol correlators over the `3^n` Heisenberg words.
    Expanded,
    /// Both, erroring if they disagree by more than 1e−8.
    Both,
}

/// Pre-expanded operators for the correlator path.
struct ExpandedModel {
    o: PreparedOperator,
    l: Vec<PreparedOperator>,
    ldag: Vec<PreparedOperator>,
    ldl: Vec<PreparedOperator>,
}

impl ExpandedModel {
    fn new(model: &LindbladModel, o: &OperatorSum) -> Result<Self> {
        let mut l = Vec::new();
        let mut ldag = Vec::new();
        let mut ldl = Vec::new();
        for ch in &model.channels {
            l.push(PreparedOperator::new(&ch.op)?);
            ldag.push(PreparedOperator::new(&ch.op.adjoint())?);
            let sq = operator_from_dense(model.space(), &ch.ldl)?;
            ldl.push(PreparedOperator::new(&sq)?);
        }
        Ok(Self {
            o: PreparedOperator::new(o)?,
            l,
            ldag,
            ldl,
        })
    }
}

/// Pauli-sum operator equal to a dense matrix on an all-qubit register.
fn operator_from_dense(space: &HilbertSpace, m: &CMat) -> Result<OperatorSum> {
    if !space.is_qubits_only() {
        return Err(Error::Unsupported(
            "correlator expansion needs an all-qubit register".into(),
        ));
    }
    let n = space.n_qubits();
    let sites: Vec<usize> = (0..n).collect();
    let mut out = OperatorSum::zero(space);
    for (q, p) in pauli_decompose_dense(m, n)? {
        out = out.plus(&p.embed(space, &sites, q)?)?;
    }
    Ok(out)
}

/// Word of the correlator expansion: operators in written order with times,
/// and the scalar factor (rates times ±½ weights).
struct Word {
    ops: Vec<(WordOp, f64)>,
    coeff: f64,
}

#[derive(Clone, Copy)]
enum WordOp {
    O,
    L(usize),
    Ldag(usize),
    Ldl(usize),
}

/// Expand `A_ω(s)` into its `3^n` words by wrapping with
/// `L†(s) W L(s)`, `−½ W L†L(s)` and `−½ L†L(s) W`, innermost first.
fn words(model: &LindbladModel, t: f64, sample: &DysonSample) -> Vec<Word> {
    let mut out = vec![Word {
        ops: vec![(WordOp::O, t)],
        coeff: 1.0,
    }];
    for (&i, &s) in sample.channels.iter().zip(&sample.times) {
        let g = model.gamma(i, s);
        let mut next = Vec::with_capacity(out.len() * 3);
        for w in out {
            let mut sandwich = vec![(WordOp::Ldag(i), s)];
            sandwich.extend(w.ops.iter().copied());
            sandwich.push((WordOp::L(i), s));
            next.push(Word {
                ops: sandwich,
                coeff: w.coeff * g,
            });
            let mut right = w.ops.clone();
            right.push((WordOp::Ldl(i), s));
            next.push(Word {
                ops: right,
                coeff: -0.5 * w.coeff * g,
            });
            let mut left = vec![(WordOp::Ldl(i), s)];
            left.extend(w.ops.iter().copied());
            next.push(Word {
                ops: left,
                coeff: -0.5 * w.coeff * g,
            });
        }
        out = next;
    }
    out
}

fn expanded_value(
    model: &LindbladModel,
    ex: &ExpandedModel,
    rho0: &QState,
    t: f64,
    sample: &DysonSample,
    shots: Option<(u64, u64)>,
) -> Result<f64> {
    let mut total = ZERO;
    for (w_idx, w) in words(model, t, sample).into_iter().enumerate() {
        if w.coeff == 0.0 {
            continue;
        }
        // correlation_prepared takes the rightmost operator first
        let times: Vec<f64> = w.ops.iter().rev().map(|(_, s)| *s).collect();
        let ops: Vec<&PreparedOperator> = w
            .ops
            .iter()
            .rev()
            .map(|(op, _)| match *op {
                WordOp::O => &ex.o,
                WordOp::L(i) => &ex.l[i],
                WordOp::Ldag(i) => &ex.ldag[i],
                WordOp::Ldl(i) => &ex.ldl[i],
            })
            .collect();
        let mode = match shots {
            None => AncillaMode::ExactExpectation,
            Some((k, seed)) => AncillaMode::Sampled(ShotPlan::new(k, par::derive_seed(seed, &[w_idx as u64]))?),
        };
        let v = correlation_prepared(model.hamiltonian(), rho0, &times, &ops, DEFAULT_TOL, mode)?;
        total += v * c(w.coeff, 0.0);
    }
    Ok(total.re)
}

/// Schrödinger chain `U(t, s_1) D_1 U(s_1, s_2) … D_n U(s_n, 0) ρ0`; `pick`
/// chooses the dissipator applied at step k.
fn direct_chain(
    model: &LindbladModel,
    o: &CMat,
    rho0: &CMat,
    t: f64,
    times: &[f64],
    pick: impl Fn(usize, f64, &CMat) -> CMat,
) -> Result<f64> {
    let h = model.hamiltonian();
    let mut xi = rho0.clone();
    let mut prev = 0.0;
    for k in (0..times.len()).rev() {
        let s = times[k];
        let u = h.unitary(prev, s, DEFAULT_TOL)?;
        xi = pick(k, s, &(&u * xi * u.adjoint()));
        prev = s;
    }
    let u = h.unitary(prev, t, DEFAULT_TOL)?;
    xi = &u * xi * u.adjoint();
    Ok((o * xi).trace().re)
}

/// Integrand `⟨A_ω(s)⟩` of the order-n term for one channel word, including
/// the rates.
pub fn dyson_term(
    model: &LindbladModel,
    o: &OperatorSum,
    rho0: &QState,
    t: f64,
    sample: &DysonSample,
    path: DysonPath,
) -> Result<f64> {
    if sample.times.first().is_some_and(|&s1| s1 > t) {
        return invalid("dissipator times must not exceed t");
    }
    if sample.channels.iter().any(|&i| i >= model.n_channels()) {
        return invalid("channel index out of range");
    }
    let direct = || -> Result<f64> {
        let om = o.to_dense()?;
        direct_chain(model, &om, rho0.to_density().matrix(), t, &sample.times, |k, s, xi| {
            let ch = &model.channels[sample.channels[k]];
            ch.apply(xi) * c(ch.gamma(s), 0.0)
        })
    };
    let expanded = || -> Result<f64> {
        let ex = ExpandedModel::new(model, o)?;
        expanded_value(model, &ex, rho0, t, sample, None)
    };
    match path {
        DysonPath::Direct => direct(),
        DysonPath::Expanded => expanded(),
        DysonPath::Both => {
            let (a, b) = (direct()?, expanded()?);
            if (a - b).abs() > 1e-8 {
                return Err(Error::Tolerance(format!("direct {a} vs correlator expansion {b}")));
            }
            Ok(a)
        }
    }
}

/// Shot noise in Monte Carlo reconstruction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShotNoise {
    /// Exact integrand at every sampled point.
    Exact,
    /// Every correlator in the expansion estimated from `k` probe shots.
    Shots(u64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloPlan {
    /// `|Ω_n|` for orders `1..=K`; a single entry applies to all orders.
    pub samples: Vec<usize>,
    pub master_seed: u64,
    pub shot_noise: ShotNoise,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReconstructMode {
    Quadrature,
    MonteCarlo(MonteCarloPlan),
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrderTerm {
    pub order: usize,
    pub value: f64,
    /// Empirical standard error (Monte Carlo only).
    pub std_error: Option<f64>,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub estimate: f64,
    pub orders: Vec<OrderTerm>,
}

fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    // Golub–Welsch: nodes are eigenvalues of the Jacobi matrix
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = k as f64 / ((4 * k * k - 1) as f64).sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let eig = j.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], 2.0 * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    GL.get_or_init(|| gauss_legendre(QUADRATURE_POINTS))
}

/// Tensor Gauss–Legendre points on the simplex `t ≥ s_1 ≥ … ≥ s_n ≥ 0`,
/// as `(times, weight)` with the Jacobians folded into the weight.
fn simplex_rule(n: usize, t: f64) -> Vec<(Vec<f64>, f64)> {
    let (x, w) = gl16();
    let mut out = vec![(Vec::new(), 1.0)];
    for _ in 0..n {
        let mut next = Vec::with_capacity(out.len() * x.len());
        for (pts, wt) in &out {
            let upper = pts.last().copied().unwrap_or(t);
            for (xi, wi) in x.iter().zip(w) {
                let mut p = pts.clone();
                p.push(upper * (xi + 1.0) / 2.0);
                next.push((p, wt * wi * upper / 2.0));
            }
        }
        out = next;
    }
    out
}

/// `Tr[O ρ_n(t)]` by simplex quadrature, applying the total dissipator.
pub fn order_term_quadrature(model: &LindbladModel, o: &OperatorSum, rho0: &QState, t: f64, n: usize) -> Result<f64> {
    if n > MAX_QUADRATURE_ORDER {
        return invalid(format!("quadrature is limited to order {MAX_QUADRATURE_ORDER}"));
    }
    let om = o.to_dense()?;
    let r0 = rho0.to_density().into_matrix();
    let rule = simplex_rule(n, t);
    let vals = par::map_slice(&rule, |(pts, wt)| {
        direct_chain(model, &om, &r0, t, pts, |_, s, xi| model.dissipator(s, xi)).map(|v| v * wt)
    });
    vals.into_iter().sum()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[allow(clippy::too_many_arguments)]
fn order_term_monte_carlo(
    model: &LindbladModel,
    o: &OperatorSum,
    ex: Option<&ExpandedModel>,
    rho0: &QState,
    t: f64,
    n: usize,
    samples: usize,
    plan: &MonteCarloPlan,
) -> Result<OrderTerm> {
    if samples == 0 {
        return invalid(format!("no samples for order {n}"));
    }
    let nc = model.n_channels();
    let om = o.to_dense()?;
    let r0 = rho0.to_density().into_matrix();
    let vals: Vec<Result<f64>> = par::map_range(samples, |idx| {
        let mut rng = par::keyed_rng(plan.master_seed, &[n as u64, idx as u64]);
        let sample = DysonSample::random(&mut rng, n, nc, t);
        match plan.shot_noise {
            ShotNoise::Exact => direct_chain(model, &om, &r0, t, &sample.times, |k, s, xi| {
                let ch = &model.channels[sample.channels[k]];
                ch.apply(xi) * c(ch.gamma(s), 0.0)
            }),
            ShotNoise::Shots(k) => {
                let seed = rng.random::<u64>();
                expanded_value(
                    model,
                    ex.expect("expanded model prepared"),
                    rho0,
                    t,
                    &sample,
                    Some((k, seed)),
                )
            }
        }
    });
    let vals: Vec<f64> = vals.into_iter().collect::<Result<_>>()?;
    let m = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / m;
    let var = if vals.len() > 1 {
        vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    let scale = (nc as f64 * t).powi(n as i32) / factorial(n);
    Ok(OrderTerm {
        order: n,
        value: scale * mean,
        std_error: Some(scale * (var / m).sqrt()),
        samples,
    })
}

/// `Tr[O ρ̃_K(t)]` from the unitary term plus orders `1..=K`.
pub fn reconstruct(
    model: &LindbladModel,
    o: &OperatorSum,
    rho0: &QState,
    t: f64,
    k: usize,
    mode: &ReconstructMode,
) -> Result<Reconstruction> {
    if k > MAX_ORDER {
        return invalid(format!("order {k} exceeds the cost guard {MAX_ORDER}"));
    }
    if t < 0.0 {
        return invalid("t must be nonnegative");
    }
    rho0.space().check_same(model.space())?;
    o.space().check_same(model.space())?;
    let om = o.to_dense()?;
    let u = model.hamiltonian().unitary(0.0, t, DEFAULT_TOL)?;
    let r0 = rho0.to_density().into_matrix();
    let zeroth = (&om * &u * &r0 * u.adjoint()).trace().re;
    let mut orders = vec![OrderTerm {
        order: 0,
        value: zeroth,
        std_error: None,
        samples: 0,
    }];
    match mode {
        ReconstructMode::Quadrature => {
            if k > MAX_QUADRATURE_ORDER {
                return invalid(format!(
                    "quadrature is limited to order {MAX_QUADRATURE_ORDER}; use Monte Carlo"
                ));
            }
            for n in 1..=k {
                orders.push(OrderTerm {
                    order: n,
                    value: order_term_quadrature(model, o, rho0, t, n)?,
                    std_error: None,
                    samples: QUADRATURE_POINTS.pow(n as u32),
                });
            }
        }
        ReconstructMode::MonteCarlo(plan) => {
            if k > 0 && plan.samples.len() != 1 && plan.samples.len() != k {
                return invalid(format!("{} sample counts for {k} orders", plan.samples.len()));
            }
            let ex = match plan.shot_noise {
                ShotNoise::Shots(0) => return invalid("shots must be at least 1"),
                ShotNoise::Shots(_) => Some(ExpandedModel::new(model, o)?),
                ShotNoise::Exact => None,
            };
            for n in 1..=k {
                let m = if plan.samples.len() == 1 {
                    plan.samples[0]
                } else {
                    plan.samples[n - 1]
                };
                orders.push(order_term_monte_carlo(model, o, ex.as_ref(), rho0, t, n, m, plan)?);
            }
        }
    }
    Ok(Reconstruction {
        estimate: orders.iter().map(|o| o.value).sum(),
        orders,
    })
}

/// Solve `x_0' = A(s) x_0`, `x_k' = A(s) x_k + B(s) x_{k−1}` with
/// `x_0(0) = ρ0`, `x_k(0) = 0`; returns `x_0(t) … x_n(t)`.
fn hierarchy(
    d: usize,
    rho0: &CMat,
    t: f64,
    n: usize,
    constant: Option<(CMat, CMat)>,
    a: impl Fn(f64, &CMat) -> CMat + Sync,
    b: impl Fn(f64, &CMat) -> CMat + Sync,
) -> Result<Vec<CMat>> {
    let d2 = d * d;
    let size = (n + 1) * d2;
    let mut v0 = CVec::zeros(size);
    v0.rows_mut(0, d2).copy_from(&vec_of(rho0));
    let v = match constant {
        Some((sa, sb)) if size <= DENSE_SUPEROP_MAX => {
            let mut big = CMat::zeros(size, size);
            for k in 0..=n {
                big.view_mut((k * d2, k * d2), (d2, d2)).copy_from(&sa);
                if k > 0 {
                    big.view_mut((k * d2, (k - 1) * d2), (d2, d2)).copy_from(&sb);
                }
            }
            expm(&(big * c(t, 0.0))) * v0
        }
        _ => {
            let rhs = |s: f64, y: &CVec| -> CVec {
                let mut out = CVec::zeros(size);
                let mut prev: Option<CMat> = None;
                for k in 0..=n {
                    let xk = CMat::from_column_slice(d, d, y.rows(k * d2, d2).clone_owned().as_slice());
                    let mut r = a(s, &xk);
                    if let Some(p) = &prev {
                        r += b(s, p);
                    }
                    out.rows_mut(k * d2, d2).copy_from(&vec_of(&r));
                    prev = Some(xk);
                }
                out
            };
            dp45(rhs, 0.0, t, &v0, &OdeOptions::with_tol(DEFAULT_TOL))?.0
        }
    };
    Ok((0..=n)
        .map(|k| CMat::from_column_slice(d, d, v.rows(k * d2, d2).clone_owned().as_slice()))
        .collect())
}

/// Series terms `ρ_0(t) … ρ_n(t)`.
pub fn series_terms(model: &LindbladModel, rho0: &DensityMatrix, t: f64, n: usize) -> Result<Vec<CMat>> {
    rho0.space().check_same(model.space())?;
    if t < 0.0 {
        return invalid("t must be nonnegative");
    }
    let d = model.space().dim();
    let constant = if model.is_constant() {
        let h = model.hamiltonian().constant_matrix().expect("constant model").clone();
        Some((commutator_superop(&h), model.dissipator_superop(0.0)))
    } else {
        None
    };
    hierarchy(
        d,
        rho0.matrix(),
        t,
        n,
        constant,
        |s, x| model.hamiltonian_part(s, x).expect("schedule covers the window"),
        |s, x| model.dissipator(s, x),
    )
}

/// Truncated series `ρ̃_n(t) = Σ_{k ≤ n} ρ_k(t)`.
pub fn truncated_state(model: &LindbladModel, rho0: &DensityMatrix, t: f64, n: usize) -> Result<CMat> {
    let terms = series_terms(model, rho0, t, n)?;
    let d = model.space().dim();
    Ok(terms.into_iter().fold(CMat::zeros(d, d), |a, b| a + b))
}

/// `D₁(ρ(t), ρ̃_n(t)) ≤ (2γ̄Nt)^{n+1} / (2(n+1)!)` for unit-norm jump operators.
pub fn truncation_bound(n: usize, t: f64, gamma_bar: f64, n_channels: usize) -> f64 {
    let x = 2.0 * gamma_bar * n_channels as f64 * t;
    x.powi(n as i32 + 1) / (2.0 * factorial(n + 1))
}

/// Smallest order `K = ⌈2eγ̄Nt + ln(1/(2ε′)) − 1⌉` (at least 0) whose
/// truncation error is below `ε′`.
pub fn truncation_order(eps: f64, t: f64, gamma_bar: f64, n_channels: usize) -> Result<usize> {
    if !(eps > 0.0) {
        return invalid("target error must be positive");
    }
    let k = 2.0 * std::f64::consts::E * gamma_bar * n_channels as f64 * t + (1.0 / (2.0 * eps)).ln() - 1.0;
    Ok(k.ceil().max(0.0) as usize)
}

/// `ceil` that treats values within 1e−9 (relative) of an integer as that
/// integer, so exact-arithmetic inputs are not bumped by roundoff.
fn snapped_ceil(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() <= 1e-9 * v.abs().max(1.0) {
        r
    } else {
        v.ceil()
    }
}

/// Single-shot samples `|Ω_n|` so that the order-n Monte Carlo estimate is
/// within `δ_n` with probability at least `1 − e^{−β}`:
/// `36 M_O² (2+β)/δ_n² · (2γ̄MNt)^{2n}/n!²`.
///
/// Requires `δ_n ≤ (2γ̄Nt)^n / n!`.
#[allow(clippy::too_many_arguments)]
pub fn sample_size_bound(
    delta: f64,
    beta: f64,
    n: usize,
    t: f64,
    n_channels: usize,
    m: usize,
    m_o: usize,
    gamma_bar: f64,
) -> Result<u64> {
    if !(delta > 0.0) || !(beta > 0.0) {
        return invalid("delta and beta must be positive");
    }
    let limit = (2.0 * gamma_bar * n_channels as f64 * t).powi(n as i32) / factorial(n);
    if delta > limit * (1.0 + 1e-12) {
        return invalid(format!("delta {delta} above the validity limit {limit}"));
    }
    let x = 2.0 * gamma_bar * m as f64 * n_channels as f64 * t;
    let v = 36.0 * (m_o * m_o) as f64 * (2.0 + beta) / (delta * delta) * x.powi(2 * n as i32) / factorial(n).powi(2);
    let v = snapped_ceil(v);
    if v >= u64::MAX as f64 {
        return Err(Error::InvalidArgument(format!("sample bound {v:e} overflows")));
    }
    Ok(v as u64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementBudget {
    /// Truncation order `K` for `ε′ = cε`.
    pub order: usize,
    /// `δ_n = (1 − c)ε/(K + 1)`.
    pub delta: f64,
    /// `|Ω_n|` per order; orders whose magnitude bound is already below
    /// `δ_n` need none.
    pub samples: Vec<u64>,
    /// `Σ_n 3^n |Ω_n|`.
    pub total: u128,
}

#[allow(clippy::too_many_arguments)]
pub fn measurement_budget(
    eps: f64,
    t: f64,
    gamma_bar: f64,
    n_channels: usize,
    m: usize,
    m_o: usize,
    beta: f64,
    c_split: f64,
) -> Result<MeasurementBudget> {
    if !(eps > 0.0 && eps < 1.0) {
        return invalid("target error must lie in (0, 1)");
    }
    if !(c_split > 0.0 && c_split < 1.0) {
        return invalid("error split c must lie in (0, 1)");
    }
    let k = truncation_order(c_split * eps, t, gamma_bar, n_channels)?;
    let delta = (1.0 - c_split) * eps / (k + 1) as f64;
    let mut samples = Vec::with_capacity(k + 1);
    let mut total: u128 = 0;
    for n in 0..=k {
        let limit = (2.0 * gamma_bar * n_channels as f64 * t).powi(n as i32) / factorial(n);
        let s = if n > 0 && delta > limit {
            0
        } else {
            sample_size_bound(delta, beta, n, t, n_channels, m, m_o, gamma_bar)?
        };
        samples.push(s);
        total += 3u128.pow(n as u32) * s as u128;
    }
    Ok(MeasurementBudget {
        order: k,
        delta,
        samples,
        total,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn total_measurements(
    eps: f64,
    t: f64,
    gamma_bar: f64,
    n_channels: usize,
    m: usize,
    m_o: usize,
    beta: f64,
    c_split: f64,
) -> Result<u128> {
    measurement_budget(eps, t, gamma_bar, n_channels, m, m_o, beta, c_split).map(|b| b.total)
}

/// Points used for the `(s, τ)` sup in [`observable_bound`].
const OBSERVABLE_TAU_GRID: usize = 64;

/// `D_O(ρ(t), ρ̃_n(t)) ≤ (sup‖L_D†Õ‖/‖O‖)(2γ̄N)^n t^{n+1}/(2(n+1)!)`, with
/// `Õ = O(τ)` the Heisenberg-rotated observable and the sup over sampled
/// `s, τ ∈ [0, t]`.
pub fn observable_bound(model: &LindbladModel, o: &OperatorSum, n: usize, t: f64) -> Result<f64> {
    let om = o.to_dense()?;
    let dev = hermitian_deviation(&om);
    if dev > 1e-10 {
        return invalid(format!("observable must be Hermitian (deviation {dev:e})"));
    }
    let on = op_norm(&om);
    if on == 0.0 {
        return Ok(0.0);
    }
    let h = model.hamiltonian();
    let taus = match h.constant_matrix() {
        Some(hm) if (hm * &om - &om * hm).norm() < 1e-12 => vec![0.0],
        _ => grid(t, OBSERVABLE_TAU_GRID),
    };
    let ss = if model.channels.iter().all(|ch| ch.rate.is_constant()) {
        vec![0.0]
    } else {
        grid(t, RATE_GRID)
    };
    let mut sup: f64 = 0.0;
    for &tau in &taus {
        let u = h.unitary(0.0, tau, DEFAULT_TOL)?;
        let ot = u.adjoint() * &om * &u;
        let parts: Vec<CMat> = model.channels.iter().map(|ch| ch.apply_adjoint(&ot)).collect();
        for &s in &ss {
            let d = ot.nrows();
            let tot = model
                .channels
                .iter()
                .zip(&parts)
                .fold(CMat::zeros(d, d), |acc, (ch, p)| acc + p * c(ch.gamma(s), 0.0));
            sup = sup.max(op_norm(&tot));
        }
    }
    let gb = model.gamma_bar(t);
    let nc = model.n_channels() as f64;
    Ok(sup / on * (2.0 * gb * nc).powi(n as i32) * t.powi(n as i32 + 1) / (2.0 * factorial(n + 1)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NonHermitianMode {
    Exact,
    /// Series in `−{Γ, ·}` truncated at this order.
    Order(usize),
}

#[derive(Clone, Debug)]
pub struct NonHermitianResult {
    pub rho: CMat,
    pub trace: f64,
    /// Trace-distance bound `(2‖Γ‖t)^{K+1}/(2(K+1)!)` for truncated runs.
    pub bound: Option<f64>,
}

/// Evolution under `J = H − iΓ`: `dρ/dt = −i[H, ρ] − {Γ, ρ}`.
pub fn nonhermitian_evolve(
    h: &OperatorSum,
    gamma: &OperatorSum,
    rho0: &DensityMatrix,
    t: f64,
    mode: NonHermitianMode,
) -> Result<NonHermitianResult> {
    h.space().check_same(rho0.space())?;
    gamma.space().check_same(rho0.space())?;
    let hm = h.to_dense()?;
    let gm = gamma.to_dense()?;
    for (m, name) in [(&hm, "H"), (&gm, "Γ")] {
        let dev = hermitian_deviation(m);
        if dev > 1e-10 {
            return invalid(format!("{name} must be Hermitian (deviation {dev:e})"));
        }
    }
    if t < 0.0 {
        return invalid("t must be nonnegative");
    }
    let d = hm.nrows();
    match mode {
        NonHermitianMode::Exact => {
            let j = &hm - &gm * c(0.0, 1.0);
            let v = expm(&(j * c(0.0, -t)));
            let rho = &v * rho0.matrix() * v.adjoint();
            let trace = rho.trace().re;
            let g_psd = gm.clone().symmetric_eigenvalues().iter().all(|&x| x >= -1e-12);
            if g_psd && trace > 1.0 + 1e-6 {
                return Err(Error::Invariant(format!("trace grew to {trace} although Γ ⪰ 0")));
            }
            Ok(NonHermitianResult {
                rho,
                trace,
                bound: None,
            })
        }
        NonHermitianMode::Order(k) => {
            let sa = commutator_superop(&hm);
            let sb = anticommutator_superop(&gm);
            let (hm2, gm2) = (hm.clone(), gm.clone());
            let terms = hierarchy(
                d,
                rho0.matrix(),
                t,
                k,
                Some((sa, sb)),
                move |_, x| (&hm2 * x - x * &hm2) * c(0.0, -1.0),
                move |_, x| -(&gm2 * x + x * &gm2),
            )?;
            let rho = terms.into_iter().fold(CMat::zeros(d, d), |a, b| a + b);
            let trace = rho.trace().re;
            let bound = (2.0 * op_norm(&gm) * t).powi(k as i32 + 1) / (2.0 * factorial(k + 1));
            Ok(NonHermitianResult {
                rho,
                trace,
                bound: Some(bound),
            })
        }
    }
}
