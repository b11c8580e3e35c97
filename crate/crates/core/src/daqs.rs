//! Digital-analog Trotterization.
//!
//! Two flavours: the Heisenberg chain from XY and XX analog blocks plus
//! collective y rotations (trapped ions), and the quantum Rabi / Dicke models
//! from Jaynes–Cummings steps interleaved with qubit flips (circuit QED).
//! Spins use the crate convention, `|↑⟩ = |e⟩` at index 0.

use nalgebra::DMatrix;

use crate::eqs::{apply_noise, rescale_expectation};
use crate::error::{invalid, Error, Result};
use crate::ionrabi::{model_space, FOCK_TAIL_LIMIT};
use crate::openmaster::{LindbladModel, Rate};
use crate::qcore::expm::HermitianEig;
use crate::qcore::metrics::op_norm;
use crate::qcore::ode::{dp45, OdeOptions};
use crate::qcore::ops::{BosonOp, OperatorSum, Prim, QubitOp};
use crate::qcore::schedule::Schedule;
use crate::qcore::space::HilbertSpace;
use crate::qcore::state::DensityMatrix;
use crate::{c, par, CMat, CVec, C64, I, ZERO};

/// Largest chain the dense Heisenberg builders accept.
pub const MAX_SPINS: usize = 12;

fn q(op: QubitOp) -> Prim {
    Prim::Q(op)
}

fn b(op: BosonOp) -> Prim {
    Prim::B(op)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CouplingGenerator {
    Explicit,
    PowerLaw { j: f64, alpha: f64 },
}

/// Symmetric spin-spin couplings `J_ij` with zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinCouplingMatrix {
    j: DMatrix<f64>,
    generator: CouplingGenerator,
}

impl SpinCouplingMatrix {
    pub fn explicit(j: DMatrix<f64>) -> Result<Self> {
        let n = j.nrows();
        if n < 2 || j.ncols() != n {
            return invalid("coupling matrix must be square with at least two spins");
        }
        for r in 0..n {
            if j[(r, r)] != 0.0 {
                return invalid("coupling matrix must have a zero diagonal");
            }
            for k in 0..r {
                if (j[(r, k)] - j[(k, r)]).abs() > 1e-12 * j[(r, k)].abs().max(1.0) {
                    return invalid("coupling matrix must be symmetric");
                }
            }
        }
        Ok(Self {
            j,
            generator: CouplingGenerator::Explicit,
        })
    }

    /// `J_ij = J / |i − j|^α`, with `J > 0` and `0 < α < 3`.
    pub fn power_law(n: usize, j: f64, alpha: f64) -> Result<Self> {
        if n < 2 {
            return invalid("need at least two spins");
        }
        if !(j > 0.0) {
            return invalid("power-law amplitude J must be positive");
        }
        if !(alpha > 0.0 && alpha < 3.0) {
            return invalid(format!("power-law exponent {alpha} outside (0, 3)"));
        }
        let m = DMatrix::from_fn(n, n, |r, k| {
            if r == k {
                0.0
            } else {
                j / (r.abs_diff(k) as f64).powf(alpha)
            }
        });
        Ok(Self {
            j: m,
            generator: CouplingGenerator::PowerLaw { j, alpha },
        })
    }

    pub fn uniform(n: usize, j: f64) -> Result<Self> {
        Self::explicit(DMatrix::from_fn(n, n, |r, k| if r == k { 0.0 } else { j }))
    }

    /// Keep only `|i − j| = 1` couplings.
    pub fn nearest_neighbour(&self) -> Self {
        let j = DMatrix::from_fn(self.n(), self.n(), |r, k| {
            if r.abs_diff(k) == 1 {
                self.j[(r, k)]
            } else {
                0.0
            }
        });
        Self {
            j,
            generator: CouplingGenerator::Explicit,
        }
    }

    pub fn n(&self) -> usize {
        self.j.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.j
    }

    pub fn generator(&self) -> CouplingGenerator {
        self.generator
    }

    /// Nonzero couplings `(i, j, J_ij)` with `i < j`, in lexicographic order.
    pub fn pairs(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for k in i + 1..n {
                if self.j[(i, k)] != 0.0 {
                    out.push((i, k, self.j[(i, k)]));
                }
            }
        }
        out
    }

    fn space(&self) -> Result<HilbertSpace> {
        if self.n() > MAX_SPINS {
            return Err(Error::DimensionCap {
                dim: 1 << self.n().min(62),
                cap: 1 << MAX_SPINS,
            });
        }
        HilbertSpace::qubits(self.n())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    XX,
    XY,
    ZZ,
}

fn pair_sum(j: &SpinCouplingMatrix, axes: &[QubitOp]) -> Result<OperatorSum> {
    let space = j.space()?;
    let mut h = OperatorSum::zero(&space);
    for (a, k, jak) in j.pairs() {
        for &ax in axes {
            h.push(c(jak, 0.0), &[(a, q(ax)), (k, q(ax))])?;
        }
    }
    Ok(h.assume_hermitian())
}

/// `Σ_{i<j} J_ij σ_i·σ_j`.
pub fn heisenberg(j: &SpinCouplingMatrix) -> Result<OperatorSum> {
    pair_sum(j, &[QubitOp::X, QubitOp::Y, QubitOp::Z])
}

pub fn analog_block(kind: BlockKind, j: &SpinCouplingMatrix) -> Result<OperatorSum> {
    match kind {
        BlockKind::XX => pair_sum(j, &[QubitOp::X]),
        BlockKind::XY => pair_sum(j, &[QubitOp::X, QubitOp::Y]),
        BlockKind::ZZ => pair_sum(j, &[QubitOp::Z]),
    }
}

/// Collective rotation `R_y(θ) = exp(−iθ Σ σ_y)`.
pub fn collective_ry(n: usize, theta: f64) -> CMat {
    let (cs, sn) = (theta.cos(), theta.sin());
    // exp(−iθσy) = cos θ − i sin θ σy.
    let one = CMat::from_row_slice(2, 2, &[c(cs, 0.0), c(-sn, 0.0), c(sn, 0.0), c(cs, 0.0)]);
    (1..n).fold(one.clone(), |acc, _| acc.kronecker(&one))
}

/// One entry of a Trotter step.
#[derive(Clone, Debug, PartialEq)]
pub enum BlockLabel {
    XX,
    XY,
    ZZ,
    Ry(f64),
    JcStep { dr: f64, dq: f64 },
    Flip,
    TwoQubitGate(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanNoise {
    /// Depolarizing fidelity per gate or block.
    pub epsilon: Option<f64>,
    pub kappa: f64,
    pub gamma_phi: f64,
    pub gamma_minus: f64,
}

/// An ordered Trotter step repeated `steps` times. Durations are simulated
/// time for Hamiltonian blocks and angles for rotations.
#[derive(Clone, Debug, PartialEq)]
pub struct TrotterPlan {
    pub steps: usize,
    pub blocks: Vec<(BlockLabel, f64)>,
    pub noise: Option<PlanNoise>,
}

impl TrotterPlan {
    pub fn new(steps: usize, blocks: Vec<(BlockLabel, f64)>) -> Result<Self> {
        if steps == 0 {
            return invalid("a Trotter plan needs at least one step");
        }
        if blocks
            .iter()
            .any(|(l, d)| !matches!(l, BlockLabel::Ry(_)) && !(*d >= 0.0))
        {
            return invalid("block durations must be nonnegative");
        }
        Ok(Self {
            steps,
            blocks,
            noise: None,
        })
    }

    pub fn with_noise(mut self, noise: PlanNoise) -> Self {
        self.noise = Some(noise);
        self
    }

    /// The ion protocol: `e^{−iH_XY τ} R_y e^{−iH_XX τ} R_y†` with `τ = t/l`,
    /// listed in order of application.
    pub fn daqs_heisenberg(t: f64, l: usize) -> Result<Self> {
        let tau = t / l.max(1) as f64;
        let r = std::f64::consts::FRAC_PI_4;
        Self::new(
            l,
            vec![
                (BlockLabel::Ry(-r), 0.0),
                (BlockLabel::XX, tau),
                (BlockLabel::Ry(r), 0.0),
                (BlockLabel::XY, tau),
            ],
        )
    }

    pub fn digital_heisenberg(j: &SpinCouplingMatrix, t: f64, l: usize) -> Result<Self> {
        let tau = t / l.max(1) as f64;
        Self::new(
            l,
            j.pairs()
                .into_iter()
                .map(|(a, k, _)| (BlockLabel::TwoQubitGate(a, k), tau))
                .collect(),
        )
    }

    /// Circuit-QED step: JC with `(Δ̃_r, Δ̃_q¹)`, flip, JC with `(Δ̃_r, Δ̃_q²)`, flip.
    pub fn cqed(p: &CqedParams, t: f64, n: usize) -> Result<Self> {
        let tau = t / n.max(1) as f64;
        let (dq1, dq2) = p.step_detunings();
        let dr = 0.5 * p.omega_r;
        Self::new(
            n,
            vec![
                (BlockLabel::JcStep { dr, dq: dq1 }, tau),
                (BlockLabel::Flip, 0.0),
                (BlockLabel::JcStep { dr, dq: dq2 }, tau),
                (BlockLabel::Flip, 0.0),
            ],
        )
    }

    pub fn count(&self, pred: impl Fn(&BlockLabel) -> bool) -> usize {
        self.steps * self.blocks.iter().filter(|(l, _)| pred(l)).count()
    }

    /// Two-qubit-gate equivalents: three per pairwise Heisenberg exponential.
    pub fn two_qubit_gates(&self) -> usize {
        3 * self.count(|l| matches!(l, BlockLabel::TwoQubitGate(..)))
    }

    pub fn analog_blocks(&self) -> usize {
        self.count(|l| {
            matches!(
                l,
                BlockLabel::XX | BlockLabel::XY | BlockLabel::ZZ | BlockLabel::JcStep { .. }
            )
        })
    }

    /// Gates that carry depolarizing noise: analog blocks and entangling gates.
    pub fn noisy_gates(&self) -> usize {
        self.analog_blocks() + self.two_qubit_gates()
    }

    /// Product of the step blocks, the first block applied first, raised to
    /// `steps`.
    pub fn unitary(&self, mut resolve: impl FnMut(&BlockLabel, f64) -> Result<CMat>) -> Result<CMat> {
        let mut step: Option<CMat> = None;
        for (label, d) in &self.blocks {
            let u = resolve(label, *d)?;
            step = Some(match step {
                None => u,
                Some(s) => u * s,
            });
        }
        let step = step.ok_or_else(|| Error::InvalidArgument("empty Trotter step".into()))?;
        let mut out = step.clone();
        for _ in 1..self.steps {
            out = &step * out;
        }
        Ok(out)
    }
}

/// Cached spectral data for repeated Heisenberg Trotterization.
#[derive(Clone, Debug)]
pub struct HeisenbergDigitizer {
    couplings: SpinCouplingMatrix,
    exact: HermitianEig,
    xx: HermitianEig,
    xy: HermitianEig,
    h_xy: CMat,
    h_zz: CMat,
    pairs: Vec<HermitianEig>,
}

impl HeisenbergDigitizer {
    pub fn new(j: &SpinCouplingMatrix) -> Result<Self> {
        let space = j.space()?;
        let h = heisenberg(j)?.to_dense()?;
        let h_xx = analog_block(BlockKind::XX, j)?.to_dense()?;
        let h_xy = analog_block(BlockKind::XY, j)?.to_dense()?;
        let h_zz = analog_block(BlockKind::ZZ, j)?.to_dense()?;
        let mut pairs = Vec::new();
        for (a, k, jak) in j.pairs() {
            let mut p = OperatorSum::zero(&space);
            for ax in [QubitOp::X, QubitOp::Y, QubitOp::Z] {
                p.push(c(jak, 0.0), &[(a, q(ax)), (k, q(ax))])?;
            }
            pairs.push(HermitianEig::new(&p.to_dense()?)?);
        }
        Ok(Self {
            couplings: j.clone(),
            exact: HermitianEig::new(&h)?,
            xx: HermitianEig::new(&h_xx)?,
            xy: HermitianEig::new(&h_xy)?,
            h_xy,
            h_zz,
            pairs,
        })
    }

    pub fn couplings(&self) -> &SpinCouplingMatrix {
        &self.couplings
    }

    pub fn exact(&self, t: f64) -> CMat {
        self.exact.propagator(t)
    }

    pub fn daqs(&self, t: f64, l: usize) -> Result<CMat> {
        let n = self.couplings.n();
        TrotterPlan::daqs_heisenberg(t, l)?.unitary(|label, d| match label {
            BlockLabel::Ry(theta) => Ok(collective_ry(n, *theta)),
            BlockLabel::XX => Ok(self.xx.propagator(d)),
            BlockLabel::XY => Ok(self.xy.propagator(d)),
            _ => unreachable!("ion plan only holds rotations and XX/XY blocks"),
        })
    }

    pub fn digital(&self, t: f64, l: usize) -> Result<CMat> {
        let plan = TrotterPlan::digital_heisenberg(&self.couplings, t, l)?;
        let mut k = 0;
        plan.unitary(|_, d| {
            let u = self.pairs[k].propagator(d);
            k += 1;
            Ok(u)
        })
    }

    /// `‖[H_XY, H_ZZ]‖`; the first-order DAQS defect is at most this times `t²/(2l)`.
    pub fn commutator_norm(&self) -> f64 {
        op_norm(&(&self.h_xy * &self.h_zz - &self.h_zz * &self.h_xy))
    }
}

/// A Trotterized evolution compared with `exp(−iH_H t)`.
#[derive(Clone, Debug)]
pub struct TrotterRun {
    pub unitary: CMat,
    /// `|⟨ψ|U_exact† U|ψ⟩|²` for each supplied state.
    pub fidelity: Vec<f64>,
    /// `‖U − U_exact‖`.
    pub defect: f64,
    pub plan: TrotterPlan,
}

fn compare(u: CMat, exact: &CMat, states: &[CVec], plan: TrotterPlan) -> Result<TrotterRun> {
    let d = exact.nrows();
    let mut fidelity = Vec::with_capacity(states.len());
    for s in states {
        if s.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "expected length {}, found {}",
                d,
                s.len()
            )));
        }
        fidelity.push((exact * s).dotc(&(&u * s)).norm_sqr());
    }
    let defect = op_norm(&(&u - exact));
    Ok(TrotterRun {
        unitary: u,
        fidelity,
        defect,
        plan,
    })
}

pub fn daqs_heisenberg(j: &SpinCouplingMatrix, t: f64, l: usize, states: &[CVec]) -> Result<TrotterRun> {
    let dg = HeisenbergDigitizer::new(j)?;
    compare(
        dg.daqs(t, l)?,
        &dg.exact(t),
        states,
        TrotterPlan::daqs_heisenberg(t, l)?,
    )
}

pub fn digital_heisenberg(j: &SpinCouplingMatrix, t: f64, l: usize, states: &[CVec]) -> Result<TrotterRun> {
    let dg = HeisenbergDigitizer::new(j)?;
    compare(
        dg.digital(t, l)?,
        &dg.exact(t),
        states,
        TrotterPlan::digital_heisenberg(j, t, l)?,
    )
}

/// One row of a Heisenberg fidelity sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct HeisenbergRow {
    pub t: f64,
    pub l: usize,
    pub daqs_fidelity: f64,
    pub digital_fidelity: f64,
    pub daqs_defect: f64,
    pub digital_defect: f64,
}

/// DAQS and fully digital fidelities on a `(t, l)` grid for one initial state.
pub fn heisenberg_sweep(
    j: &SpinCouplingMatrix,
    times: &[f64],
    steps: &[usize],
    psi: &CVec,
) -> Result<Vec<HeisenbergRow>> {
    let dg = HeisenbergDigitizer::new(j)?;
    if psi.len() != 1 << j.n() {
        return Err(Error::DimensionMismatch(format!(
            "expected length {}, found {}",
            1 << j.n(),
            psi.len()
        )));
    }
    let grid: Vec<(f64, usize)> = steps.iter().flat_map(|&l| times.iter().map(move |&t| (t, l))).collect();
    par::map_slice(&grid, |&(t, l)| {
        let exact = dg.exact(t);
        let target = &exact * psi;
        let ud = dg.daqs(t, l)?;
        let ug = dg.digital(t, l)?;
        Ok(HeisenbergRow {
            t,
            l,
            daqs_fidelity: target.dotc(&(&ud * psi)).norm_sqr(),
            digital_fidelity: target.dotc(&(&ug * psi)).norm_sqr(),
            daqs_defect: op_norm(&(ud - &exact)),
            digital_defect: op_norm(&(ug - &exact)),
        })
    })
    .into_iter()
    .collect()
}

/// `⟨O⟩` after the plan's gates each depolarize with fidelity `ε`, and the
/// value recovered by inverting the channel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DepolarizedReadout {
    pub ideal: f64,
    pub noisy: f64,
    pub recovered: f64,
    pub gates: usize,
}

pub fn depolarized_readout(plan: &TrotterPlan, rho: &DensityMatrix, o: &CMat) -> Result<DepolarizedReadout> {
    let eps = plan
        .noise
        .and_then(|n| n.epsilon)
        .ok_or_else(|| Error::InvalidArgument("plan carries no depolarizing annotation".into()))?;
    let gates = plan.noisy_gates();
    let ideal = (rho.matrix() * o).trace().re;
    let noisy_rho = apply_noise(rho, eps, gates as u32)?;
    let noisy = (noisy_rho.matrix() * o).trace().re;
    Ok(DepolarizedReadout {
        ideal,
        noisy,
        recovered: rescale_expectation(noisy, eps, gates as u32, o)?,
        gates,
    })
}

/// The bichromatic XY block on `N` ions coupled to one effective mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XyBlockParams {
    pub n_spins: usize,
    /// Target uniform coupling.
    pub j: f64,
    /// Detuning from the sideband.
    pub big_delta: f64,
    /// Asymmetry of the bichromatic pair.
    pub delta: f64,
    pub omega: f64,
    pub n_max: usize,
}

impl XyBlockParams {
    /// `η_eff = Ω⁻¹ √(JΔ/2)`.
    pub fn eta_eff(&self) -> f64 {
        (self.j * self.big_delta / 2.0).sqrt() / self.omega
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.delta / self.big_delta >= 0.2 {
            w.push(format!("δ/Δ = {:.3} is not small", self.delta / self.big_delta));
        }
        if self.j / self.delta >= 0.2 {
            w.push(format!("J/δ = {:.3} is not small", self.j / self.delta));
        }
        w
    }

    fn validate(&self) -> Result<()> {
        if self.n_spins < 2 || self.n_spins > MAX_SPINS {
            return invalid("XY block needs between 2 and 12 spins");
        }
        if !(self.j >= 0.0 && self.big_delta > 0.0 && self.delta > 0.0 && self.omega > 0.0) {
            return invalid("XY block needs J ≥ 0 and positive Δ, δ, Ω");
        }
        if self.n_max < 2 {
            return invalid("XY block needs n_max ≥ 2");
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct XyBlockRun {
    pub times: Vec<f64>,
    /// Spin-state fidelity `⟨ψ_ideal|ρ_spin|ψ_ideal⟩`.
    pub fidelity: Vec<f64>,
    pub worst: f64,
    pub eta_eff: f64,
    pub warnings: Vec<String>,
}

/// Integrate `Ωη Σ_j (σ_j⁺e^{−iδt} + h.c.)(a e^{iΔt} + h.c.)` from
/// `spins ⊗ |0⟩` and compare with `exp(−i ½H_XY t)` at uniform `J`.
pub fn xy_block_physical(p: &XyBlockParams, spins: &CVec, times: &[f64], tol: f64) -> Result<XyBlockRun> {
    p.validate()?;
    let n = p.n_spins;
    let ds = 1usize << n;
    if spins.len() != ds {
        return Err(Error::DimensionMismatch(format!(
            "expected length {}, found {}",
            ds,
            spins.len()
        )));
    }
    let space = model_space(n, p.n_max)?;
    let mode = n;
    let f = (p.j * p.big_delta / 2.0).sqrt();
    let mut s_plus_a = OperatorSum::zero(&space);
    let mut s_plus_ad = OperatorSum::zero(&space);
    for k in 0..n {
        s_plus_a.push(c(f, 0.0), &[(k, q(QubitOp::SigmaPlus)), (mode, b(BosonOp::A))])?;
        s_plus_ad.push(c(f, 0.0), &[(k, q(QubitOp::SigmaPlus)), (mode, b(BosonOp::Adag))])?;
    }
    let m1 = s_plus_a.to_dense()?;
    let m2 = s_plus_ad.to_dense()?;
    let (m1d, m2d) = (m1.adjoint(), m2.adjoint());
    let (dp, dm) = (p.big_delta - p.delta, p.big_delta + p.delta);
    let rhs = |t: f64, y: &CVec| -> CVec {
        let e1 = C64::from_polar(1.0, dp * t);
        let e2 = C64::from_polar(1.0, -dm * t);
        let hy = (&m1 * y) * e1 + (&m2 * y) * e2 + (&m1d * y) * e1.conj() + (&m2d * y) * e2.conj();
        hy * -I
    };

    let ideal = {
        let j = SpinCouplingMatrix::uniform(n, p.j)?;
        HermitianEig::new(&(analog_block(BlockKind::XY, &j)?.to_dense()? * c(0.5, 0.0)))?
    };
    let dm_ = p.n_max + 1;
    let mut y = CVec::zeros(ds * dm_);
    for s in 0..ds {
        y[s * dm_] = spins[s];
    }
    let opts = OdeOptions {
        max_dt: Some(0.5 / (p.big_delta + p.delta)),
        ..OdeOptions::with_tol(tol)
    };
    let mut t0 = 0.0;
    let mut fidelity = Vec::with_capacity(times.len());
    for &t in times {
        if t < t0 {
            return invalid("times must be ascending from 0");
        }
        if t > t0 {
            y = dp45(rhs, t0, t, &y, &opts)?.0;
            t0 = t;
        }
        let tail: f64 = (0..ds)
            .flat_map(|s| [s * dm_ + p.n_max, s * dm_ + p.n_max - 1])
            .map(|k| y[k].norm_sqr())
            .sum();
        if tail > FOCK_TAIL_LIMIT {
            return Err(Error::TruncationGuard(format!(
                "XY block: {tail:.2e} population in the top Fock levels at n_max = {}",
                p.n_max
            )));
        }
        let target = ideal.apply(t, spins);
        let fid: f64 = (0..dm_)
            .map(|m| {
                (0..ds)
                    .map(|s| target[s].conj() * y[s * dm_ + m])
                    .sum::<C64>()
                    .norm_sqr()
            })
            .sum();
        fidelity.push(fid);
    }
    let worst = fidelity.iter().cloned().fold(1.0, f64::min);
    Ok(XyBlockRun {
        times: times.to_vec(),
        fidelity,
        worst,
        eta_eff: p.eta_eff(),
        warnings: p.warnings(),
    })
}

/// Physical circuit-QED frequencies in GHz (without the 2π).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CqedPhysical {
    pub omega_r: f64,
    pub g: f64,
    /// Rotating-frame frequency `ω̃`.
    pub omega_frame: f64,
    pub omega_q1: f64,
    pub omega_q2: f64,
}

impl CqedPhysical {
    /// Simulated `(ω_r^R, ω_q^R, g^R)` in GHz: `ω_r^R = 2(ω_r − ω̃)`,
    /// `ω_q^R = ω_q¹ − ω_q²`, `g^R = g`.
    pub fn simulated(&self) -> (f64, f64, f64) {
        (
            2.0 * (self.omega_r - self.omega_frame),
            self.omega_q1 - self.omega_q2,
            self.g,
        )
    }

    pub fn shifted(&self, offset: f64) -> Self {
        Self {
            omega_r: self.omega_r + offset,
            g: self.g,
            omega_frame: self.omega_frame + offset,
            omega_q1: self.omega_q1 + offset,
            omega_q2: self.omega_q2 + offset,
        }
    }
}

/// Regimes used for the circuit-QED digitization. Ratios are `g : ω_r : ω_q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CqedPreset {
    /// `g = ω_r/2 = ω_q/2`
    HalfCoupling,
    /// `g = ω_r = ω_q`
    Resonant,
    /// `g = 2ω_r = ω_q`
    DoubleCoupling,
    /// `g = 2ω_r = 1.5ω_q`
    DoubleCouplingDetuned,
    /// `g = ω_r`, `ω_q = 0`, at `g/2π = 80 MHz`.
    DeepStrong,
}

impl CqedPreset {
    pub const ALL: [CqedPreset; 5] = [
        CqedPreset::HalfCoupling,
        CqedPreset::Resonant,
        CqedPreset::DoubleCoupling,
        CqedPreset::DoubleCouplingDetuned,
        CqedPreset::DeepStrong,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CqedPreset::HalfCoupling => "half-coupling",
            CqedPreset::Resonant => "resonant",
            CqedPreset::DoubleCoupling => "double-coupling",
            CqedPreset::DoubleCouplingDetuned => "double-coupling-detuned",
            CqedPreset::DeepStrong => "deep-strong",
        }
    }

    /// `(ω_r^R/g, ω_q^R/g)` named by the preset.
    pub fn ratios(&self) -> (f64, f64) {
        match self {
            CqedPreset::HalfCoupling => (2.0, 2.0),
            CqedPreset::Resonant => (1.0, 1.0),
            CqedPreset::DoubleCoupling => (0.5, 1.0),
            CqedPreset::DoubleCouplingDetuned => (0.5, 1.0 / 1.5),
            CqedPreset::DeepStrong => (1.0, 0.0),
        }
    }

    /// Device settings with `ω_r = 7.5 GHz`; the second-step qubit sits at
    /// the frame frequency.
    pub fn physical(&self) -> CqedPhysical {
        let (frame, dq, g) = match self {
            CqedPreset::HalfCoupling => (7.4, 0.2, 0.1),
            CqedPreset::Resonant => (7.45, 0.1, 0.1),
            CqedPreset::DoubleCoupling => (7.475, 0.1, 0.1),
            CqedPreset::DoubleCouplingDetuned => (7.475, 0.1 / 1.5, 0.1),
            CqedPreset::DeepStrong => (7.46, 0.0, 0.08),
        };
        CqedPhysical {
            omega_r: 7.5,
            g,
            omega_frame: frame,
            omega_q1: frame + dq,
            omega_q2: frame,
        }
    }

    pub fn params(&self, n_max: usize) -> Result<CqedParams> {
        let p = CqedParams::from_physical(&self.physical(), n_max)?;
        let (rr, rq) = self.ratios();
        if (p.omega_r - rr).abs() > 1e-9 || (p.omega_q - rq).abs() > 1e-9 {
            return invalid(format!(
                "preset {} frequencies give ω_r/g = {}, ω_q/g = {}",
                self.as_str(),
                p.omega_r,
                p.omega_q
            ));
        }
        Ok(p)
    }
}

/// Simulated Rabi/Dicke parameters in units of the coupling reference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CqedParams {
    pub omega_r: f64,
    pub omega_q: f64,
    pub g: f64,
    /// `Δ̃_q²` of the flipped step; `Δ̃_q¹ = Δ̃_q² + ω_q/2`.
    pub dq2: f64,
    pub n_qubits: usize,
    pub n_max: usize,
    /// Reference frequency in GHz (without 2π) that units are scaled by.
    pub reference_ghz: f64,
}

impl CqedParams {
    pub fn new(omega_r: f64, omega_q: f64, g: f64, n_max: usize) -> Self {
        Self {
            omega_r,
            omega_q,
            g,
            dq2: 0.0,
            n_qubits: 1,
            n_max,
            reference_ghz: 1.0,
        }
    }

    /// Everything divided by the physical coupling.
    pub fn from_physical(p: &CqedPhysical, n_max: usize) -> Result<Self> {
        if !(p.g > 0.0) {
            return invalid("physical coupling must be positive");
        }
        let (wr, wq, g) = p.simulated();
        Ok(Self {
            omega_r: wr / g,
            omega_q: wq / g,
            g: 1.0,
            dq2: 0.5 * (p.omega_q2 - p.omega_frame) / g,
            n_qubits: 1,
            n_max,
            reference_ghz: g,
        })
    }

    /// `ω_r^R = 0`: `H = ω_q/2 σz + g σx(a + a†)`, the 1+1 Dirac form with
    /// `mc² ↔ ω_q/2` and `c ↔ g`.
    pub fn dirac(omega_q: f64, g: f64, n_max: usize) -> Self {
        Self::new(0.0, omega_q, g, n_max)
    }

    pub fn with_qubits(mut self, n: usize) -> Self {
        self.n_qubits = n;
        self
    }

    /// `(Δ̃_q¹, Δ̃_q²)`.
    pub fn step_detunings(&self) -> (f64, f64) {
        (self.dq2 + 0.5 * self.omega_q, self.dq2)
    }

    fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_max < 2 {
            return invalid("cQED model needs a qubit and n_max ≥ 2");
        }
        if !(self.omega_r.is_finite() && self.omega_q.is_finite() && self.g.is_finite() && self.dq2.is_finite()) {
            return invalid("cQED parameters must be finite");
        }
        Ok(())
    }

    pub fn space(&self) -> Result<HilbertSpace> {
        model_space(self.n_qubits, self.n_max)
    }

    /// `ω_r a†a + Σ ω_q/2 σz_j + g Σ σx_j(a + a†)`.
    pub fn target(&self) -> Result<OperatorSum> {
        let space = self.space()?;
        let mode = self.n_qubits;
        let mut h = OperatorSum::single(&space, mode, b(BosonOp::N), self.omega_r)?;
        for k in 0..self.n_qubits {
            h.push(c(0.5 * self.omega_q, 0.0), &[(k, q(QubitOp::Z))])?;
            h.push(c(self.g, 0.0), &[(k, q(QubitOp::X)), (mode, b(BosonOp::X))])?;
        }
        Ok(h.assume_hermitian())
    }

    /// Device Hamiltonian in the rotating frame,
    /// `Δ̃_r a†a + Δ̃_q Σσz_j + g Σ(a†σ_j⁻ + aσ_j⁺)`.
    pub fn jc_step(&self, dr: f64, dq: f64) -> Result<OperatorSum> {
        let space = self.space()?;
        let mode = self.n_qubits;
        let mut h = OperatorSum::single(&space, mode, b(BosonOp::N), dr)?;
        for k in 0..self.n_qubits {
            h.push(c(dq, 0.0), &[(k, q(QubitOp::Z))])?;
            h.push(c(self.g, 0.0), &[(k, q(QubitOp::SigmaMinus)), (mode, b(BosonOp::Adag))])?;
            h.push(c(self.g, 0.0), &[(k, q(QubitOp::SigmaPlus)), (mode, b(BosonOp::A))])?;
        }
        Ok(h.assume_hermitian())
    }

    /// Collective flip `Π_j exp(−iπσx_j/2)`.
    pub fn flip(&self) -> Result<CMat> {
        let x = CMat::from_row_slice(2, 2, &[ZERO, -I, -I, ZERO]);
        let qubits = (1..self.n_qubits).fold(x.clone(), |acc, _| acc.kronecker(&x));
        Ok(qubits.kronecker(&CMat::identity(self.n_max + 1, self.n_max + 1)))
    }

    /// `|e…e⟩ ⊗ |0⟩`.
    pub fn initial_state(&self) -> Result<CVec> {
        let mut v = CVec::zeros(self.space()?.dim());
        v[0] = c(1.0, 0.0);
        Ok(v)
    }
}

/// Dissipation during the device run, in units of the coupling reference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CqedNoise {
    pub kappa: f64,
    pub gamma_phi: f64,
    pub gamma_minus: f64,
    /// Duration of each flip pulse.
    pub flip_time: f64,
}

impl CqedNoise {
    /// `κ/2π = 100 kHz`, `Γ_φ/2π = 60 kHz`, `Γ₋/2π = 30 kHz`, `T_f = 10 ns`,
    /// scaled by a coupling reference in GHz.
    pub fn device(reference_ghz: f64) -> Self {
        let w = 2.0 * std::f64::consts::PI * reference_ghz;
        Self {
            kappa: 2.0 * std::f64::consts::PI * 100e-6 / w,
            gamma_phi: 2.0 * std::f64::consts::PI * 60e-6 / w,
            gamma_minus: 2.0 * std::f64::consts::PI * 30e-6 / w,
            flip_time: 10.0 * w,
        }
    }
}

/// Raised-cosine flip envelope with `∫₀^{T_f} f = π/2`.
pub fn flip_envelope(t: f64, t_f: f64) -> f64 {
    if !(0.0..=t_f).contains(&t) {
        return 0.0;
    }
    std::f64::consts::FRAC_PI_2 / t_f * (1.0 - (2.0 * std::f64::consts::PI * t / t_f).cos())
}

#[derive(Clone, Debug)]
pub struct CqedRun {
    pub times: Vec<f64>,
    pub steps: usize,
    pub fidelity: Vec<f64>,
    pub photons: Vec<f64>,
    pub photons_exact: Vec<f64>,
    pub sigma_z: Vec<f64>,
    pub sigma_z_exact: Vec<f64>,
    /// Device time per point: JC steps plus flip pulses.
    pub device_time: Vec<f64>,
}

struct CqedOps {
    h1: HermitianEig,
    h2: HermitianEig,
    flip: CMat,
    target: HermitianEig,
    n_op: CMat,
    sz: CMat,
}

fn cqed_ops(p: &CqedParams) -> Result<CqedOps> {
    let (dq1, dq2) = p.step_detunings();
    let dr = 0.5 * p.omega_r;
    let space = p.space()?;
    let mut sz = OperatorSum::zero(&space);
    for k in 0..p.n_qubits {
        sz.push(c(1.0 / p.n_qubits as f64, 0.0), &[(k, q(QubitOp::Z))])?;
    }
    Ok(CqedOps {
        h1: HermitianEig::new(&p.jc_step(dr, dq1)?.to_dense()?)?,
        h2: HermitianEig::new(&p.jc_step(dr, dq2)?.to_dense()?)?,
        flip: p.flip()?,
        target: HermitianEig::new(&p.target()?.to_dense()?)?,
        n_op: OperatorSum::single(&space, p.n_qubits, b(BosonOp::N), 1.0)?.to_dense()?,
        sz: sz.to_dense()?,
    })
}

fn top_tail(v: &CVec, n_max: usize) -> f64 {
    let d = n_max + 1;
    (0..v.len())
        .filter(|k| k % d >= n_max - 1)
        .map(|k| v[k].norm_sqr())
        .sum()
}

fn expect(v: &CVec, m: &CMat) -> f64 {
    v.dotc(&(m * v)).re
}

/// Digitize `H_R` into `n` steps of `[X e^{−iH̃₂τ} X] e^{−iH̃₁τ}` and compare
/// with exact evolution from `|e⟩|0⟩`. With `noise`, the device sequence
/// (JC steps and finite flip pulses under `κL(a) + Γ_φL(σz) + Γ₋L(σ⁻)`) is
/// integrated instead and `F = ⟨Ψ_R|ρ|Ψ_R⟩`.
pub fn cqed_rabi_digitize(p: &CqedParams, times: &[f64], n: usize, noise: Option<&CqedNoise>) -> Result<CqedRun> {
    p.validate()?;
    if n == 0 {
        return invalid("need at least one Trotter step");
    }
    let ops = cqed_ops(p)?;
    let psi0 = p.initial_state()?;
    let flip_time = noise.map_or(0.0, |nz| nz.flip_time);
    // (fidelity, photons, photons_exact, sigma_z, sigma_z_exact)
    type Sample = (f64, f64, f64, f64, f64);
    let rows: Vec<Result<Sample>> = par::map_slice(times, |&t| {
        let tau = t / n as f64;
        let exact = ops.target.apply(t, &psi0);
        if top_tail(&exact, p.n_max) > FOCK_TAIL_LIMIT {
            return Err(Error::TruncationGuard(format!(
                "cQED target at t = {t} leaks past n_max = {}",
                p.n_max
            )));
        }
        let (fid, nph, sz) = match noise {
            None => {
                let u1 = ops.h1.propagator(tau);
                let u2 = &ops.flip * ops.h2.propagator(tau) * ops.flip.adjoint();
                let step = u2 * u1;
                let mut v = psi0.clone();
                for _ in 0..n {
                    v = &step * v;
                }
                (exact.dotc(&v).norm_sqr(), expect(&v, &ops.n_op), expect(&v, &ops.sz))
            }
            Some(nz) => {
                let rho = noisy_sequence(p, nz, tau, n, &psi0)?;
                let f = exact.dotc(&(&rho * &exact)).re;
                ((f), (&rho * &ops.n_op).trace().re, (&rho * &ops.sz).trace().re)
            }
        };
        Ok((fid, nph, sz, expect(&exact, &ops.n_op), expect(&exact, &ops.sz)))
    });
    let mut run = CqedRun {
        times: times.to_vec(),
        steps: n,
        fidelity: Vec::new(),
        photons: Vec::new(),
        photons_exact: Vec::new(),
        sigma_z: Vec::new(),
        sigma_z_exact: Vec::new(),
        device_time: times.iter().map(|t| 2.0 * t + 2.0 * n as f64 * flip_time).collect(),
    };
    for r in rows {
        let (f, nph, sz, nph_e, sz_e) = r?;
        run.fidelity.push(f);
        run.photons.push(nph);
        run.sigma_z.push(sz);
        run.photons_exact.push(nph_e);
        run.sigma_z_exact.push(sz_e);
    }
    Ok(run)
}

/// Column-stacked 4×4 channel of one flip pulse on a single qubit under
/// `f(t)σx`, `Γ_φ L(σz)` and `Γ₋ L(σ⁻)`.
fn qubit_flip_channel(nz: &CqedNoise) -> Result<CMat> {
    let sx = QubitOp::X.matrix();
    let sz = QubitOp::Z.matrix();
    let sm = QubitOp::SigmaMinus.matrix();
    let lind = |a: &CMat, r: &CMat| -> CMat {
        let ada = a.adjoint() * a;
        a * r * a.adjoint() - (&ada * r + r * &ada) * c(0.5, 0.0)
    };
    let rhs = |s: f64, y: &CVec| -> CVec {
        let r = CMat::from_column_slice(2, 2, y.as_slice());
        let h = &sx * c(flip_envelope(s, nz.flip_time), 0.0);
        let out =
            (&h * &r - &r * &h) * -I + lind(&sz, &r) * c(nz.gamma_phi, 0.0) + lind(&sm, &r) * c(nz.gamma_minus, 0.0);
        CVec::from_column_slice(out.as_slice())
    };
    let mut chan = CMat::zeros(4, 4);
    for k in 0..4 {
        let mut e = CVec::zeros(4);
        e[k] = c(1.0, 0.0);
        let (v, _) = dp45(rhs, 0.0, nz.flip_time, &e, &OdeOptions::with_tol(1e-12))?;
        chan.set_column(k, &v);
    }
    Ok(chan)
}

/// Apply a single-qubit channel to qubit `k` of a qubits ⊗ mode density matrix.
fn apply_qubit_channel(rho: &CMat, chan: &CMat, k: usize, n_qubits: usize, n_max: usize) -> CMat {
    let stride = (1usize << (n_qubits - 1 - k)) * (n_max + 1);
    let d = rho.nrows();
    let bit = |i: usize| (i / stride) % 2;
    let mut out = CMat::zeros(d, d);
    for j in 0..d {
        let (bj, j0) = (bit(j), j - bit(j) * stride);
        for i in 0..d {
            let (bi, i0) = (bit(i), i - bit(i) * stride);
            let row = bi + 2 * bj;
            let mut acc = ZERO;
            for bb in 0..2 {
                for ba in 0..2 {
                    acc += chan[(row, ba + 2 * bb)] * rho[(i0 + ba * stride, j0 + bb * stride)];
                }
            }
            out[(i, j)] = acc;
        }
    }
    out
}

fn noisy_sequence(p: &CqedParams, nz: &CqedNoise, tau: f64, n: usize, psi0: &CVec) -> Result<CMat> {
    let space = p.space()?;
    let mode = p.n_qubits;
    let kappa_channel = || -> Result<Vec<(OperatorSum, Rate)>> {
        Ok(if nz.kappa > 0.0 {
            vec![(
                OperatorSum::single(&space, mode, b(BosonOp::A), 1.0)?,
                Rate::Constant(nz.kappa),
            )]
        } else {
            Vec::new()
        })
    };
    let mut channels = kappa_channel()?;
    for k in 0..p.n_qubits {
        if nz.gamma_phi > 0.0 {
            channels.push((
                OperatorSum::single(&space, k, q(QubitOp::Z), 1.0)?,
                Rate::Constant(nz.gamma_phi),
            ));
        }
        if nz.gamma_minus > 0.0 {
            channels.push((
                OperatorSum::single(&space, k, q(QubitOp::SigmaMinus), 1.0)?,
                Rate::Constant(nz.gamma_minus),
            ));
        }
    }
    let (dq1, dq2) = p.step_detunings();
    let dr = 0.5 * p.omega_r;
    let h1 = p.jc_step(dr, dq1)?.to_dense()?;
    let h2 = p.jc_step(dr, dq2)?.to_dense()?;
    let full = LindbladModel::new(Schedule::zero(&space), channels)?;
    let cavity = if nz.kappa > 0.0 {
        Some(LindbladModel::new(Schedule::zero(&space), kappa_channel()?)?)
    } else {
        None
    };
    let d = space.dim();
    let opts = OdeOptions::with_tol(1e-9);
    let evolve = |rho: CMat, dur: f64, h: Option<&CMat>, model: &LindbladModel| -> Result<CMat> {
        if dur <= 0.0 {
            return Ok(rho);
        }
        let v0 = CVec::from_column_slice(rho.as_slice());
        let rhs = |s: f64, y: &CVec| -> CVec {
            let xi = CMat::from_column_slice(d, d, y.as_slice());
            let mut r = model.dissipator(s, &xi);
            if let Some(h) = h {
                r += (h * &xi - &xi * h) * -I;
            }
            CVec::from_column_slice(r.as_slice())
        };
        let (v, _) = dp45(rhs, 0.0, dur, &v0, &opts)?;
        Ok(CMat::from_column_slice(d, d, v.as_slice()))
    };
    // During a pulse the qubit and cavity generators act on different
    // factors and commute, so the flip channel factorizes.
    let qubit_chan = if nz.flip_time > 0.0 {
        Some(qubit_flip_channel(nz)?)
    } else {
        None
    };
    let flip = |rho: CMat| -> Result<CMat> {
        match &qubit_chan {
            Some(ch) => {
                let mut r = rho;
                for k in 0..p.n_qubits {
                    r = apply_qubit_channel(&r, ch, k, p.n_qubits, p.n_max);
                }
                match &cavity {
                    Some(m) => evolve(r, nz.flip_time, None, m),
                    None => Ok(r),
                }
            }
            None => {
                let f = p.flip()?;
                Ok(&f * rho * f.adjoint())
            }
        }
    };
    let mut rho = psi0 * psi0.adjoint();
    for _ in 0..n {
        rho = evolve(rho, tau, Some(&h1), &full)?;
        rho = flip(rho)?;
        rho = evolve(rho, tau, Some(&h2), &full)?;
        rho = flip(rho)?;
    }
    Ok(rho)
}

/// Mean noiseless infidelity `1 − F` over `times` for each step count.
pub fn cqed_convergence(p: &CqedParams, times: &[f64], steps: &[usize]) -> Result<Vec<(usize, f64)>> {
    steps
        .iter()
        .map(|&n| {
            let run = cqed_rabi_digitize(p, times, n, None)?;
            let mean = run.fidelity.iter().map(|f| 1.0 - f).sum::<f64>() / times.len().max(1) as f64;
            Ok((n, mean))
        })
        .collect()
}

/// Gate-count bound for a Dicke simulation to error `ε` at fractal depth `k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateBound {
    /// `‖H‖ ≤ ω_r M + N(ω_q + 2|g|√(M+1))`.
    pub norm: f64,
    pub value: f64,
    pub n_gates: u64,
}

/// `N_ε = 2·5^{2k} {2t‖H‖}^{1+1/2k} / ε^{1/2k}`.
#[allow(clippy::too_many_arguments)]
pub fn gate_count_bound(
    t: f64,
    omega_r: f64,
    omega_q: f64,
    g: f64,
    n: usize,
    m: usize,
    eps: f64,
    k: u32,
) -> Result<GateBound> {
    if !(eps > 0.0) {
        return invalid("error target must be positive");
    }
    if m < 1 || n < 1 || k < 1 {
        return invalid("need M ≥ 1, N ≥ 1 and k ≥ 1");
    }
    if !(t >= 0.0) {
        return invalid("time must be nonnegative");
    }
    let norm = omega_r * m as f64 + n as f64 * (omega_q + 2.0 * g.abs() * ((m + 1) as f64).sqrt());
    let inv = 1.0 / (2.0 * k as f64);
    let value = 2.0 * 5f64.powi(2 * k as i32) * (2.0 * t * norm).powf(1.0 + inv) / eps.powf(inv);
    Ok(GateBound {
        norm,
        value,
        n_gates: value.ceil() as u64,
    })
}
