//! Trapped-ion realizations of the quantum Rabi, Dicke and two-photon Rabi
//! models.
//!
//! The single-ion space is qubit ⊗ motional mode (`|e⟩` index 0). The full
//! drive is simulated in the interaction picture of the trap and the qubit,
//! after the optical RWA, with the complete `exp(iη(a e^{−iνt} + a† e^{iνt}))`.
//! Effective models live in their own "simulation frame"; the two frames
//! differ by `exp(−iFt)` with `F = ω_q/2 σz + ω_m a†a`, which commutes with
//! `σz`, `a†a` and Fock projectors.

use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{invalid, Error, Result};
use crate::qcore::expm::HermitianEig;
use crate::qcore::ode::{dp45, OdeOptions};
use crate::qcore::ops::{displacement, BosonOp, OperatorSum, Prim, QubitOp};
use crate::qcore::schedule::Schedule;
use crate::qcore::space::{Factor, HilbertSpace};
use crate::qcore::state::{expectation_dense, PureState, QState};
use crate::{c, par, CMat, CVec, C64, I, ONE, ZERO};

/// Population allowed in the top two Fock levels before a run is rejected.
pub const FOCK_TAIL_LIMIT: f64 = 1e-3;

/// Bichromatic laser drive on one trapped ion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IonDriveParams {
    /// Trap frequency `ν`.
    pub nu: f64,
    /// Qubit splitting; recorded only, the optical RWA removes it.
    pub omega0: f64,
    pub omega_r: f64,
    pub omega_b: f64,
    pub eta: f64,
    pub delta_r: f64,
    pub delta_b: f64,
    /// 1 for first sidebands (Rabi), 2 for second sidebands (two-photon Rabi).
    pub sideband_order: u8,
    pub phi_r: f64,
    pub phi_b: f64,
}

impl IonDriveParams {
    /// Equal-strength first-sideband drive with zero laser phases.
    pub fn rabi(nu: f64, omega: f64, eta: f64, delta_r: f64, delta_b: f64) -> Self {
        Self {
            nu,
            omega0: 0.0,
            omega_r: omega,
            omega_b: omega,
            eta,
            delta_r,
            delta_b,
            sideband_order: 1,
            phi_r: 0.0,
            phi_b: 0.0,
        }
    }

    /// Equal-strength second-sideband drive.
    pub fn two_photon(nu: f64, omega: f64, eta: f64, delta_r: f64, delta_b: f64) -> Self {
        Self {
            sideband_order: 2,
            ..Self::rabi(nu, omega, eta, delta_r, delta_b)
        }
    }

    /// The JC benchmark in rad/µs: ν = 2π·3 MHz, Ω = 2π·68 kHz,
    /// η = 0.06, δ_r = 0, δ_b = −2π·102 kHz.
    pub fn jc_benchmark() -> Self {
        let tau = 2.0 * PI;
        Self::rabi(tau * 3.0, tau * 0.068, 0.06, 0.0, -tau * 0.102)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.nu,
            self.omega0,
            self.omega_r,
            self.omega_b,
            self.eta,
            self.delta_r,
            self.delta_b,
            self.phi_r,
            self.phi_b,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return invalid("drive parameters must be finite");
        }
        if !(self.eta > 0.0) {
            return invalid("Lamb-Dicke parameter must be positive");
        }
        if !(self.nu > 0.0) {
            return invalid("trap frequency must be positive");
        }
        if !matches!(self.sideband_order, 1 | 2) {
            return invalid(format!("sideband order {} is not 1 or 2", self.sideband_order));
        }
        Ok(())
    }

    /// Non-fatal concerns about the approximations behind the effective models.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, d) in [("delta_r", self.delta_r), ("delta_b", self.delta_b)] {
            if d.abs() > 0.1 * self.nu {
                out.push(format!("|{name}|/nu = {:.3} exceeds 0.1", d.abs() / self.nu));
            }
        }
        for (name, o) in [("omega_r", self.omega_r), ("omega_b", self.omega_b)] {
            if o.abs() > 0.1 * self.nu {
                out.push(format!("{name}/nu = {:.3} exceeds 0.1", o.abs() / self.nu));
            }
        }
        out
    }

    /// Laser detunings from the carrier in the trap frame:
    /// `Δ_r = sν − δ_r`, `Δ_b = −sν − δ_b`.
    pub fn sideband_detunings(&self) -> (f64, f64) {
        let s = self.sideband_order as f64;
        (s * self.nu - self.delta_r, -s * self.nu - self.delta_b)
    }

    fn mean_omega(&self) -> f64 {
        0.5 * (self.omega_r + self.omega_b)
    }
}

/// Effective quantum Rabi (or Dicke, `n_qubits > 1`) parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RabiParams {
    pub omega0_r: f64,
    pub omega_r: f64,
    pub g: f64,
    pub n_qubits: usize,
}

impl RabiParams {
    pub fn new(omega0_r: f64, omega_r: f64, g: f64) -> Self {
        Self {
            omega0_r,
            omega_r,
            g,
            n_qubits: 1,
        }
    }

    pub fn with_qubits(mut self, n: usize) -> Self {
        self.n_qubits = n;
        self
    }
}

/// Effective two-photon Rabi / Dicke parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoPhotonParams {
    pub omega: f64,
    pub omega_q: f64,
    pub g: f64,
    pub n_qubits: usize,
}

impl TwoPhotonParams {
    pub fn new(omega: f64, omega_q: f64, g: f64) -> Self {
        Self {
            omega,
            omega_q,
            g,
            n_qubits: 1,
        }
    }

    pub fn with_qubits(mut self, n: usize) -> Self {
        self.n_qubits = n;
        self
    }

    /// `g ≥ ω/2`: the spectrum is collapsed or unbounded from below.
    pub fn collapsed(&self) -> bool {
        self.g >= 0.5 * self.omega
    }

    /// Effective-potential coefficients `(ω − 2g, ω + 2g)` at the extremes of
    /// `⟨S_x⟩ ∈ [−1, 1]`.
    pub fn potential_coefficients(&self) -> (f64, f64) {
        (self.omega - 2.0 * self.g, self.omega + 2.0 * self.g)
    }
}

/// `ω0R = −(δ_r + δ_b)/2`, `ωR = (δ_r − δ_b)/2`, `g = ηΩ/2`.
pub fn effective_qrm(p: &IonDriveParams) -> Result<RabiParams> {
    p.validate()?;
    if p.sideband_order != 1 {
        return invalid("the Rabi mapping needs first-sideband drives");
    }
    Ok(RabiParams::new(
        -0.5 * (p.delta_r + p.delta_b),
        0.5 * (p.delta_r - p.delta_b),
        0.5 * p.eta * p.mean_omega(),
    ))
}

/// `ω = (δ_r − δ_b)/4`, `ω_q = −(δ_r + δ_b)/2`, `g = η²Ω/4`.
pub fn effective_two_photon(p: &IonDriveParams) -> Result<TwoPhotonParams> {
    p.validate()?;
    if p.sideband_order != 2 {
        return invalid("the two-photon mapping needs second-sideband drives");
    }
    Ok(TwoPhotonParams::new(
        0.25 * (p.delta_r - p.delta_b),
        -0.5 * (p.delta_r + p.delta_b),
        0.25 * p.eta * p.eta * p.mean_omega(),
    ))
}

/// Qubits first, mode last.
pub fn model_space(n_qubits: usize, n_max: usize) -> Result<HilbertSpace> {
    if n_qubits == 0 {
        return invalid("need at least one qubit");
    }
    HilbertSpace::qubits_boson(n_qubits, n_max)
}

fn q(op: QubitOp) -> Prim {
    Prim::Q(op)
}

fn b(op: BosonOp) -> Prim {
    Prim::B(op)
}

/// `ω0/2 Σσz + ω a†a + ig Σ(σ⁺ − σ⁻)(a + a†)`. With one qubit this is the
/// effective QRM exactly as realized by the ion.
pub fn dicke_hamiltonian(r: &RabiParams, n_max: usize) -> Result<OperatorSum> {
    let n = r.n_qubits;
    let space = model_space(n, n_max)?;
    let mode = n;
    let mut h = OperatorSum::single(&space, mode, b(BosonOp::N), r.omega_r)?;
    for k in 0..n {
        h.push(c(0.5 * r.omega0_r, 0.0), &[(k, q(QubitOp::Z))])?;
        h.push(c(0.0, r.g), &[(k, q(QubitOp::SigmaPlus)), (mode, b(BosonOp::X))])?;
        h.push(c(0.0, -r.g), &[(k, q(QubitOp::SigmaMinus)), (mode, b(BosonOp::X))])?;
    }
    Ok(h.assume_hermitian())
}

pub fn qrm_hamiltonian(r: &RabiParams, n_max: usize) -> Result<OperatorSum> {
    dicke_hamiltonian(&RabiParams { n_qubits: 1, ..*r }, n_max)
}

/// `ω0/2 σz + ω a†a + g σx(a + a†)`.
pub fn qrm_sigma_x_hamiltonian(r: &RabiParams, n_max: usize) -> Result<OperatorSum> {
    let space = model_space(1, n_max)?;
    let mut h = OperatorSum::single(&space, 1, b(BosonOp::N), r.omega_r)?;
    h.push(c(0.5 * r.omega0_r, 0.0), &[(0, q(QubitOp::Z))])?;
    h.push(c(r.g, 0.0), &[(0, q(QubitOp::X)), (1, b(BosonOp::X))])?;
    Ok(h.assume_hermitian())
}

/// `U = exp(−iπσz/4) ⊗ 1`, with `U H_QRM U† = H_σx`.
pub fn qrm_frame_rotation(n_max: usize) -> CMat {
    let d = n_max + 1;
    let mut u = CMat::zeros(2 * d, 2 * d);
    let (pe, pg) = (C64::from_polar(1.0, -FRAC_PI_4), C64::from_polar(1.0, FRAC_PI_4));
    for m in 0..d {
        u[(m, m)] = pe;
        u[(d + m, d + m)] = pg;
    }
    u
}

/// Dispersive interaction-picture Hamiltonian obtained at second order in
/// `g` when every rotating frequency is large:
/// `g²[|e⟩⟨e|/(ω0R − ωR) − |g⟩⟨g|/(ω0R + ωR) + 2ω0R a†a σz/((ω0R + ωR)(ω0R − ωR))]`.
pub fn dispersive_hamiltonian(r: &RabiParams, n_max: usize) -> Result<OperatorSum> {
    let (dm, dp) = (r.omega0_r - r.omega_r, r.omega0_r + r.omega_r);
    if dm == 0.0 || dp == 0.0 {
        return invalid("dispersive limit needs ω0R ≠ ±ωR");
    }
    let g2 = r.g * r.g;
    let space = model_space(1, n_max)?;
    let mut h = OperatorSum::single(&space, 0, q(QubitOp::ProjE), g2 / dm)?;
    h.push(c(-g2 / dp, 0.0), &[(0, q(QubitOp::ProjG))])?;
    h.push(
        c(2.0 * g2 * r.omega0_r / (dp * dm), 0.0),
        &[(0, q(QubitOp::Z)), (1, b(BosonOp::N))],
    )?;
    Ok(h.assume_hermitian())
}

/// `ω a†a + Σ ω_q/2 σz + (g/N) Σ σx (a² + a†²)`.
pub fn two_photon_hamiltonian(tp: &TwoPhotonParams, n_max: usize) -> Result<OperatorSum> {
    two_photon_with_sign(tp, n_max, 1.0)
}

/// The ion's simulation-frame Hamiltonian, with coupling `−g`. Related to
/// [`two_photon_hamiltonian`] by conjugation with `Πσz`.
pub fn two_photon_sim_frame(tp: &TwoPhotonParams, n_max: usize) -> Result<OperatorSum> {
    two_photon_with_sign(tp, n_max, -1.0)
}

fn two_photon_with_sign(tp: &TwoPhotonParams, n_max: usize, sign: f64) -> Result<OperatorSum> {
    let n = tp.n_qubits;
    let space = model_space(n, n_max)?;
    let mode = n;
    let gk = sign * tp.g / n as f64;
    let mut h = OperatorSum::single(&space, mode, b(BosonOp::N), tp.omega)?;
    for k in 0..n {
        h.push(c(0.5 * tp.omega_q, 0.0), &[(k, q(QubitOp::Z))])?;
        h.push(c(gk, 0.0), &[(k, q(QubitOp::X)), (mode, b(BosonOp::A2))])?;
        h.push(c(gk, 0.0), &[(k, q(QubitOp::X)), (mode, b(BosonOp::Adag2))])?;
    }
    Ok(h.assume_hermitian())
}

/// Quadratures `x = a + a†` and `p = i(a† − a)` on qubits ⊗ mode, for
/// Zitterbewegung traces in the Dirac limit.
pub fn quadratures(n_qubits: usize, n_max: usize) -> Result<(CMat, CMat)> {
    let space = model_space(n_qubits, n_max)?;
    let x = OperatorSum::single(&space, n_qubits, b(BosonOp::X), 1.0)?.to_dense()?;
    let p = OperatorSum::single(&space, n_qubits, b(BosonOp::P), 1.0)?.to_dense()?;
    Ok((x, p))
}

/// Diagonal of `e^{−iFt}`, `F = Σ ω_q/2 σz + ω_m a†a`, on `space` (qubits
/// then one mode).
pub fn free_phases(space: &HilbertSpace, omega_q: f64, omega_m: f64, t: f64) -> CVec {
    let nq = space.n_qubits();
    CVec::from_iterator(
        space.dim(),
        (0..space.dim()).map(|idx| {
            let lv = space.levels_of(idx);
            let sz: f64 = lv[..nq].iter().map(|&l| if l == 0 { 1.0 } else { -1.0 }).sum();
            let e = 0.5 * omega_q * sz + omega_m * lv[nq] as f64;
            C64::from_polar(1.0, -e * t)
        }),
    )
}

/// Simulation frame → ion frame: `ψ_I = e^{iFt} ψ_S`.
pub fn to_ion_frame(psi_sim: &CVec, space: &HilbertSpace, omega_q: f64, omega_m: f64, t: f64) -> CVec {
    let ph = free_phases(space, omega_q, omega_m, t);
    psi_sim.component_mul(&ph.map(|z| z.conj()))
}

/// Population in the top two Fock levels of the (last) mode.
pub fn fock_tail(space: &HilbertSpace, amps: &CVec) -> f64 {
    let n_max = match space.factors().last() {
        Some(Factor::Boson { n_max }) => *n_max,
        _ => return 0.0,
    };
    (0..space.dim())
        .filter(|&k| space.levels_of(k).last().is_some_and(|&m| m + 1 >= n_max))
        .map(|k| amps[k].norm_sqr())
        .sum()
}

/// `⟨a†a⟩` of a pure state on qubits ⊗ mode.
pub fn mean_phonons(space: &HilbertSpace, amps: &CVec) -> f64 {
    (0..space.dim())
        .map(|k| *space.levels_of(k).last().unwrap_or(&0) as f64 * amps[k].norm_sqr())
        .sum()
}

fn tail_guard(space: &HilbertSpace, amps: &CVec, what: &str) -> Result<()> {
    let tail = fock_tail(space, amps);
    if tail > FOCK_TAIL_LIMIT {
        return Err(Error::TruncationGuard(format!(
            "{what}: {tail:.2e} population in the top Fock levels"
        )));
    }
    Ok(())
}

/// The full single-ion drive, with `exp(iηX)` exponentiated once on the
/// truncated space and rotated to `exp(iη(a e^{−iνt} + a† e^{iνt}))` by
/// diagonal phases at each time.
#[derive(Clone, Debug)]
pub struct IonDrive {
    params: IonDriveParams,
    space: HilbertSpace,
    d0: CMat,
    d0_adj: CMat,
}

impl IonDrive {
    pub fn new(params: IonDriveParams, n_max: usize) -> Result<Self> {
        params.validate()?;
        if n_max < 10 {
            return invalid(format!("n_max = {n_max} is below the minimum of 10"));
        }
        let space = model_space(1, n_max)?;
        let d0 = displacement(params.eta, n_max);
        let d0_adj = d0.adjoint();
        Ok(Self {
            params,
            space,
            d0,
            d0_adj,
        })
    }

    pub fn params(&self) -> &IonDriveParams {
        &self.params
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    fn n_levels(&self) -> usize {
        self.d0.nrows()
    }

    /// `Σ Ω_n/2 e^{i(Δ_n t + φ_n)}`.
    fn carrier_coeff(&self, t: f64) -> C64 {
        let p = &self.params;
        let (dr, db) = p.sideband_detunings();
        C64::from_polar(0.5 * p.omega_r, dr * t + p.phi_r) + C64::from_polar(0.5 * p.omega_b, db * t + p.phi_b)
    }

    fn mode_phases(&self, t: f64) -> CVec {
        CVec::from_iterator(
            self.n_levels(),
            (0..self.n_levels()).map(|m| C64::from_polar(1.0, self.params.nu * t * m as f64)),
        )
    }

    /// `H(t) = σ⁺ ⊗ F(t) + σ⁻ ⊗ F(t)†`.
    pub fn matrix(&self, t: f64) -> CMat {
        let d = self.n_levels();
        let cf = self.carrier_coeff(t);
        let ph = self.mode_phases(t);
        let mut h = CMat::zeros(2 * d, 2 * d);
        for k in 0..d {
            for m in 0..d {
                let f = cf * self.d0[(m, k)] * ph[m] * ph[k].conj();
                h[(m, d + k)] = f;
                h[(d + k, m)] = f.conj();
            }
        }
        h
    }

    /// `−i H(t) y` without forming `H(t)`.
    pub fn rhs(&self, t: f64, y: &CVec) -> CVec {
        let d = self.n_levels();
        let cf = self.carrier_coeff(t);
        let ph = self.mode_phases(t);
        let ye = y.rows(0, d).component_mul(&ph.map(|z| z.conj()));
        let yg = y.rows(d, d).component_mul(&ph.map(|z| z.conj()));
        let fe = (&self.d0 * yg).component_mul(&ph) * cf;
        let fg = (&self.d0_adj * ye).component_mul(&ph) * cf.conj();
        let mut out = CVec::zeros(2 * d);
        out.rows_mut(0, d).copy_from(&(fe * -I));
        out.rows_mut(d, d).copy_from(&(fg * -I));
        out
    }

    /// Rotating-wave, lowest-order-in-η interaction: the simplified
    /// `iηΩ/2 σ⁺(a e^{−iδ_r t} + a† e^{−iδ_b t}) + h.c.` for first sidebands,
    /// `−η²Ω/4 σ⁺(a² e^{−iδ_r t} + a†² e^{−iδ_b t}) + h.c.` for second.
    pub fn rwa_interaction(&self, t: f64) -> CMat {
        let p = &self.params;
        let n_max = self.n_levels() - 1;
        let (lower, raise, pref) = match p.sideband_order {
            1 => (BosonOp::A, BosonOp::Adag, I * p.eta * 0.5),
            _ => (BosonOp::A2, BosonOp::Adag2, c(-0.25 * p.eta * p.eta, 0.0)),
        };
        let f = lower.matrix(n_max) * (pref * C64::from_polar(p.omega_r, -p.delta_r * t + p.phi_r))
            + raise.matrix(n_max) * (pref * C64::from_polar(p.omega_b, -p.delta_b * t + p.phi_b));
        let d = self.n_levels();
        let mut h = CMat::zeros(2 * d, 2 * d);
        h.view_mut((0, d), (d, d)).copy_from(&f);
        h.view_mut((d, 0), (d, d)).copy_from(&f.adjoint());
        h
    }

    pub fn schedule(&self) -> Schedule {
        let me = self.clone();
        Schedule::time_dependent(&self.space, Arc::new(move |t| me.matrix(t)))
    }

    fn opts(&self, tol: f64) -> OdeOptions {
        OdeOptions {
            max_dt: Some(0.5 * PI / self.params.nu),
            ..OdeOptions::with_tol(tol)
        }
    }

    /// Propagate `psi0` from `t = 0` through each of `times` (ascending).
    pub fn trajectory(&self, psi0: &CVec, times: &[f64], tol: f64) -> Result<IonRun> {
        if psi0.len() != self.space.dim() {
            return Err(Error::DimensionMismatch("initial state is not on the ion space".into()));
        }
        let mut states = Vec::with_capacity(times.len());
        let mut lamb_dicke = Vec::with_capacity(times.len());
        let (mut t, mut y) = (0.0, psi0.clone());
        for &tk in times {
            if tk < t {
                return invalid("times must be ascending from 0");
            }
            if tk > t {
                y = dp45(|s, v| self.rhs(s, v), t, tk, &y, &self.opts(tol))?.0;
                t = tk;
            }
            tail_guard(&self.space, &y, "ion drive")?;
            lamb_dicke.push(self.params.eta * mean_phonons(&self.space, &y).sqrt());
            states.push(y.clone());
        }
        Ok(IonRun {
            times: times.to_vec(),
            states,
            lamb_dicke,
            warnings: self.params.warnings(),
        })
    }
}

/// A full-drive run with its Lamb-Dicke monitor `η√⟨a†a⟩`.
#[derive(Clone, Debug)]
pub struct IonRun {
    pub times: Vec<f64>,
    pub states: Vec<CVec>,
    pub lamb_dicke: Vec<f64>,
    pub warnings: Vec<String>,
}

/// The ion drive as a generic time-dependent schedule.
pub fn ion_hamiltonian(p: &IonDriveParams, n_max: usize) -> Result<Schedule> {
    Ok(IonDrive::new(*p, n_max)?.schedule())
}

/// Analytic Jaynes–Cummings evolution of `|e,n⟩` (or `|g,n⟩`) under the JC
/// part of the effective QRM, returned in the ion frame.
pub fn jc_analytic(r: &RabiParams, n_max: usize, excited: bool, n: usize, t: f64) -> Result<PureState> {
    let space = model_space(1, n_max)?;
    // Doublet |e,m⟩, |g,m+1⟩ with coupling ⟨e,m|H|g,m+1⟩ = ig√(m+1).
    let m = if excited {
        n
    } else if n == 0 {
        return PureState::basis(&space, &[1, 0]);
    } else {
        n - 1
    };
    if m + 1 > n_max {
        return Err(Error::TruncationGuard(format!(
            "JC doublet at n = {} exceeds n_max",
            m + 1
        )));
    }
    let e1 = 0.5 * r.omega0_r + r.omega_r * m as f64;
    let e2 = -0.5 * r.omega0_r + r.omega_r * (m + 1) as f64;
    let k = c(0.0, r.g * ((m + 1) as f64).sqrt());
    let mut h = CMat::zeros(2, 2);
    h[(0, 0)] = c(e1, 0.0);
    h[(1, 1)] = c(e2, 0.0);
    h[(0, 1)] = k;
    h[(1, 0)] = k.conj();
    let v0 = if excited {
        CVec::from_vec(vec![ONE, ZERO])
    } else {
        CVec::from_vec(vec![ZERO, ONE])
    };
    let v = HermitianEig::new(&h)?.apply(t, &v0);
    let mut amps = CVec::zeros(space.dim());
    amps[space.index_of(&[0, m])?] = v[0] * C64::from_polar(1.0, e1 * t);
    amps[space.index_of(&[1, m + 1])?] = v[1] * C64::from_polar(1.0, e2 * t);
    PureState::new(&space, amps)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RegimeLabel {
    JC,
    AJC,
    TwoFoldDispersive,
    USC,
    DSC,
    Decoupling,
    Intermediate,
    Dirac,
}

impl RegimeLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeLabel::JC => "JC",
            RegimeLabel::AJC => "AJC",
            RegimeLabel::TwoFoldDispersive => "TwoFoldDispersive",
            RegimeLabel::USC => "USC",
            RegimeLabel::DSC => "DSC",
            RegimeLabel::Decoupling => "Decoupling",
            RegimeLabel::Intermediate => "Intermediate",
            RegimeLabel::Dirac => "Dirac",
        }
    }
}

fn much_less(a: f64, b: f64, small: f64) -> bool {
    a.abs() < small * b.abs()
}

/// Precedence Dirac → JC → AJC → Decoupling → TwoFoldDispersive → DSC → USC
/// → Intermediate, with "≪" read as a ratio below `small`.
pub fn classify_regime(r: &RabiParams, small: f64) -> RegimeLabel {
    let (w, w0, g) = (r.omega_r, r.omega0_r, r.g.abs());
    if w == 0.0 {
        return RegimeLabel::Dirac;
    }
    let weak = much_less(g, w, small) && much_less(g, w0, small);
    if weak && much_less(w - w0, w + w0, small) {
        return RegimeLabel::JC;
    }
    if weak && much_less(w + w0, w - w0, small) {
        return RegimeLabel::AJC;
    }
    if much_less(w0, g, small) && much_less(g, w, small) {
        return RegimeLabel::Decoupling;
    }
    if [w, w0, w + w0, w - w0].iter().all(|&f| much_less(g, f, small)) {
        return RegimeLabel::TwoFoldDispersive;
    }
    if w.abs() < g {
        return RegimeLabel::DSC;
    }
    if w.abs() < 10.0 * g {
        return RegimeLabel::USC;
    }
    RegimeLabel::Intermediate
}

/// Parity `(−1)^N Πσz_i (−1)^{a†a}` of the (linear) Rabi/Dicke models as a
/// diagonal; `|g,0⟩` has parity +1.
pub fn rabi_parity(space: &HilbertSpace) -> Vec<f64> {
    let nq = space.n_qubits();
    (0..space.dim())
        .map(|idx| {
            let lv = space.levels_of(idx);
            let excited = lv[..nq].iter().filter(|&&l| l == 0).count();
            // (−1)^N Πσz = (−1)^{#g}·(−1)^N = (−1)^{#e}.
            if (excited + lv[nq]).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            }
        })
        .collect()
}

/// Generalized parity `Π = (−1)^N Πσz_i exp(iπa†a/2)` as a diagonal.
pub fn generalized_parity(space: &HilbertSpace) -> Vec<C64> {
    let nq = space.n_qubits();
    let quarter = [ONE, I, -ONE, -I];
    (0..space.dim())
        .map(|idx| {
            let lv = space.levels_of(idx);
            let excited = lv[..nq].iter().filter(|&&l| l == 0).count();
            let s = if excited % 2 == 0 { ONE } else { -ONE };
            s * quarter[lv[nq] % 4]
        })
        .collect()
}

pub fn generalized_parity_matrix(space: &HilbertSpace) -> CMat {
    CMat::from_diagonal(&CVec::from_vec(generalized_parity(space)))
}

/// Result of a linear coupling ramp `H(g) = H0 + g H1`, `g(t) = g_f t/Δt`.
#[derive(Clone, Debug)]
pub struct AdiabaticTrace {
    pub times: Vec<f64>,
    pub couplings: Vec<f64>,
    /// `|⟨G(t)|ψ(t)⟩|²` at each checkpoint.
    pub fidelity: Vec<f64>,
    pub final_fidelity: f64,
    pub final_state: CVec,
    /// Checkpoints whose instantaneous ground state was degenerate (gap < 1e−9).
    pub degenerate: Vec<usize>,
}

fn ground_state(h: &CMat) -> Result<(CVec, f64)> {
    let eig = HermitianEig::new(h)?;
    let order = eig.order();
    let gap = if order.len() > 1 {
        eig.values[order[1]] - eig.values[order[0]]
    } else {
        f64::INFINITY
    };
    Ok((eig.vectors.column(order[0]).into_owned(), gap))
}

/// Ramp from the ground state of `H(0⁺)` and record the overlap with the
/// instantaneous ground state on `checkpoints + 1` uniform times.
pub fn adiabatic_ground_state(
    h0: &CMat,
    h1: &CMat,
    g_final: f64,
    duration: f64,
    checkpoints: usize,
    tol: f64,
) -> Result<AdiabaticTrace> {
    if !(duration > 0.0) {
        return invalid("ramp duration must be positive");
    }
    if h0.shape() != h1.shape() || h0.nrows() != h0.ncols() {
        return Err(Error::DimensionMismatch(
            "ramp generators must be square and equal".into(),
        ));
    }
    let checkpoints = checkpoints.max(1);
    let (mut psi, gap0) = ground_state(h0)?;
    let mut degenerate = Vec::new();
    if gap0 < 1e-9 {
        // Resolve the zero-coupling degeneracy in the direction of the ramp.
        psi = ground_state(&(h0 + h1 * c(1e-6 * g_final, 0.0)))?.0;
        degenerate.push(0);
    }
    let rate = g_final / duration;
    let mut prev = psi.clone();
    let mut times = Vec::with_capacity(checkpoints + 1);
    let mut couplings = Vec::with_capacity(checkpoints + 1);
    let mut fidelity = Vec::with_capacity(checkpoints + 1);
    let mut t = 0.0;
    for k in 0..=checkpoints {
        let tk = duration * k as f64 / checkpoints as f64;
        if tk > t {
            psi = dp45(
                |s, v| (h0 * v + (h1 * v) * c(rate * s, 0.0)) * -I,
                t,
                tk,
                &psi,
                &OdeOptions::with_tol(tol),
            )?
            .0;
            t = tk;
        }
        let gk = rate * tk;
        let (mut gs, gap) = ground_state(&(h0 + h1 * c(gk, 0.0)))?;
        if gap < 1e-9 && k > 0 {
            degenerate.push(k);
        }
        let ov = prev.dotc(&gs);
        if ov.norm() > 0.0 {
            gs *= ov.conj() / ov.norm();
        }
        fidelity.push(gs.dotc(&psi).norm_sqr());
        prev = gs;
        times.push(tk);
        couplings.push(gk);
    }
    let final_fidelity = *fidelity.last().unwrap_or(&1.0);
    Ok(AdiabaticTrace {
        times,
        couplings,
        fidelity,
        final_fidelity,
        final_state: psi,
        degenerate,
    })
}

/// `(H0, H1)` with `H_QRM(g) = H0 + g H1`.
pub fn qrm_ramp(r: &RabiParams, n_max: usize) -> Result<(CMat, CMat)> {
    let h0 = dicke_hamiltonian(&RabiParams { g: 0.0, ..*r }, n_max)?.to_dense()?;
    let h1 = dicke_hamiltonian(&RabiParams { g: 1.0, ..*r }, n_max)?.to_dense()? - &h0;
    Ok((h0, h1))
}

/// `(H0, H1)` with `H_2ph(g) = H0 + g H1`.
pub fn two_photon_ramp(tp: &TwoPhotonParams, n_max: usize) -> Result<(CMat, CMat)> {
    let h0 = two_photon_hamiltonian(&TwoPhotonParams { g: 0.0, ..*tp }, n_max)?.to_dense()?;
    let h1 = two_photon_hamiltonian(&TwoPhotonParams { g: 1.0, ..*tp }, n_max)?.to_dense()? - &h0;
    Ok((h0, h1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParityLabel {
    PlusOne,
    MinusOne,
    PlusI,
    MinusI,
}

impl ParityLabel {
    pub const ALL: [ParityLabel; 4] = [
        ParityLabel::PlusOne,
        ParityLabel::PlusI,
        ParityLabel::MinusOne,
        ParityLabel::MinusI,
    ];

    pub fn value(&self) -> C64 {
        match self {
            ParityLabel::PlusOne => ONE,
            ParityLabel::MinusOne => -ONE,
            ParityLabel::PlusI => I,
            ParityLabel::MinusI => -I,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ParityLabel::PlusOne => "+1",
            ParityLabel::MinusOne => "-1",
            ParityLabel::PlusI => "+i",
            ParityLabel::MinusI => "-i",
        }
    }

    fn of(z: C64) -> ParityLabel {
        *Self::ALL
            .iter()
            .min_by(|a, b| (a.value() - z).norm().total_cmp(&(b.value() - z).norm()))
            .expect("nonempty")
    }
}

/// One eigenstate of a spectral sweep.
#[derive(Clone, Debug)]
pub struct Level {
    pub energy: f64,
    pub parity: ParityLabel,
    /// Weight of the eigenvector in its assigned parity sector; below 0.999
    /// means the sectors mixed, usually a truncation problem.
    pub parity_weight: f64,
    pub photons: f64,
    /// Shift against the `n_max + 10` spectrum.
    pub truncation_shift: f64,
}

#[derive(Clone, Debug)]
pub struct SpectrumPoint {
    pub g: f64,
    pub levels: Vec<Level>,
}

impl SpectrumPoint {
    /// Levels whose energy moved by less than `tol` when `n_max` grew by 10.
    pub fn converged(&self, tol: f64) -> usize {
        self.levels.iter().take_while(|l| l.truncation_shift < tol).count()
    }

    /// Smallest gap between consecutive levels among the first `k`.
    pub fn min_spacing(&self, k: usize) -> f64 {
        self.levels
            .iter()
            .take(k)
            .collect::<Vec<_>>()
            .windows(2)
            .map(|w| w[1].energy - w[0].energy)
            .fold(f64::INFINITY, f64::min)
    }
}

fn lowest_levels(h: &CMat, space: &HilbertSpace, n_levels: usize) -> Result<Vec<(f64, ParityLabel, f64, f64)>> {
    let eig = HermitianEig::new(h)?;
    let parity = generalized_parity(space);
    let order = eig.order();
    Ok(order
        .iter()
        .take(n_levels)
        .map(|&j| {
            let v = eig.vectors.column(j);
            let mut weights = [0.0; 4];
            for (k, p) in parity.iter().enumerate() {
                let idx = ParityLabel::ALL
                    .iter()
                    .position(|l| *l == ParityLabel::of(*p))
                    .unwrap_or(0);
                weights[idx] += v[k].norm_sqr();
            }
            let (best, w) = weights
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, w)| (ParityLabel::ALL[i], *w))
                .unwrap_or((ParityLabel::PlusOne, 0.0));
            let amps = v.into_owned();
            (eig.values[j], best, w, mean_phonons(space, &amps))
        })
        .collect())
}

/// Lowest `n_levels` of the two-photon model for each coupling in `g_grid`,
/// with parity labels and a truncation check at `n_max + 10`. Grid points run
/// in parallel; output order follows the grid.
pub fn two_photon_spectrum(
    base: &TwoPhotonParams,
    g_grid: &[f64],
    n_levels: usize,
    n_max: usize,
) -> Result<Vec<SpectrumPoint>> {
    let dim = (1usize << base.n_qubits) * (n_max + 1);
    if n_levels == 0 || n_levels > dim / 4 {
        return invalid(format!("n_levels must be in 1..={}", dim / 4));
    }
    let points = par::map_slice(g_grid, |&g| -> Result<SpectrumPoint> {
        let tp = TwoPhotonParams { g, ..*base };
        let space = model_space(tp.n_qubits, n_max)?;
        let big = model_space(tp.n_qubits, n_max + 10)?;
        let lo = lowest_levels(&two_photon_hamiltonian(&tp, n_max)?.to_dense()?, &space, n_levels)?;
        let hi = lowest_levels(&two_photon_hamiltonian(&tp, n_max + 10)?.to_dense()?, &big, n_levels)?;
        let levels = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| Level {
                energy: a.0,
                parity: a.1,
                parity_weight: a.2,
                photons: a.3,
                truncation_shift: (a.0 - b.0).abs(),
            })
            .collect();
        Ok(SpectrumPoint { g, levels })
    });
    points.into_iter().collect()
}

/// Per-point collapse signatures.
#[derive(Clone, Debug)]
pub struct CollapseRow {
    pub g: f64,
    /// Smallest spacing among the lowest `k` levels.
    pub min_spacing: f64,
    /// `⟨a†a⟩` of the lowest levels, in order.
    pub photons: Vec<f64>,
    /// `(ω − 2g, ω + 2g)`.
    pub potential: (f64, f64),
    pub converged_levels: usize,
}

pub fn collapse_diagnostics(base: &TwoPhotonParams, sweep: &[SpectrumPoint], k: usize) -> Vec<CollapseRow> {
    sweep
        .iter()
        .map(|p| CollapseRow {
            g: p.g,
            min_spacing: p.min_spacing(k),
            photons: p.levels.iter().take(k).map(|l| l.photons).collect(),
            potential: TwoPhotonParams { g: p.g, ..*base }.potential_coefficients(),
            converged_levels: p.converged(1e-4 * base.omega.abs()),
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpectrumClass {
    PurePoint,
    CollapsePoint,
    Continuous,
}

/// Roots `±ω̄/2 ± √(ω̄²/4 − 1)` of `x⁴ + x²(2 − ω̄²) + 1 = 0`, ordered
/// `γ1..γ4` as `(+,+), (+,−), (−,+), (−,−)`.
pub fn characteristic_exponents(omega_bar: f64) -> Result<([C64; 4], SpectrumClass)> {
    if !(omega_bar > 0.0) || !omega_bar.is_finite() {
        return invalid("ω̄ must be positive and finite");
    }
    let h = 0.5 * omega_bar;
    let root = c(h * h - 1.0, 0.0).sqrt();
    let gammas = [c(h, 0.0) + root, c(h, 0.0) - root, c(-h, 0.0) + root, c(-h, 0.0) - root];
    let class = if (h - 1.0).abs() <= 1e-12 {
        SpectrumClass::CollapsePoint
    } else if h > 1.0 {
        SpectrumClass::PurePoint
    } else {
        SpectrumClass::Continuous
    };
    Ok((gammas, class))
}

/// How the `exp(∓i n σ_i t)` evolutions of the parity protocol are realized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ParityProtocol {
    /// Exact `±nσ_i` evolutions.
    Ideal,
    /// A red sideband detuned by `δ = ratio·λ` (`λ = ηΩ₀/2`), whose
    /// second-order generator `(λ²/δ)(a†aσz + |e⟩⟨e|)` is corrected by a
    /// carrier-style `σz` rotation; `σx` evolutions are conjugated by `σy`
    /// rotations.
    Dispersive { ratio: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParityMeasurement {
    pub re: f64,
    pub im: f64,
    /// `⟨exp(+inσxπ/2)σz⟩, ⟨exp(−inσxπ/2)σz⟩, ⟨exp(+inσxπ/2)σy⟩, ⟨exp(−inσxπ/2)σy⟩`.
    pub components: [f64; 4],
    /// `⟨Π⟩` by direct application.
    pub direct: C64,
}

impl ParityMeasurement {
    pub fn value(&self) -> C64 {
        c(self.re, self.im)
    }
}

fn local_qubit(m: &CMat, n_max: usize) -> CMat {
    m.kronecker(&CMat::identity(n_max + 1, n_max + 1))
}

fn n_sigma(axis: QubitOp, n_max: usize) -> CMat {
    axis.matrix().kronecker(&BosonOp::N.matrix(n_max))
}

/// `exp(−i s nσz t)` through the dispersive red sideband.
fn dispersive_nz(sign: f64, t: f64, ratio: f64, n_max: usize) -> Result<CMat> {
    if !(ratio > 0.0) {
        return invalid("dispersive ratio must be positive");
    }
    let lambda = 1.0;
    let delta = sign * ratio * lambda;
    let kappa = lambda * lambda / delta;
    let tau = t / kappa.abs();
    let a = BosonOp::A.matrix(n_max);
    let sp = local_qubit(&QubitOp::SigmaPlus.matrix(), n_max);
    let h_lower = &sp * QubitOp::I.matrix().kronecker(&a) * c(lambda, 0.0);
    let h0 = &h_lower + h_lower.adjoint();
    // H(s) = V(s) H0 V(s)† with V(s) = exp(iδsσz/2), so
    // U(τ) = V(τ) exp(−i(H0 + δσz/2)τ) exactly.
    let z = local_qubit(&QubitOp::Z.matrix(), n_max);
    let rot = HermitianEig::new(&z)?.propagator(-0.5 * delta * tau);
    let u = rot * HermitianEig::new(&(h0 + &z * c(0.5 * delta, 0.0)))?.propagator(tau);
    // Remove the (κ/2)σz part accumulated alongside κ·nσz.
    let comp = HermitianEig::new(&z)?.propagator(-0.5 * kappa * tau);
    Ok(comp * u)
}

fn protocol_unitary(sign: f64, protocol: ParityProtocol, n_max: usize) -> Result<CMat> {
    // exp(−i s nσx t*) with t* = φ/2 = π/4.
    let t_star = FRAC_PI_4;
    match protocol {
        ParityProtocol::Ideal => {
            Ok(HermitianEig::new(&(n_sigma(QubitOp::X, n_max) * c(sign, 0.0)))?.propagator(t_star))
        }
        ParityProtocol::Dispersive { ratio } => {
            // R σz R† = σx with R = exp(−iσyπ/4).
            let r = local_qubit(&HermitianEig::new(&QubitOp::Y.matrix())?.propagator(FRAC_PI_4), n_max);
            let uz = dispersive_nz(sign, t_star, ratio, n_max)?;
            Ok(&r * uz * r.adjoint())
        }
    }
}

/// Estimate `Re⟨Π⟩ = −½(⟨e^{inσxπ/2}σz⟩ + ⟨e^{−inσxπ/2}σz⟩)` and
/// `Im⟨Π⟩ = ½(⟨e^{inσxπ/2}σy⟩ − ⟨e^{−inσxπ/2}σy⟩)` from evolutions under
/// `∓nσx` for `t* = π/4` followed by Pauli readout. `shots` replaces each
/// readout by a binomial estimate.
pub fn parity_measurement<R: Rng + ?Sized>(
    state: &QState,
    protocol: ParityProtocol,
    shots: Option<(u64, &mut R)>,
) -> Result<ParityMeasurement> {
    let space = state.space().clone();
    let n_max = match space.factors() {
        [Factor::Qubit, Factor::Boson { n_max }] => *n_max,
        _ => return Err(Error::Unsupported("parity protocol needs one qubit ⊗ one mode".into())),
    };
    let amps_tail = match state {
        QState::Pure(p) => fock_tail(&space, p.amplitudes()),
        QState::Mixed(r) => {
            let diag = r.matrix().diagonal().map(|z| C64::from(z.re.max(0.0).sqrt()));
            fock_tail(&space, &diag)
        }
    };
    if amps_tail > FOCK_TAIL_LIMIT {
        return Err(Error::TruncationGuard(format!(
            "parity protocol: {amps_tail:.2e} population in the top Fock levels"
        )));
    }
    let sz = local_qubit(&QubitOp::Z.matrix(), n_max);
    let sy = local_qubit(&QubitOp::Y.matrix(), n_max);
    let mut shots = shots;
    let mut read = |u: &CMat, obs: &CMat| -> Result<f64> {
        let op = u.adjoint() * obs * u;
        let exact = expectation_dense(state, &op)?.re.clamp(-1.0, 1.0);
        Ok(match shots.as_mut() {
            None => exact,
            Some((n, rng)) => {
                let p = 0.5 * (1.0 + exact);
                let k = Binomial::new(*n, p)
                    .map_err(|e| Error::InvalidArgument(e.to_string()))?
                    .sample(&mut **rng);
                2.0 * k as f64 / *n as f64 - 1.0
            }
        })
    };
    // e^{±inσxπ/2}σ_j is read as σ_j after evolving under H = ±nσx for π/4.
    let u_plus = protocol_unitary(1.0, protocol, n_max)?;
    let u_minus = protocol_unitary(-1.0, protocol, n_max)?;
    let comps = [
        read(&u_plus, &sz)?,
        read(&u_minus, &sz)?,
        read(&u_plus, &sy)?,
        read(&u_minus, &sy)?,
    ];
    let direct = expectation_dense(state, &generalized_parity_matrix(&space))?;
    Ok(ParityMeasurement {
        re: -0.5 * (comps[0] + comps[1]),
        im: 0.5 * (comps[2] - comps[3]),
        components: comps,
        direct,
    })
}

/// Detunings of the second-sideband drives from the breathing mode
/// `ν₂ = √3ν` of an ion chain, in units of `ν`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DickeGuard {
    /// `| sν − ν₂ |`: first-sideband resonance on the breathing mode.
    pub delta1: f64,
    /// `| sν − 2ν₂ |`: second-sideband resonance on the breathing mode.
    pub delta2: f64,
    /// Either detuning below `threshold`.
    pub flagged: bool,
}

/// `None` for a single ion, where no other mode exists.
pub fn dicke_mode_guard(n_ions: usize, sideband_order: u8, threshold: f64) -> Option<DickeGuard> {
    if n_ions < 2 {
        return None;
    }
    let s = sideband_order as f64;
    let nu2 = 3f64.sqrt();
    let delta1 = (s - nu2).abs();
    let delta2 = (s - 2.0 * nu2).abs();
    Some(DickeGuard {
        delta1,
        delta2,
        flagged: delta1 < threshold || delta2 < threshold,
    })
}

/// Fidelity of the full ion drive against an effective constant
/// Hamiltonian `h_sim` (simulation frame, free part `ω_q/2 σz + ω_m a†a`),
/// compared in the ion frame at each of `times`.
pub fn frame_fidelity(
    drive: &IonDrive,
    h_sim: &CMat,
    omega_q: f64,
    omega_m: f64,
    psi0: &CVec,
    times: &[f64],
    tol: f64,
) -> Result<Vec<f64>> {
    let run = drive.trajectory(psi0, times, tol)?;
    let eig = HermitianEig::new(h_sim)?;
    Ok(times
        .iter()
        .zip(&run.states)
        .map(|(&t, full)| {
            let eff = to_ion_frame(&eig.apply(t, psi0), drive.space(), omega_q, omega_m, t);
            eff.dotc(full).norm_sqr()
        })
        .collect())
}

/// Rabi period of the resonant JC doublet `|e,n⟩ ↔ |g,n+1⟩`: populations
/// return after `π/(g√(n+1))`.
pub fn jc_population_period(g: f64, n: usize) -> f64 {
    PI / (g * ((n + 1) as f64).sqrt())
}
