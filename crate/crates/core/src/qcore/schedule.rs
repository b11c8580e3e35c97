use std::fmt;
use std::sync::{Arc, OnceLock};

use super::expm::{unitary_exp, HermitianEig};
use super::ode::{dp45, OdeOptions};
use super::ops::{hermitian_deviation, OperatorSum};
use super::space::HilbertSpace;
use super::state::{DensityMatrix, PureState, QState};
use crate::error::{invalid, Error, Result};
use crate::{c, CMat, CVec};

/// Time-dependent generator `t ↦ H(t)` as a dense matrix.
pub type TdFn = Arc<dyn Fn(f64) -> CMat + Send + Sync>;

#[derive(Clone)]
pub enum Generator {
    Constant(CMat),
    TimeDependent(TdFn),
}

impl fmt::Debug for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Constant(m) => write!(f, "Constant({}x{})", m.nrows(), m.ncols()),
            Generator::TimeDependent(_) => write!(f, "TimeDependent"),
        }
    }
}

#[derive(Clone, Debug)]
struct Piece {
    t0: f64,
    t1: f64,
    gen: Generator,
    eig: Arc<OnceLock<HermitianEig>>,
}

impl Piece {
    fn new(t0: f64, t1: f64, gen: Generator) -> Self {
        Self {
            t0,
            t1,
            gen,
            eig: Arc::new(OnceLock::new()),
        }
    }

    fn eig(&self) -> &HermitianEig {
        self.eig.get_or_init(|| match &self.gen {
            Generator::Constant(h) => HermitianEig::new(h).expect("square by construction"),
            Generator::TimeDependent(_) => unreachable!("eig only for constant pieces"),
        })
    }
}

/// Piecewise Hamiltonian `H(t)`. Pieces are contiguous; a constant schedule
/// is a single piece over the whole real line.
#[derive(Clone, Debug)]
pub struct Schedule {
    space: HilbertSpace,
    pieces: Vec<Piece>,
}

impl Schedule {
    pub fn constant(op: &OperatorSum) -> Result<Self> {
        Self::constant_dense(op.space(), op.to_dense()?)
    }

    pub fn constant_dense(space: &HilbertSpace, h: CMat) -> Result<Self> {
        check_generator(space, &h)?;
        Ok(Self {
            space: space.clone(),
            pieces: vec![Piece::new(f64::NEG_INFINITY, f64::INFINITY, Generator::Constant(h))],
        })
    }

    pub fn zero(space: &HilbertSpace) -> Self {
        let d = space.dim();
        Self {
            space: space.clone(),
            pieces: vec![Piece::new(
                f64::NEG_INFINITY,
                f64::INFINITY,
                Generator::Constant(CMat::zeros(d, d)),
            )],
        }
    }

    /// A single time-dependent piece over the whole real line.
    pub fn time_dependent(space: &HilbertSpace, f: TdFn) -> Self {
        Self {
            space: space.clone(),
            pieces: vec![Piece::new(
                f64::NEG_INFINITY,
                f64::INFINITY,
                Generator::TimeDependent(f),
            )],
        }
    }

    /// Time-dependent generator built from an operator-sum closure.
    pub fn from_operator_fn(space: &HilbertSpace, f: impl Fn(f64) -> OperatorSum + Send + Sync + 'static) -> Self {
        Self::time_dependent(
            space,
            Arc::new(move |t| f(t).to_dense().expect("builder returns a valid operator")),
        )
    }

    /// Contiguous pieces `(t_start, t_end, generator)`.
    pub fn piecewise(space: &HilbertSpace, pieces: Vec<(f64, f64, Generator)>) -> Result<Self> {
        if pieces.is_empty() {
            return invalid("a schedule needs at least one piece");
        }
        for (k, (a, b, g)) in pieces.iter().enumerate() {
            if !(b > a) {
                return invalid(format!("piece {k} has t_end <= t_start"));
            }
            if k > 0 && pieces[k - 1].1 != *a {
                return invalid(format!("pieces {} and {k} are not contiguous", k - 1));
            }
            if let Generator::Constant(h) = g {
                check_generator(space, h)?;
            }
        }
        Ok(Self {
            space: space.clone(),
            pieces: pieces.into_iter().map(|(a, b, g)| Piece::new(a, b, g)).collect(),
        })
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn is_constant(&self) -> bool {
        self.pieces.iter().all(|p| matches!(p.gen, Generator::Constant(_)))
    }

    /// Dense `H(t)`.
    pub fn at(&self, t: f64) -> Result<CMat> {
        let p = self
            .pieces
            .iter()
            .find(|p| p.t0 <= t && t <= p.t1)
            .ok_or_else(|| Error::InvalidArgument(format!("schedule does not cover t = {t}")))?;
        Ok(match &p.gen {
            Generator::Constant(h) => h.clone(),
            Generator::TimeDependent(f) => f(t),
        })
    }

    /// The constant generator, if the schedule is a single constant piece.
    pub fn constant_matrix(&self) -> Option<&CMat> {
        match (self.pieces.len(), &self.pieces[0].gen) {
            (1, Generator::Constant(h)) => Some(h),
            _ => None,
        }
    }

    /// Segments `(piece, a, b)` covering `[lo, hi]` in increasing time.
    fn segments(&self, lo: f64, hi: f64) -> Result<Vec<(usize, f64, f64)>> {
        let mut out = Vec::new();
        if lo == hi {
            return Ok(out);
        }
        let mut cursor = lo;
        for (k, p) in self.pieces.iter().enumerate() {
            if p.t1 <= cursor || p.t0 >= hi {
                continue;
            }
            if p.t0 > cursor {
                break;
            }
            let b = p.t1.min(hi);
            out.push((k, cursor, b));
            cursor = b;
            if cursor >= hi {
                break;
            }
        }
        if cursor < hi {
            return invalid(format!("schedule does not cover [{lo}, {hi}]"));
        }
        Ok(out)
    }

    /// `U(t1; t0) v`, in either time direction. Constant pieces use a cached
    /// eigendecomposition, time-dependent pieces the adaptive integrator.
    pub fn propagate_vec(&self, v: &CVec, t0: f64, t1: f64, tol: f64) -> Result<CVec> {
        let (lo, hi) = if t1 >= t0 { (t0, t1) } else { (t1, t0) };
        let mut segs = self.segments(lo, hi)?;
        let forward = t1 >= t0;
        if !forward {
            segs.reverse();
        }
        let mut y = v.clone();
        for (k, a, b) in segs {
            let (from, to) = if forward { (a, b) } else { (b, a) };
            let p = &self.pieces[k];
            y = match &p.gen {
                Generator::Constant(_) => p.eig().apply(to - from, &y),
                Generator::TimeDependent(f) => {
                    let f = f.clone();
                    dp45(
                        move |t, y| (f(t) * y) * c(0.0, -1.0),
                        from,
                        to,
                        &y,
                        &OdeOptions::with_tol(tol),
                    )?
                    .0
                }
            };
        }
        Ok(y)
    }

    /// `U(t1; t0) M` for a block of column vectors.
    pub fn propagate_mat(&self, m: &CMat, t0: f64, t1: f64, tol: f64) -> Result<CMat> {
        let (lo, hi) = if t1 >= t0 { (t0, t1) } else { (t1, t0) };
        let mut segs = self.segments(lo, hi)?;
        let forward = t1 >= t0;
        if !forward {
            segs.reverse();
        }
        let (d, k) = (m.nrows(), m.ncols());
        let mut y = m.clone();
        for (idx, a, b) in segs {
            let (from, to) = if forward { (a, b) } else { (b, a) };
            let p = &self.pieces[idx];
            y = match &p.gen {
                Generator::Constant(_) => p.eig().propagator(to - from) * y,
                Generator::TimeDependent(f) => {
                    let f = f.clone();
                    let flat = CVec::from_column_slice(y.as_slice());
                    let (out, _) = dp45(
                        move |t, v| {
                            let ym = CMat::from_column_slice(d, k, v.as_slice());
                            let r = (f(t) * ym) * c(0.0, -1.0);
                            CVec::from_column_slice(r.as_slice())
                        },
                        from,
                        to,
                        &flat,
                        &OdeOptions::with_tol(tol),
                    )?;
                    CMat::from_column_slice(d, k, out.as_slice())
                }
            };
        }
        Ok(y)
    }

    /// Propagator `U(t1; t0)` by the cached-eigenbasis / integrator path.
    pub fn unitary(&self, t0: f64, t1: f64, tol: f64) -> Result<CMat> {
        let d = self.space.dim();
        self.propagate_mat(&CMat::identity(d, d), t0, t1, tol)
    }
}

fn check_generator(space: &HilbertSpace, h: &CMat) -> Result<()> {
    if h.nrows() != space.dim() || h.ncols() != space.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} generator for dimension {}",
            h.nrows(),
            h.ncols(),
            space.dim()
        )));
    }
    let dev = hermitian_deviation(h);
    if dev > 1e-10 {
        return Err(Error::Invariant(format!("generator non-Hermitian by {dev:e}")));
    }
    Ok(())
}

/// Result of [`evolve`]: the evolved state and how far its norm (or trace)
/// drifted from the input's.
#[derive(Clone, Debug)]
pub struct Evolved {
    pub state: QState,
    pub norm_drift: f64,
}

/// Exact evolution from `t0` to `t1 ≥ t0`.
///
/// Constant pieces use the Padé matrix exponential of `−iHΔt`; time-dependent
/// pieces integrate the Schrödinger equation with Dormand–Prince 5(4) at
/// local tolerance `tol`. Mixed states are evolved as `UρU†`.
pub fn evolve(state: &QState, h: &Schedule, t0: f64, t1: f64, tol: f64) -> Result<Evolved> {
    if t1 < t0 {
        return invalid(format!("evolve needs t1 >= t0, got {t0} -> {t1}"));
    }
    state.space().check_same(h.space())?;
    let before = state.norm();
    let out = match state {
        QState::Pure(p) => {
            let mut v = p.amplitudes().clone();
            for (k, a, b) in h.segments(t0, t1)? {
                v = match &h.pieces[k].gen {
                    Generator::Constant(m) => unitary_exp(m, b - a) * v,
                    Generator::TimeDependent(f) => {
                        let f = f.clone();
                        dp45(
                            move |t, y| (f(t) * y) * c(0.0, -1.0),
                            a,
                            b,
                            &v,
                            &OdeOptions::with_tol(tol),
                        )?
                        .0
                    }
                };
            }
            QState::Pure(PureState::new_unchecked(p.space(), v)?)
        }
        QState::Mixed(r) => {
            let u = propagator(h, t0, t1, tol)?;
            let m = &u * r.matrix() * u.adjoint();
            QState::Mixed(DensityMatrix::new_unchecked(r.space(), m)?)
        }
    };
    let norm_drift = (out.norm() - before).abs();
    Ok(Evolved { state: out, norm_drift })
}

/// `U(t1; t0)`. Backward spans return `U(t0; t1)†`.
pub fn propagator(h: &Schedule, t0: f64, t1: f64, tol: f64) -> Result<CMat> {
    if t1 < t0 {
        return Ok(propagator(h, t1, t0, tol)?.adjoint());
    }
    let d = h.space().dim();
    let mut u = CMat::identity(d, d);
    for (k, a, b) in h.segments(t0, t1)? {
        u = match &h.pieces[k].gen {
            Generator::Constant(m) => unitary_exp(m, b - a) * u,
            Generator::TimeDependent(_) => h.propagate_mat(&u, a, b, tol)?,
        };
    }
    Ok(u)
}

/// States at each of the (nondecreasing) `times`, starting from `state` at `t0`.
pub fn trajectory(state: &QState, h: &Schedule, t0: f64, times: &[f64], tol: f64) -> Result<Vec<QState>> {
    let mut out = Vec::with_capacity(times.len());
    let mut cur = state.clone();
    let mut t = t0;
    for &tk in times {
        cur = evolve(&cur, h, t, tk, tol)?.state;
        t = tk;
        out.push(cur.clone());
    }
    Ok(out)
}
