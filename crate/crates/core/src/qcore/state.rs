use super::ops::OperatorSum;
use super::space::HilbertSpace;
use crate::error::{invalid, Error, Result};
use crate::{c, CMat, CVec, C64, ZERO};

/// Norm tolerance for pure states; deviations are reported, not fixed.
pub const NORM_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    space: HilbertSpace,
    amps: CVec,
}

impl PureState {
    /// Checks length and that the norm is within 1 ± 1e−9.
    pub fn new(space: &HilbertSpace, amps: CVec) -> Result<Self> {
        let s = Self::new_unchecked(space, amps)?;
        let n = s.norm();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::Invariant(format!("state norm {n} is not 1")));
        }
        Ok(s)
    }

    /// Length-checked only; for intermediate, possibly unnormalized vectors.
    pub fn new_unchecked(space: &HilbertSpace, amps: CVec) -> Result<Self> {
        if amps.len() != space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for dimension {}",
                amps.len(),
                space.dim()
            )));
        }
        Ok(Self {
            space: space.clone(),
            amps,
        })
    }

    /// Explicitly normalize an arbitrary nonzero vector.
    pub fn normalized(space: &HilbertSpace, amps: CVec) -> Result<Self> {
        let n = amps.norm();
        if n == 0.0 {
            return invalid("cannot normalize the zero vector");
        }
        Self::new(space, amps / c(n, 0.0))
    }

    /// Product basis state from per-factor levels.
    pub fn basis(space: &HilbertSpace, levels: &[usize]) -> Result<Self> {
        let idx = space.index_of(levels)?;
        let mut v = CVec::zeros(space.dim());
        v[idx] = c(1.0, 0.0);
        Self::new(space, v)
    }

    /// Tensor product of per-factor local vectors (each normalized by caller).
    pub fn product(space: &HilbertSpace, locals: &[CVec]) -> Result<Self> {
        if locals.len() != space.n_factors() {
            return Err(Error::DimensionMismatch("one local vector per factor".into()));
        }
        let mut v = CVec::from_element(1, c(1.0, 0.0));
        for (l, f) in locals.iter().zip(space.factors()) {
            if l.len() != f.dim() {
                return Err(Error::DimensionMismatch(format!("local vector for {f:?}")));
            }
            v = v.kronecker(l);
        }
        Self::new(space, v)
    }

    /// Truncated coherent state `|α⟩` as a local vector (renormalized after truncation).
    pub fn coherent_local(alpha: C64, n_max: usize) -> CVec {
        let mut v = CVec::zeros(n_max + 1);
        let mut term = c((-alpha.norm_sqr() / 2.0).exp(), 0.0);
        v[0] = term;
        for n in 1..=n_max {
            term = term * alpha / c((n as f64).sqrt(), 0.0);
            v[n] = term;
        }
        let nrm = v.norm();
        v / c(nrm, 0.0)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amps
    }

    pub fn into_amplitudes(self) -> CVec {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            space: self.space.clone(),
            mat: &self.amps * self.amps.adjoint(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    space: HilbertSpace,
    mat: CMat,
}

impl DensityMatrix {
    /// Validates Hermiticity (1e−10), unit trace (1e−9) and positivity (−1e−8).
    pub fn new(space: &HilbertSpace, mat: CMat) -> Result<Self> {
        let d = Self::new_unchecked(space, mat)?;
        d.validate()?;
        Ok(d)
    }

    pub fn new_unchecked(space: &HilbertSpace, mat: CMat) -> Result<Self> {
        if mat.nrows() != space.dim() || mat.ncols() != space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for dimension {}",
                mat.nrows(),
                mat.ncols(),
                space.dim()
            )));
        }
        Ok(Self {
            space: space.clone(),
            mat,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let dev = super::ops::hermitian_deviation(&self.mat);
        if dev > 1e-10 {
            return Err(Error::Invariant(format!("density matrix non-Hermitian by {dev:e}")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > NORM_TOL {
            return Err(Error::Invariant(format!("density matrix trace {tr}")));
        }
        let lmin = self.min_eigenvalue();
        if lmin < -1e-8 {
            return Err(Error::Invariant(format!("density matrix eigenvalue {lmin}")));
        }
        Ok(())
    }

    /// Diagonal state with the given populations.
    pub fn diagonal(space: &HilbertSpace, probs: &[f64]) -> Result<Self> {
        if probs.len() != space.dim() {
            return Err(Error::DimensionMismatch("one probability per basis state".into()));
        }
        let mut m = CMat::zeros(space.dim(), space.dim());
        for (i, p) in probs.iter().enumerate() {
            m[(i, i)] = c(*p, 0.0);
        }
        Self::new(space, m)
    }

    pub fn maximally_mixed(space: &HilbertSpace) -> Self {
        let d = space.dim();
        Self {
            space: space.clone(),
            mat: CMat::identity(d, d) / c(d as f64, 0.0),
        }
    }

    /// Gibbs state `e^{−βH}/Z` of a Hermitian matrix.
    pub fn thermal(space: &HilbertSpace, h: &CMat, beta: f64) -> Result<Self> {
        let eig = super::expm::HermitianEig::new(h)?;
        let e0 = eig.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = eig.values.iter().map(|e| (-(e - e0) * beta).exp()).collect();
        let z: f64 = w.iter().sum();
        let mut m = CMat::zeros(h.nrows(), h.ncols());
        for (k, wk) in w.iter().enumerate() {
            let v = eig.vectors.column(k);
            m += (v * v.adjoint()) * c(wk / z, 0.0);
        }
        Self::new(space, m)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.mat + self.mat.adjoint()) * c(0.5, 0.0);
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).trace().re
    }
}

/// A state of either kind.
#[derive(Clone, Debug, PartialEq)]
pub enum QState {
    Pure(PureState),
    Mixed(DensityMatrix),
}

impl QState {
    pub fn space(&self) -> &HilbertSpace {
        match self {
            QState::Pure(p) => p.space(),
            QState::Mixed(m) => m.space(),
        }
    }

    pub fn to_density(&self) -> DensityMatrix {
        match self {
            QState::Pure(p) => p.to_density(),
            QState::Mixed(m) => m.clone(),
        }
    }

    /// `|ψ|` for pure states, `Tr ρ` for mixed.
    pub fn norm(&self) -> f64 {
        match self {
            QState::Pure(p) => p.norm(),
            QState::Mixed(m) => m.trace(),
        }
    }

    pub fn as_pure(&self) -> Option<&PureState> {
        match self {
            QState::Pure(p) => Some(p),
            QState::Mixed(_) => None,
        }
    }
}

impl From<PureState> for QState {
    fn from(p: PureState) -> Self {
        QState::Pure(p)
    }
}

impl From<DensityMatrix> for QState {
    fn from(m: DensityMatrix) -> Self {
        QState::Mixed(m)
    }
}

/// `⟨ψ|O|ψ⟩` or `Tr(Oρ)`.
///
/// For Hermitian-flagged operators the imaginary part is dropped when it is
/// below 1e−10; a larger one is an invariant breach.
pub fn expectation(state: &QState, op: &OperatorSum) -> Result<C64> {
    state.space().check_same(op.space())?;
    let m = op.to_dense()?;
    let v = expectation_dense(state, &m)?;
    if op.is_hermitian() {
        if v.im.abs() >= 1e-10 {
            return Err(Error::Invariant(format!(
                "Hermitian expectation has imaginary part {:e}",
                v.im
            )));
        }
        return Ok(c(v.re, 0.0));
    }
    Ok(v)
}

/// Expectation of a dense matrix, no Hermiticity handling.
pub fn expectation_dense(state: &QState, m: &CMat) -> Result<C64> {
    let d = state.space().dim();
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::DimensionMismatch("operator/state dimension".into()));
    }
    Ok(match state {
        QState::Pure(p) => p.amps.dotc(&(m * &p.amps)),
        QState::Mixed(r) => {
            let mut acc = ZERO;
            for i in 0..d {
                for k in 0..d {
                    acc += m[(i, k)] * r.mat[(k, i)];
                }
            }
            acc
        }
    })
}
