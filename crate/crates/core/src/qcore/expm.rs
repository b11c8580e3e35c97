use crate::error::{Error, Result};
use crate::{c, CMat, CVec, C64};

/// Matrix exponential (Padé approximant with scaling and squaring).
pub fn expm(a: &CMat) -> CMat {
    a.clone().exp()
}

/// `exp(−i h t)`.
pub fn unitary_exp(h: &CMat, t: f64) -> CMat {
    expm(&(h * c(0.0, -t)))
}

/// Eigendecomposition of a Hermitian matrix, reused across many times.
#[derive(Clone, Debug)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermitianEig {
    pub fn new(h: &CMat) -> Result<Self> {
        if h.nrows() != h.ncols() {
            return Err(Error::DimensionMismatch("Hermitian eig needs a square matrix".into()));
        }
        let sym = (h + h.adjoint()) * c(0.5, 0.0);
        let eig = sym.symmetric_eigen();
        Ok(Self {
            values: eig.eigenvalues.iter().cloned().collect(),
            vectors: eig.eigenvectors,
        })
    }

    /// `exp(−i H t)`.
    pub fn propagator(&self, t: f64) -> CMat {
        self.function(|l| C64::from_polar(1.0, -l * t))
    }

    /// `f(H)` for a scalar function of the eigenvalues.
    pub fn function(&self, f: impl Fn(f64) -> C64) -> CMat {
        let mut vd = self.vectors.clone();
        for (j, l) in self.values.iter().enumerate() {
            let mut col = vd.column_mut(j);
            col *= f(*l);
        }
        vd * self.vectors.adjoint()
    }

    /// `exp(−i H t) v` without forming the propagator.
    pub fn apply(&self, t: f64, v: &CVec) -> CVec {
        let mut w = self.vectors.ad_mul(v);
        for (k, l) in self.values.iter().enumerate() {
            w[k] *= C64::from_polar(1.0, -l * t);
        }
        &self.vectors * w
    }

    /// Indices of the eigenvalues sorted ascending.
    pub fn order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.values.len()).collect();
        idx.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]));
        idx
    }
}
