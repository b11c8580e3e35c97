use crate::error::{invalid, Error, Result};

/// Hard cap on the total dimension of any dense space.
pub const MAX_DIM: usize = 16384;
/// Default bosonic truncation.
pub const DEFAULT_N_MAX: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Factor {
    Qubit,
    /// Fock space truncated at `n_max` quanta (dimension `n_max + 1`).
    Boson {
        n_max: usize,
    },
}

impl Factor {
    pub fn dim(&self) -> usize {
        match self {
            Factor::Qubit => 2,
            Factor::Boson { n_max } => n_max + 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    factors: Vec<Factor>,
    dim: usize,
}

impl HilbertSpace {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return invalid("a Hilbert space needs at least one factor");
        }
        let mut dim = 1usize;
        for f in &factors {
            if let Factor::Boson { n_max } = f {
                if *n_max < 1 {
                    return invalid("bosonic factors need n_max >= 1");
                }
            }
            dim = dim.saturating_mul(f.dim());
            if dim > MAX_DIM {
                return Err(Error::DimensionCap { dim, cap: MAX_DIM });
            }
        }
        Ok(Self { factors, dim })
    }

    pub fn qubits(n: usize) -> Result<Self> {
        Self::new(vec![Factor::Qubit; n])
    }

    /// `n_qubits` qubits followed by one bosonic mode.
    pub fn qubits_boson(n_qubits: usize, n_max: usize) -> Result<Self> {
        let mut f = vec![Factor::Qubit; n_qubits];
        f.push(Factor::Boson { n_max });
        Self::new(f)
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn n_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_qubits_only(&self) -> bool {
        self.factors.iter().all(|f| *f == Factor::Qubit)
    }

    pub fn n_qubits(&self) -> usize {
        self.factors.iter().filter(|f| **f == Factor::Qubit).count()
    }

    pub fn boson_sites(&self) -> Vec<usize> {
        (0..self.factors.len())
            .filter(|&k| matches!(self.factors[k], Factor::Boson { .. }))
            .collect()
    }

    /// Stride of each factor in the flattened index (factor 0 is slowest).
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.factors.len()];
        for k in (0..self.factors.len().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.factors[k + 1].dim();
        }
        s
    }

    /// Flattened index of a per-factor level tuple.
    pub fn index_of(&self, levels: &[usize]) -> Result<usize> {
        if levels.len() != self.factors.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} levels for {} factors",
                levels.len(),
                self.factors.len()
            )));
        }
        let mut idx = 0;
        for (f, &l) in self.factors.iter().zip(levels) {
            if l >= f.dim() {
                return invalid(format!("level {l} out of range for {f:?}"));
            }
            idx = idx * f.dim() + l;
        }
        Ok(idx)
    }

    /// Inverse of [`index_of`](Self::index_of).
    pub fn levels_of(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for k in (0..self.factors.len()).rev() {
            let d = self.factors[k].dim();
            out[k] = idx % d;
            idx /= d;
        }
        out
    }

    /// Same layout with every bosonic factor truncated at `n_max`.
    pub fn with_n_max(&self, n_max: usize) -> Result<Self> {
        Self::new(
            self.factors
                .iter()
                .map(|f| match f {
                    Factor::Boson { .. } => Factor::Boson { n_max },
                    q => *q,
                })
                .collect(),
        )
    }

    /// A new space with `f` inserted as factor 0.
    pub fn prepend(&self, f: Factor) -> Result<Self> {
        let mut v = vec![f];
        v.extend_from_slice(&self.factors);
        Self::new(v)
    }

    pub(crate) fn check_same(&self, other: &Self) -> Result<()> {
        if self != other {
            return Err(Error::DimensionMismatch(format!(
                "spaces differ: {:?} vs {:?}",
                self.factors, other.factors
            )));
        }
        Ok(())
    }
}
