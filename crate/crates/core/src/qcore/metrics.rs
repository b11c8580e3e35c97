use super::space::HilbertSpace;
use super::state::{DensityMatrix, PureState};
use crate::error::{invalid, Error, Result};
use crate::{CMat, CVec, ZERO};

/// `|⟨a|b⟩|²`.
pub fn fidelity(a: &PureState, b: &PureState) -> Result<f64> {
    a.space().check_same(b.space())?;
    Ok(fidelity_vec(a.amplitudes(), b.amplitudes()).clamp(0.0, 1.0))
}

/// `|⟨a|b⟩|²` on raw vectors.
pub fn fidelity_vec(a: &CVec, b: &CVec) -> f64 {
    a.dotc(b).norm_sqr()
}

/// Sum of singular values.
pub fn trace_norm(m: &CMat) -> f64 {
    m.singular_values().iter().sum()
}

/// Largest singular value.
pub fn op_norm(m: &CMat) -> f64 {
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// `‖ρ1 − ρ2‖₁ / 2`.
pub fn trace_distance(r1: &DensityMatrix, r2: &DensityMatrix) -> Result<f64> {
    r1.space().check_same(r2.space())?;
    Ok((0.5 * trace_norm(&(r1.matrix() - r2.matrix()))).clamp(0.0, 1.0))
}

/// Reduced state on the factors listed in `keep` (kept in ascending order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let (space, m) = partial_trace_matrix(rho.space(), rho.matrix(), keep)?;
    let tr_in = rho.trace();
    let out = DensityMatrix::new_unchecked(&space, m)?;
    let drift = (out.trace() - tr_in).abs();
    if drift > 1e-12 {
        return Err(Error::Invariant(format!(
            "partial trace changed the trace by {drift:e}"
        )));
    }
    Ok(out)
}

/// Partial trace on a raw matrix.
pub fn partial_trace_matrix(space: &HilbertSpace, m: &CMat, keep: &[usize]) -> Result<(HilbertSpace, CMat)> {
    let n = space.n_factors();
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.is_empty() {
        return invalid("keep at least one factor");
    }
    if keep.iter().any(|&k| k >= n) {
        return Err(Error::DimensionMismatch(format!(
            "keep index out of range for {n} factors"
        )));
    }
    let factors = space.factors();
    let kept_space = HilbertSpace::new(keep.iter().map(|&k| factors[k]).collect())?;
    let traced: Vec<usize> = (0..n).filter(|k| !keep.contains(k)).collect();
    let d = space.dim();
    let dk = kept_space.dim();
    let dt: usize = traced.iter().map(|&k| factors[k].dim()).product();
    // full index -> (kept index, traced index)
    let mut split = vec![(0usize, 0usize); d];
    for (i, slot) in split.iter_mut().enumerate() {
        let lv = space.levels_of(i);
        let mut ki = 0;
        for &k in &keep {
            ki = ki * factors[k].dim() + lv[k];
        }
        let mut ti = 0;
        for &k in &traced {
            ti = ti * factors[k].dim() + lv[k];
        }
        *slot = (ki, ti);
    }
    let mut by_traced: Vec<Vec<(usize, usize)>> = vec![Vec::new(); dt];
    for (i, &(ki, ti)) in split.iter().enumerate() {
        by_traced[ti].push((i, ki));
    }
    let mut out = CMat::from_element(dk, dk, ZERO);
    for group in &by_traced {
        for &(i, ki) in group {
            for &(j, kj) in group {
                out[(ki, kj)] += m[(i, j)];
            }
        }
    }
    Ok((kept_space, out))
}
