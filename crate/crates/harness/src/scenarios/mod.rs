mod cqed;
mod eqs;
mod ion;
mod open;
mod spins;
mod timecorr;

use crate::error::{HarnessError, Result};
use crate::Scenario;

pub(crate) static REGISTRY: &[Scenario] = &[
    timecorr::TWO_POINT,
    timecorr::THREE_POINT_GRID,
    open::RECONSTRUCTION,
    open::BOUNDS,
    eqs::CONCURRENCE,
    eqs::TANGLE,
    ion::REGIMES,
    ion::ADIABATIC,
    ion::TWO_PHOTON_SPECTRUM,
    ion::TWO_PHOTON_DYNAMICS,
    spins::HEISENBERG,
    cqed::RABI,
];

/// `points` uniform samples of `[0, t_max]`, endpoints included.
pub(crate) fn grid(t_max: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(HarnessError::Config("points must be at least 2".into()));
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(HarnessError::Config("t_max must be positive".into()));
    }
    Ok((0..points).map(|k| t_max * k as f64 / (points - 1) as f64).collect())
}

pub(crate) fn max_of(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, f64::max)
}

pub(crate) fn min_of(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(f64::INFINITY, f64::min)
}
