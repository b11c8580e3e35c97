//! Dormand–Prince 5(4) with adaptive steps.

use crate::error::{Error, Result};
use crate::{c, CVec};

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    /// Local error target relative to `max(1, |y|∞)`.
    pub tol: f64,
    pub max_steps: usize,
    /// Optional cap on the step size (useful for rapidly oscillating drives).
    pub max_dt: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            tol: super::DEFAULT_TOL,
            max_steps: 5_000_000,
            max_dt: None,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// `max_i |v_i|`.
pub fn inf_norm(v: &CVec) -> f64 {
    v.iter().fold(0.0, |m, z| m.max(z.norm()))
}

fn comb(y: &CVec, h: f64, terms: &[(f64, &CVec)]) -> CVec {
    let mut out = y.clone();
    for (w, k) in terms {
        if *w != 0.0 {
            out.axpy(c(h * w, 0.0), k, c(1.0, 0.0));
        }
    }
    out
}

/// Integrate `y' = f(t, y)` from `t0` to `t1` (either direction).
pub fn dp45<F>(mut f: F, t0: f64, t1: f64, y0: &CVec, opts: &OdeOptions) -> Result<(CVec, OdeStats)>
where
    F: FnMut(f64, &CVec) -> CVec,
{
    let mut stats = OdeStats::default();
    let span = t1 - t0;
    if span == 0.0 {
        return Ok((y0.clone(), stats));
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0.clone();
    let mut k1 = f(t, &y);
    let scale0 = inf_norm(&y).max(1.0);
    let d1 = inf_norm(&k1) / scale0;
    let mut h = if d1 > 1e-12 { 0.01 / d1 } else { 1e-3 * span.abs() };
    h = h.min(span.abs());
    if let Some(m) = opts.max_dt {
        h = h.min(m);
    }
    let mut steps = 0usize;
    while (t1 - t) * dir > 0.0 {
        if steps >= opts.max_steps {
            return Err(Error::Tolerance(format!(
                "{} steps exhausted at t = {t} of [{t0}, {t1}]",
                opts.max_steps
            )));
        }
        steps += 1;
        let last = (t1 - t).abs() <= h * (1.0 + 1e-12);
        let hs = if last { t1 - t } else { dir * h };
        let k2 = f(t + C2 * hs, &comb(&y, hs, &[(A21, &k1)]));
        let k3 = f(t + C3 * hs, &comb(&y, hs, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * hs, &comb(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            t + C5 * hs,
            &comb(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + hs,
            &comb(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = comb(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(t + hs, &y_new);
        let err = comb(
            &CVec::zeros(y.len()),
            hs,
            &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
        );
        let scale = inf_norm(&y).max(inf_norm(&y_new)).max(1.0);
        let en = inf_norm(&err) / (opts.tol * scale);
        if !en.is_finite() {
            return Err(Error::Tolerance(format!("non-finite error estimate at t = {t}")));
        }
        if en <= 1.0 {
            t = if last { t1 } else { t + hs };
            y = y_new;
            k1 = k7;
            stats.accepted += 1;
        } else {
            stats.rejected += 1;
        }
        let fac = if en == 0.0 {
            5.0
        } else {
            (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = (h * fac).max(1e-300);
        if let Some(m) = opts.max_dt {
            h = h.min(m);
        }
        if h < span.abs() * 1e-15 {
            return Err(Error::Tolerance(format!("step size underflow at t = {t}")));
        }
    }
    Ok((y, stats))
}
