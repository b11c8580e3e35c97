use std::f64::consts::PI;

use qdyn_core::daqs::*;
use qdyn_core::{CVec, C64};

use super::{grid, max_of, min_of};
use crate::error::{HarnessError, Result};
use crate::{Check, Ctx, Output, ParamSpec, Scenario, Table};

pub(super) const HEISENBERG: Scenario = Scenario {
    id: "daqs-heisenberg",
    description:
        "Power-law Heisenberg chain: digital-analog versus fully digital Trotter fidelity, plus the physical XY block",
    anchor: "digital-analog simulation of an inhomogeneous Heisenberg chain with trapped ions",
    schema,
    run,
};

fn schema() -> Vec<ParamSpec> {
    vec![
        ParamSpec::float("j", 1.0, "J", "coupling amplitude; the unit of frequency"),
        ParamSpec::float("alpha", 0.6, "1", "power-law exponent, J_ij = J/|i − j|^α"),
        ParamSpec::text("initial", "ddudd", "product state, u = ↑ and d = ↓ per spin"),
        ParamSpec::float("t_max", 2.0 * PI / 3.0, "1/J", "last time point"),
        ParamSpec::int("points", 21, "time samples including t = 0"),
        ParamSpec::ints("steps", &[1, 2, 3], "Trotter step counts"),
        ParamSpec::boolean("xy_block", true, "also integrate the bichromatic XY block"),
        ParamSpec::float("xy_j", 0.1, "2π kHz", "XY block target coupling"),
        ParamSpec::float("xy_big_delta", 60.0, "2π kHz", "sideband detuning Δ"),
        ParamSpec::float("xy_delta", 3.0, "2π kHz", "bichromatic asymmetry δ"),
        ParamSpec::float("xy_omega", 62.0, "2π kHz", "carrier Rabi frequency"),
        ParamSpec::int("xy_points", 21, "samples over one period 2π/δ"),
        ParamSpec::cutoff("n_max", 4, "Fock cutoff of the XY block mode"),
    ]
}

fn product_state(s: &str) -> Result<CVec> {
    let n = s.chars().count();
    if !(2..=MAX_SPINS).contains(&n) {
        return Err(HarnessError::Config(format!("initial needs 2 to {MAX_SPINS} spins")));
    }
    let mut idx = 0usize;
    for ch in s.chars() {
        let bit = match ch {
            'u' | 'U' => 0,
            'd' | 'D' => 1,
            _ => {
                return Err(HarnessError::Config(format!(
                    "initial state character {ch:?} is not u or d"
                )))
            }
        };
        idx = 2 * idx + bit;
    }
    let mut v = CVec::zeros(1 << n);
    v[idx] = C64::new(1.0, 0.0);
    Ok(v)
}

fn run(ctx: &Ctx) -> Result<Output> {
    let p = ctx.params;
    let psi = product_state(p.text("initial")?)?;
    let n = p.text("initial")?.chars().count();
    let j = SpinCouplingMatrix::power_law(n, p.f64("j")?, p.f64("alpha")?)?;
    let times = grid(p.f64("t_max")?, p.usize_min("points", 2)?)?;
    let steps = p.usizes("steps", 1)?;
    let rows = heisenberg_sweep(&j, &times, &steps, &psi)?;
    let mut sweep = Table::new(
        "trotter",
        &[
            ("t", "1/J"),
            ("steps", "1"),
            ("fidelity_daqs", "1"),
            ("fidelity_digital", "1"),
            ("defect_daqs", "1"),
            ("defect_digital", "1"),
        ],
    );
    let mut margin = f64::INFINITY;
    for r in &rows {
        margin = margin.min(r.daqs_fidelity - r.digital_fidelity);
        sweep.push(vec![
            r.t.into(),
            r.l.into(),
            r.daqs_fidelity.into(),
            r.digital_fidelity.into(),
            r.daqs_defect.into(),
            r.digital_defect.into(),
        ]);
    }
    let dg = HeisenbergDigitizer::new(&j)?;
    let mut out = Output {
        checks: vec![Check::at_least("min(F_daqs - F_digital)", margin, -1e-12)],
        summary: vec![
            ("commutator_norm".into(), dg.commutator_norm()),
            ("min_fidelity_daqs".into(), min_of(rows.iter().map(|r| r.daqs_fidelity))),
            (
                "min_fidelity_digital".into(),
                min_of(rows.iter().map(|r| r.digital_fidelity)),
            ),
        ],
        reference: "Heisenberg frequencies in units of J; the XY block uses 2π kHz with times in ms".into(),
        ..Default::default()
    };
    let mut tables = vec![sweep];
    if p.bool("xy_block")? {
        let xp = XyBlockParams {
            n_spins: n,
            j: p.f64("xy_j")?,
            big_delta: p.f64("xy_big_delta")?,
            delta: p.f64("xy_delta")?,
            omega: p.f64("xy_omega")?,
            n_max: p.usize_min("n_max", 2)?,
        };
        let window = grid(2.0 * PI / xp.delta, p.usize_min("xy_points", 2)?)?;
        let xr = xy_block_physical(&xp, &psi, &window, 1e-8)?;
        let mut xt = Table::new("xy_block", &[("t", "ms"), ("fidelity", "1")]);
        for (t, f) in xr.times.iter().zip(&xr.fidelity) {
            xt.push(vec![(*t).into(), (*f).into()]);
        }
        tables.push(xt);
        out.summary.push(("xy_worst_fidelity".into(), xr.worst));
        out.summary.push(("xy_eta_eff".into(), xr.eta_eff));
        out.warnings.extend(xr.warnings);
    }
    out.summary
        .push(("max_defect_daqs".into(), max_of(rows.iter().map(|r| r.daqs_defect))));
    out.tables = tables;
    Ok(out)
}
