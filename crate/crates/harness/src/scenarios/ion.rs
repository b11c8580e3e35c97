use std::f64::consts::PI;

use qdyn_core::ionrabi::*;
use qdyn_core::par;
use qdyn_core::qcore::*;

use super::{grid, max_of, min_of};
use crate::error::{HarnessError, Result};
use crate::{Check, Ctx, Output, ParamSpec, Scenario, Table, TruncationNote};

pub(super) const REGIMES: Scenario = Scenario {
    id: "qrm-regimes",
    description: "Regime labels of the effective Rabi model over a (ω0R, g) grid, with the sideband detunings that realize each point",
    anchor: "Rabi-model regimes reachable by tuning two sideband detunings",
    schema: regimes_schema,
    run: regimes,
};

fn regimes_schema() -> Vec<ParamSpec> {
    vec![
        ParamSpec::floats(
            "omega_r",
            &[1.0, 0.0],
            "ωR",
            "bosonic frequencies; 1 sets the unit, 0 gives the Dirac limit",
        ),
        ParamSpec::floats(
            "omega0_r",
            &[-1.0, -0.5, 0.0005, 0.5, 1.0, 2.0],
            "ωR",
            "qubit frequencies",
        ),
        ParamSpec::floats("g", &[0.001, 0.01, 0.1, 0.5, 1.0, 2.0], "ωR", "couplings"),
        ParamSpec::float("small", 0.1, "1", "ratio read as \"much less than\""),
    ]
}

fn regimes(ctx: &Ctx) -> Result<Output> {
    let p = ctx.params;
    let small = p.f64("small")?;
    if !(small > 0.0 && small < 1.0) {
        return Err(HarnessError::Config("small must lie in (0, 1)".into()));
    }
    let mut table = Table::new(
        "regimes",
        &[
            ("omega_r", "ωR"),
            ("omega0_r", "ωR"),
            ("g", "ωR"),
            ("delta_r", "ωR"),
            ("delta_b", "ωR"),
            ("label", "1"),
        ],
    );
    for &w in p.floats("omega_r")? {
        for &w0 in p.floats("omega0_r")? {
            for &g in p.floats("g")? {
                let label = classify_regime(&RabiParams::new(w0, w, g), small);
                // Inverse of ω0R = −(δr + δb)/2, ωR = (δr − δb)/2.
                let (dr, db) = (w - w0, -w - w0);
                table.push(vec![
                    w.into(),
                    w0.into(),
                    g.into(),
                    dr.into(),
                    db.into(),
                    label.as_str().into(),
                ]);
            }
        }
    }
    Ok(Output {
        tables: vec![table],
        reference: "frequencies in units of the simulated bosonic frequency ωR where it is nonzero".into(),
        ..Default::default()
    })
}

pub(super) const ADIABATIC: Scenario = Scenario {
    id: "qrm-adiabatic",
    description: "Ground-state preparation by a linear coupling ramp of the resonant Rabi model, fidelity along the ramp for several durations",
    anchor: "adiabatic preparation of deep-strong-coupling ground states",
    schema: adiabatic_schema,
    run: adiabatic,
};

fn adiabatic_schema() -> Vec<ParamSpec> {
    vec![
        ParamSpec::float(
            "g_final",
            0.06 * 68.0 / 2.0 / 0.9,
            "ωR",
            "final coupling; the default is ηΩ/2 at Ω = 2π·68 kHz, η = 0.06, δ_b = −6e-4 ν",
        ),
        ParamSpec::float("omega0_r", 1.0, "ωR", "qubit frequency"),
        ParamSpec::floats("durations", &[20.0, 40.0, 80.0, 160.0], "1/ωR", "ramp durations"),
        ParamSpec::int("checkpoints", 8, "fidelity samples per ramp after t = 0"),
        ParamSpec::cutoff("n_max", 40, "Fock cutoff"),
    ]
}

fn adiabatic(ctx: &Ctx) -> Result<Output> {
    let p = ctx.params;
    let n_max = p.usize_min("n_max", 2)?;
    let g_f = p.f64("g_final")?;
    let checkpoints = p.usize_min("checkpoints", 1)?;
    let durations = p.floats("durations")?.to_vec();
    let r = RabiParams::new(p.f64("omega0_r")?, 1.0, 0.0);
    let (h0, h1) = qrm_ramp(&r, n_max)?;
    let space = model_space(1, n_max)?;
    let traces = par::map_slice(&durations, |&dt| {
        adiabatic_ground_state(&h0, &h1, g_f, dt, checkpoints, 1e-9)
    });
    let mut trace_t = Table::new(
        "ramp",
        &[("duration", "1/ωR"), ("t", "1/ωR"), ("g", "ωR"), ("fidelity", "1")],
    );
    let mut summary_t = Table::new(
        "final",
        &[
            ("duration", "1/ωR"),
            ("final_fidelity", "1"),
            ("photons", "1"),
            ("fock_tail", "1"),
        ],
    );
    let mut tails = Vec::new();
    let mut finals = Vec::new();
    for (dt, tr) in durations.iter().zip(traces) {
        let tr = tr?;
        for k in 0..tr.times.len() {
            trace_t.push(vec![
                (*dt).into(),
                tr.times[k].into(),
                tr.couplings[k].into(),
                tr.fidelity[k].into(),
            ]);
        }
        let tail = fock_tail(&space, &tr.final_state);
        if tail > FOCK_TAIL_LIMIT {
            return Err(HarnessError::Truncation(format!(
                "{tail:.2e} in the top Fock levels at n_max = {n_max}"
            )));
        }
        tails.push(tail);
        finals.push((*dt, tr.final_fidelity));
        summary_t.push(vec![
            (*dt).into(),
            tr.final_fidelity.into(),
            mean_phonons(&space, &tr.final_state).into(),
            tail.into(),
        ]);
    }
    let mut summary: Vec<(String, f64)> = finals
        .iter()
        .map(|(d, f)| (format!("final_fidelity_{d}"), *f))
        .collect();
    summary.push(("g_final".into(), g_f));
    Ok(Output {
        tables: vec![trace_t, summary_t],
        truncation: vec![TruncationNote::new(
            "max top-two Fock population",
            max_of(tails),
            FOCK_TAIL_LIMIT,
        )],
        summary,
        reference: "frequencies in units of the simulated bosonic frequency ωR (resonant, ω0R = ωR by default)".into(),
        ..Default::default()
    })
}

pub(super) const TWO_PHOTON_SPECTRUM: Scenario = Scenario {
    id: "twophoton-spectrum",
    description:
        "Lowest levels of the two-photon Rabi model versus g/ω with parity labels and a truncation cross-check",
    anchor: "spectral collapse of the two-photon Rabi model as g → ω/2",
    schema: spectrum_schema,
    run: spectrum,
};

fn spectrum_schema() -> Vec<ParamSpec> {
    vec![
        ParamSpec::float("omega_q", 1.9, "ω", "qubit frequency"),
        ParamSpec::floats("g", &[0.0, 0.1, 0.2, 0.3, 0.4, 0.45, 0.49], "ω", "coupling grid"),
        ParamSpec::int("levels", 8, "levels per grid point"),
        ParamSpec::int("qubits", 1, "number of qubits (two-photon Dicke model above 1)"),
        ParamSpec::cutoff("n_max", 120, "Fock cutoff; the cross-check uses n_max + 10"),
    ]
}

fn spectrum(ctx: &Ctx) -> Result<Output> {
    let p = ctx.params;
    let n_max = p.usize_min("n_max", 4)?;
    let levels = p.usize_min("levels", 1)?;
    let base = TwoPhotonParams::new(1.0, p.f64("omega_q")?, 0.0).with_qubits(p.usize_min("qubits", 1)?);
    let gs = p.floats("g")?;
    if gs.iter().any(|&g| g.abs() >= 0.5) {
        return Err(HarnessError::Config(
            "the spectrum is unbounded below for |g| ≥ ω/2".into(),
        ));
    }
    let sweep = two_photon_spectrum(&base, gs, levels, n_max)?;
    let rows = collapse_diagnostics(&base, &sweep, levels);
    let mut lv = Table::new(
        "levels",
        &[
            ("g", "ω"),
            ("level", "1"),
            ("energy", "ω"),
            ("parity", "1"),
            ("parity_weight", "1"),
            ("photons", "1"),
            ("truncation_shift", "ω"),
        ],
    );
    let mut weights = Vec::new();
    let mut shifts = Vec::new();
    for pt in &sweep {
        for (k, l) in pt.levels.iter().enumerate() {
            weights.push(1.0 - l.parity_weight);
            shifts.push(l.truncation_shift);
            lv.push(vec![
                pt.g.into(),
                k.into(),
                l.energy.into(),
                l.parity.as_str().into(),
                l.parity_weight.into(),
                l.photons.into(),
                l.truncation_shift.into(),
            ]);
        }
    }
    let mut col = Table::new(
        "collapse",
        &[
            ("g", "ω"),
            ("min_spacing", "ω"),
            ("converged_levels", "1"),
            ("potential_minus", "ω"),
            ("potential_plus", "ω"),
            ("photons_first_excited", "1"),
        ],
    );
    for r in &rows {
        let first = r.photons.get(1).copied().unwrap_or(f64::NAN);
        col.push(vec![
            r.g.into(),
            r.min_spacing.into(),
            r.converged_levels.into(),
            r.potential.0.into(),
            r.potential.1.into(),
            first.into(),
        ]);
    }
    let truncation = sweep
        .iter()
        .map(|pt| {
            let shift = max_of(pt.levels.iter().map(|l| l.truncation_shift));
            TruncationNote::new(&format!("max level shift at g = {}", pt.g), shift, 1e-4)
        })
        .collect();
    Ok(Output {
        tables: vec![lv, col],
        checks: vec![Check::at_most("max parity leakage", max_of(weights), 1e-10)],
        truncation,
        summary: vec![
            (
                "min_spacing_first".into(),
                rows.first().map_or(f64::NAN, |r| r.min_spacing),
            ),
            (
                "min_spacing_last".into(),
                rows.last().map_or(f64::NAN, |r| r.min_spacing),
            ),
            ("max_truncation_shift".into(), max_of(shifts)),
        ],
        reference: "frequencies in units of the bosonic frequency ω".into(),
        ..Default::default()
    })
}

pub(super) const TWO_PHOTON_DYNAMICS: Scenario = Scenario {
    id: "twophoton-dynamics",
    description: "Full second-sideband ion drive against the effective two-photon Rabi model from |g, n⟩",
    anchor: "two-photon Rabi dynamics realized on a trapped ion",
    schema: dynamics_schema,
    run: dynamics,
};

fn dynamics_schema() -> Vec<ParamSpec> {
    vec![
        ParamSpec::float("nu", 1.0, "ν", "trap frequency; the unit of frequency"),
        ParamSpec::float("omega", 0.1, "ν", "carrier Rabi frequency of each tone"),
        ParamSpec::float("eta", 0.04, "1", "Lamb-Dicke parameter"),
        ParamSpec::float("ratio", 0.2, "1", "simulated g/ω"),
        ParamSpec::float("horizon", 4.0, "1/ω", "evolution window in units of the simulated 1/ω"),
        ParamSpec::int("points", 17, "time samples including t = 0"),
        ParamSpec::int("fock", 2, "initial phonon number"),
        ParamSpec::cutoff("n_max", 30, "Fock cutoff"),
    ]
}

fn dynamics(ctx: &Ctx) -> Result<Output> {
    let p = ctx.params;
    let (nu, omega, eta, ratio) = (p.f64("nu")?, p.f64("omega")?, p.f64("eta")?, p.f64("ratio")?);
    if !(ratio > 0.0) {
        return Err(HarnessError::Config("ratio must be positive".into()));
    }
    let n_max = p.usize_min("n_max", 4)?;
    let fock = p.usize_min("fock", 0)?;
    if fock + 2 >= n_max {
        return Err(HarnessError::Config("initial phonon number too close to n_max".into()));
    }
    // g = η²Ω/4 for second sidebands; ω_q = 2ω.
    let g = eta * eta * omega / 4.0;
    let w = g / ratio;
    let drive_p = IonDriveParams::two_photon(nu, omega, eta, 0.0, -4.0 * w);
    let tp = effective_two_photon(&drive_p)?;
    let drive = IonDrive::new(drive_p, n_max)?;
    let psi0 = PureState::basis(drive.space(), &[1, fock])?.into_amplitudes();
    let h = two_photon_sim_frame(&tp, n_max)?.to_dense()?;
    let wt = grid(p.f64("horizon")?, p.usize_min("points", 2)?)?;
    let times: Vec<f64> = wt.iter().map(|x| x / tp.omega).collect();
    let fid = frame_fidelity(&drive, &h, tp.omega_q, tp.omega, &psi0, &times, 1e-9)?;
    let mut table = Table::new("fidelity", &[("omega_t", "1"), ("t", "1/ν"), ("fidelity", "1")]);
    for k in 0..times.len() {
        table.push(vec![wt[k].into(), times[k].into(), fid[k].into()]);
    }
    Ok(Output {
        tables: vec![table],
        summary: vec![
            ("worst_fidelity".into(), min_of(fid.iter().copied())),
            ("g_over_omega".into(), tp.g / tp.omega),
            ("omega_q_over_omega".into(), tp.omega_q / tp.omega),
            ("sim_period_over_nu".into(), 2.0 * PI / tp.omega),
        ],
        warnings: drive_p.warnings(),
        reference: "lab frequencies in units of the trap frequency ν; omega_t is the simulated phase ωt".into(),
        ..Default::default()
    })
}
