use std::f64::consts::PI;

use qdyn_core::daqs::*;

use super::min_of;
use crate::error::{HarnessError, Result};
use crate::{Ctx, Output, ParamSpec, Scenario, Table};

pub(super) const RABI: Scenario = Scenario {
    id: "cqed-rabi",
    description:
        "Digitized quantum Rabi model on a circuit-QED device: fidelity, photons and σz against exact evolution",
    anchor: "digital-analog Rabi and Dicke models in circuit QED",
    schema,
    run,
};

fn schema() -> Vec<ParamSpec> {
    vec![
        ParamSpec::text(
            "preset",
            "resonant",
            "half-coupling, resonant, double-coupling, double-coupling-detuned or deep-strong",
        ),
        ParamSpec::ints("steps", &[2, 4, 8, 16, 32], "Trotter step counts"),
        ParamSpec::float("t_max", 0.0, "1/g", "last time; 0 means one revival period 2π/ωr"),
        ParamSpec::int("points", 20, "time samples in (0, t_max]"),
        ParamSpec::int("qubits", 1, "qubits (Dicke model above 1)"),
        ParamSpec::boolean("noise", false, "also integrate the dissipative device sequence"),
        ParamSpec::int("noisy_steps", 15, "Trotter steps of the dissipative run"),
        ParamSpec::int("noisy_points", 4, "time samples of the dissipative run"),
        ParamSpec::cutoff("n_max", 40, "Fock cutoff"),
    ]
}

fn preset(name: &str) -> Result<CqedPreset> {
    CqedPreset::ALL
        .into_iter()
        .find(|p| p.as_str() == name)
        .ok_or_else(|| HarnessError::Config(format!("unknown preset {name:?}")))
}

fn run(ctx: &Ctx) -> Result<Output> {
    let p = ctx.params;
    let pr = preset(p.text("preset")?)?;
    let params = pr
        .params(p.usize_min("n_max", 2)?)?
        .with_qubits(p.usize_min("qubits", 1)?);
    let t_max = match p.f64("t_max")? {
        t if t > 0.0 => t,
        _ if params.omega_r > 0.0 => 2.0 * PI / params.omega_r,
        _ => return Err(HarnessError::Config("t_max must be given when ωr = 0".into())),
    };
    let points = p.usize_min("points", 1)?;
    let times: Vec<f64> = (1..=points).map(|k| t_max * k as f64 / points as f64).collect();
    let steps = p.usizes("steps", 1)?;
    let mut runs = Table::new(
        "digitized",
        &[
            ("steps", "1"),
            ("t", "1/g"),
            ("fidelity", "1"),
            ("photons", "1"),
            ("photons_exact", "1"),
            ("sigma_z", "1"),
            ("sigma_z_exact", "1"),
        ],
    );
    let mut conv = Table::new(
        "convergence",
        &[("steps", "1"), ("mean_infidelity", "1"), ("min_fidelity", "1")],
    );
    let mut summary = Vec::new();
    for &n in &steps {
        let r = cqed_rabi_digitize(&params, &times, n, None)?;
        for (k, &tk) in times.iter().enumerate() {
            runs.push(vec![
                n.into(),
                tk.into(),
                r.fidelity[k].into(),
                r.photons[k].into(),
                r.photons_exact[k].into(),
                r.sigma_z[k].into(),
                r.sigma_z_exact[k].into(),
            ]);
        }
        let mean = r.fidelity.iter().map(|f| 1.0 - f).sum::<f64>() / times.len() as f64;
        let worst = min_of(r.fidelity.iter().copied());
        conv.push(vec![n.into(), mean.into(), worst.into()]);
        summary.push((format!("mean_infidelity_{n}"), mean));
    }
    let mut tables = vec![runs, conv];
    if p.bool("noise")? {
        let nz = CqedNoise::device(params.reference_ghz);
        let np = p.usize_min("noisy_points", 1)?;
        let nt: Vec<f64> = (1..=np).map(|k| t_max * k as f64 / np as f64).collect();
        let ns = p.usize_min("noisy_steps", 1)?;
        let r = cqed_rabi_digitize(&params, &nt, ns, Some(&nz))?;
        let mut t = Table::new(
            "dissipative",
            &[
                ("t", "1/g"),
                ("device_time", "1/g"),
                ("fidelity", "1"),
                ("photons", "1"),
                ("photons_exact", "1"),
                ("sigma_z", "1"),
            ],
        );
        for (k, &tk) in nt.iter().enumerate() {
            t.push(vec![
                tk.into(),
                r.device_time[k].into(),
                r.fidelity[k].into(),
                r.photons[k].into(),
                r.photons_exact[k].into(),
                r.sigma_z[k].into(),
            ]);
        }
        tables.push(t);
        summary.push(("flip_time".into(), nz.flip_time));
        summary.push(("kappa".into(), nz.kappa));
    }
    summary.push(("omega_r".into(), params.omega_r));
    summary.push(("omega_q".into(), params.omega_q));
    Ok(Output {
        tables,
        summary,
        reference: format!(
            "frequencies in units of the device coupling g = 2π·{} GHz; times in 1/g",
            params.reference_ghz
        ),
        ..Default::default()
    })
}
