use qdyn_core::par;
use qdyn_core::qcore::*;
use qdyn_core::timecorr::*;
use qdyn_core::{CVec, C64};

use super::{grid, max_of};
use crate::error::{HarnessError, Result};
use crate::{Check, Ctx, Output, ParamSpec, Scenario, Table};

const ORACLE_TOL: f64 = 1e-9;

fn pauli_op(space: &HilbertSpace, s: &str) -> Result<OperatorSum> {
    let p: PauliString = s.parse()?;
    Ok(p.embed(space, &(0..s.len()).collect::<Vec<_>>(), C64::new(1.0, 0.0))?)
}

pub(super) const TWO_POINT: Scenario = Scenario {
    id: "timecorr-2pt",
    description: "Two-time σx correlator of a precessing qubit: direct, ancilla protocol and sampled probe",
    anchor: "two-time correlations read from one ancilla qubit",
    schema: two_point_schema,
    run: two_point,
};

fn two_point_schema() -> Vec<ParamSpec> {
    vec![
        ParamSpec::float(
            "omega0",
            1.0,
            "ω0",
            "qubit splitting, H = ω0/2 σz; the unit of frequency",
        ),
        ParamSpec::float("t_max", 4.0 * std::f64::consts::PI, "1/ω0", "last time point"),
        ParamSpec::int("points", 41, "time samples including t = 0"),
        ParamSpec::int("shots", 4000, "probe shots per sampled point (0 disables sampling)"),
        ParamSpec::text("initial", "plus", "initial state: plus or excited"),
    ]
}

fn two_point(ctx: &Ctx) -> Result<Output> {
    let p = ctx.params;
    let w0 = p.f64("omega0")?;
    let times = grid(p.f64("t_max")?, p.usize_min("points", 2)?)?;
    let shots = p.usize_min("shots", 0)? as u64;
    let s = HilbertSpace::qubits(1)?;
    let initial: QState = match p.text("initial")? {
        "plus" => {
            let h = C64::new(1.0 / 2f64.sqrt(), 0.0);
            PureState::new(&s, CVec::from_vec(vec![h, h]))?.into()
        }
        "excited" => PureState::basis(&s, &[0])?.into(),
        other => {
            return Err(HarnessError::Config(format!(
                "initial must be plus or excited, got {other:?}"
            )))
        }
    };
    let h = Schedule::constant(&OperatorSum::single(&s, 0, Prim::Q(QubitOp::Z), w0 / 2.0)?)?;
    let x = pauli_op(&s, "X")?;
    let rows = par::map_range(times.len(), |k| -> Result<_> {
        let t = times[k];
        let spec = CorrelationSpec::new(h.clone(), vec![0.0, t], vec![x.clone(), x.clone()], initial.clone())?;
        let exact = correlation_exact(&spec)?;
        let anc = correlation_ancilla(&spec, AncillaMode::ExactExpectation)?;
        let sampled = if shots > 0 {
            let plan = ShotPlan::new(shots, par::derive_seed(ctx.seed, &[k as u64]))?;
            Some(correlation_ancilla(&spec, AncillaMode::Sampled(plan))?)
        } else {
            None
        };
        Ok((t, exact, anc, sampled))
    });
    let mut table = Table::new(
        "correlator",
        &[
            ("t", "1/ω0"),
            ("re_exact", "1"),
            ("im_exact", "1"),
            ("re_ancilla", "1"),
            ("im_ancilla", "1"),
            ("re_sampled", "1"),
            ("im_sampled", "1"),
            ("abs_error_ancilla", "1"),
        ],
    );
    let mut worst: f64 = 0.0;
    let mut worst_sampled: f64 = 0.0;
    for r in rows {
        let (t, e, a, smp) = r?;
        let err = (a - e).norm();
        worst = worst.max(err);
        let smp = smp.unwrap_or(C64::new(f64::NAN, f64::NAN));
        if smp.re.is_finite() {
            worst_sampled = worst_sampled.max((smp - e).norm());
        }
        table.push(vec![
            t.into(),
            e.re.into(),
            e.im.into(),
            a.re.into(),
            a.im.into(),
            smp.re.into(),
            smp.im.into(),
            err.into(),
        ]);
    }
    Ok(Output {
        tables: vec![table],
        checks: vec![Check::at_most("max |ancilla - direct|", worst, ORACLE_TOL)],
        summary: vec![("max_sampled_error".into(), worst_sampled)],
        reference: "frequencies in units of the qubit splitting ω0 (ħ = 1)".into(),
        ..Default::default()
    })
}

pub(super) const THREE_POINT_GRID: Scenario = Scenario {
    id: "timecorr-3pt-grid",
    description: "Three-time correlator ⟨Z₀(t₂) X₁(t₁) Z₀(0)⟩ of a transverse Ising pair on an ordered time grid",
    anchor: "multi-time correlations from the ancilla protocol",
    schema: three_point_schema,
    run: three_point,
};

fn three_point_schema() -> Vec<ParamSpec> {
    vec![
        ParamSpec::float("j", 1.0, "J", "ZZ coupling; the unit of frequency"),
        ParamSpec::float("h", 0.6, "J", "transverse field on both qubits"),
        ParamSpec::float("t_max", 3.0, "1/J", "grid extent"),
        ParamSpec::int("points", 9, "grid points per axis"),
    ]
}

fn three_point(ctx: &Ctx) -> Result<Output> {
    let p = ctx.params;
    let ts = grid(p.f64("t_max")?, p.usize_min("points", 2)?)?;
    let (j, hx) = (p.f64("j")?, p.f64("h")?);
    let s = HilbertSpace::qubits(2)?;
    let mut hop = pauli_op(&s, "ZZ")?.scale(C64::new(j, 0.0));
    for term in ["XI", "IX"] {
        hop = hop.plus(&pauli_op(&s, term)?.scale(C64::new(hx, 0.0)))?;
    }
    let h = Schedule::constant(&hop)?;
    let z0 = pauli_op(&s, "ZI")?;
    let x1 = pauli_op(&s, "IX")?;
    let initial: QState = PureState::basis(&s, &[0, 0])?.into();
    let pairs: Vec<(f64, f64)> = ts
        .iter()
        .enumerate()
        .flat_map(|(a, &t1)| ts[a..].iter().map(move |&t2| (t1, t2)))
        .collect();
    let rows = par::map_slice(&pairs, |&(t1, t2)| -> Result<_> {
        let spec = CorrelationSpec::new(
            h.clone(),
            vec![0.0, t1, t2],
            vec![z0.clone(), x1.clone(), z0.clone()],
            initial.clone(),
        )?;
        Ok((
            t1,
            t2,
            correlation_exact(&spec)?,
            correlation_ancilla(&spec, AncillaMode::ExactExpectation)?,
        ))
    });
    let mut table = Table::new(
        "correlator_grid",
        &[
            ("t1", "1/J"),
            ("t2", "1/J"),
            ("re_exact", "1"),
            ("im_exact", "1"),
            ("re_ancilla", "1"),
            ("im_ancilla", "1"),
            ("abs_error", "1"),
        ],
    );
    let mut errs = Vec::new();
    for r in rows {
        let (t1, t2, e, a) = r?;
        let err = (a - e).norm();
        errs.push(err);
        table.push(vec![
            t1.into(),
            t2.into(),
            e.re.into(),
            e.im.into(),
            a.re.into(),
            a.im.into(),
            err.into(),
        ]);
    }
    Ok(Output {
        tables: vec![table],
        checks: vec![Check::at_most("max |ancilla - direct|", max_of(errs), ORACLE_TOL)],
        reference: "frequencies in units of the ZZ coupling J (ħ = 1)".into(),
        ..Default::default()
    })
}
