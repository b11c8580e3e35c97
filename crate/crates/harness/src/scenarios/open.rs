use qdyn_core::openmaster::*;
use qdyn_core::par;
use qdyn_core::qcore::*;
use qdyn_core::{CMat, C64};
use rand::Rng;

use super::{grid, max_of};
use crate::error::{HarnessError, Result};
use crate::{Check, Ctx, Output, ParamSpec, Scenario, Table};

pub(super) const RECONSTRUCTION: Scenario = Scenario {
    id: "lindblad-reconstruction",
    description: "⟨σz⟩ of a driven decaying qubit rebuilt order by order from unitary correlators, against exact Lindblad evolution",
    anchor: "open-system dynamics from closed-system correlations",
    schema: reconstruction_schema,
    run: reconstruction,
};

fn reconstruction_schema() -> Vec<ParamSpec> {
    vec![
        ParamSpec::float("omega", 1.0, "ω", "drive, H = ω/2 σx; the unit of frequency"),
        ParamSpec::float("gamma", 0.2, "ω", "decay rate of the σ⁻ channel"),
        ParamSpec::float("t_max", 2.0, "1/ω", "last time point"),
        ParamSpec::int("points", 11, "time samples including t = 0"),
        ParamSpec::cutoff("order", 3, "highest series order kept (quadrature supports up to 3)"),
        ParamSpec::int(
            "mc_samples",
            2000,
            "Monte Carlo samples per order (0 disables the sampled column)",
        ),
    ]
}

fn reconstruction(ctx: &Ctx) -> Result<Output> {
    let p = ctx.params;
    let times = grid(p.f64("t_max")?, p.usize_min("points", 2)?)?;
    let k_max = p.usize_min("order", 0)?;
    if k_max > MAX_QUADRATURE_ORDER {
        return Err(HarnessError::Config(format!(
            "order must be at most {MAX_QUADRATURE_ORDER}"
        )));
    }
    let mc = p.usize_min("mc_samples", 0)?;
    let s = HilbertSpace::qubits(1)?;
    let model = LindbladModel::new(
        Schedule::constant(&OperatorSum::single(&s, 0, Prim::Q(QubitOp::X), 0.5 * p.f64("omega")?)?)?,
        vec![(
            OperatorSum::single(&s, 0, Prim::Q(QubitOp::SigmaMinus), 1.0)?,
            Rate::Constant(p.f64("gamma")?),
        )],
    )?;
    let rho0 = PureState::basis(&s, &[0])?.to_density();
    let o = OperatorSum::single(&s, 0, Prim::Q(QubitOp::Z), 1.0)?;
    let om = o.to_dense()?;
    let rows = par::map_range(times.len(), |k| -> Result<_> {
        let t = times[k];
        let exact = (lindblad_exact(&model, &rho0, t)?.matrix() * &om).trace().re;
        let q = reconstruct(&model, &o, &rho0.clone().into(), t, k_max, &ReconstructMode::Quadrature)?;
        let partial: Vec<f64> = q
            .orders
            .iter()
            .scan(0.0, |acc, term| {
                *acc += term.value;
                Some(*acc)
            })
            .collect();
        let sampled = if mc > 0 {
            let plan = MonteCarloPlan {
                samples: vec![mc],
                master_seed: par::derive_seed(ctx.seed, &[k as u64]),
                shot_noise: ShotNoise::Exact,
            };
            reconstruct(
                &model,
                &o,
                &rho0.clone().into(),
                t,
                k_max,
                &ReconstructMode::MonteCarlo(plan),
            )?
            .estimate
        } else {
            f64::NAN
        };
        // |Tr O Δρ| ≤ ‖O‖ ‖Δρ‖₁ = 2‖O‖ D₁.
        let bound = 2.0 * op_norm(&om) * truncation_bound(k_max, t, model.gamma_bar(t), model.n_channels());
        Ok((t, exact, partial, sampled, bound))
    });
    let mut table = Table::new(
        "reconstruction",
        &[
            ("t", "1/ω"),
            ("exact", "1"),
            ("order", "1"),
            ("partial_sum", "1"),
            ("abs_error", "1"),
            ("bound", "1"),
        ],
    );
    let mut mc_table = Table::new(
        "monte_carlo",
        &[("t", "1/ω"), ("exact", "1"), ("estimate", "1"), ("abs_error", "1")],
    );
    let mut slack: Vec<f64> = Vec::new();
    for r in rows {
        let (t, exact, partial, sampled, bound) = r?;
        for (n, v) in partial.iter().enumerate() {
            let b = 2.0 * op_norm(&om) * truncation_bound(n, t, model.gamma_bar(t), model.n_channels());
            table.push(vec![
                t.into(),
                exact.into(),
                n.into(),
                (*v).into(),
                (v - exact).abs().into(),
                b.into(),
            ]);
        }
        slack.push((partial[k_max] - exact).abs() - bound);
        if mc > 0 {
            mc_table.push(vec![
                t.into(),
                exact.into(),
                sampled.into(),
                (sampled - exact).abs().into(),
            ]);
        }
    }
    let mut tables = vec![table];
    if mc > 0 {
        tables.push(mc_table);
    }
    Ok(Output {
        tables,
        checks: vec![Check::at_most(
            "max(|error| - bound) at the top order",
            max_of(slack),
            1e-9,
        )],
        reference: "frequencies in units of the drive ω (ħ = 1)".into(),
        ..Default::default()
    })
}

pub(super) const BOUNDS: Scenario = Scenario {
    id: "lindblad-bounds",
    description: "Trace distance between exact and truncated-series states for random 1-2 qubit Lindblad models, against the a priori bound",
    anchor: "uniform convergence of the dissipative series",
    schema: bounds_schema,
    run: bounds,
};

fn bounds_schema() -> Vec<ParamSpec> {
    vec![
        ParamSpec::int("models", 50, "number of random models"),
        ParamSpec::float("t", 1.0, "1", "evolution time"),
        ParamSpec::float("rate_max", 0.3, "1", "rates are drawn from [0.02, rate_max)"),
        ParamSpec::cutoff("order", 3, "orders 0..=order are compared"),
    ]
}

fn from_dense(space: &HilbertSpace, m: &CMat) -> Result<OperatorSum> {
    let n = space.n_qubits();
    let sites: Vec<usize> = (0..n).collect();
    let mut out = OperatorSum::zero(space);
    for (q, p) in pauli_decompose_dense(m, n)? {
        out = out.plus(&p.embed(space, &sites, q)?)?;
    }
    Ok(out)
}

fn bounds(ctx: &Ctx) -> Result<Output> {
    let p = ctx.params;
    let n_models = p.usize_min("models", 1)?;
    let t = p.f64("t")?;
    let rate_max = p.f64("rate_max")?;
    if !(rate_max > 0.02) || !(t >= 0.0) {
        return Err(HarnessError::Config("need rate_max > 0.02 and t ≥ 0".into()));
    }
    let k_max = p.usize_min("order", 0)?;
    let rows = par::map_range(n_models, |m| -> Result<_> {
        let mut rng = par::keyed_rng(ctx.seed, &[m as u64]);
        let nq = rng.random_range(1..=2usize);
        let s = HilbertSpace::qubits(nq)?;
        let d = 1 << nq;
        let h = random::hermitian(&mut rng, d) * C64::new(0.5, 0.0);
        let n_ch = rng.random_range(1..=2usize);
        let mut chans = Vec::new();
        for _ in 0..n_ch {
            let l = random::matrix(&mut rng, d);
            chans.push((from_dense(&s, &l)?, Rate::Constant(rng.random_range(0.02..rate_max))));
        }
        let model = LindbladModel::new(Schedule::constant_dense(&s, h)?, chans)?;
        let rho = DensityMatrix::new(&s, random::density(&mut rng, d))?;
        let exact = lindblad_exact(&model, &rho, t)?;
        let gb = model.gamma_bar(t);
        let mut out = Vec::new();
        for n in 0..=k_max {
            let approx = DensityMatrix::new_unchecked(&s, truncated_state(&model, &rho, t, n)?)?;
            let dist = trace_distance(&exact, &approx)?;
            out.push((m, nq, n_ch, n, gb, dist, truncation_bound(n, t, gb, model.n_channels())));
        }
        Ok(out)
    });
    let mut table = Table::new(
        "bounds",
        &[
            ("model", "1"),
            ("qubits", "1"),
            ("channels", "1"),
            ("order", "1"),
            ("gamma_bar", "1"),
            ("trace_distance", "1"),
            ("bound", "1"),
            ("ratio", "1"),
        ],
    );
    let mut violations = 0usize;
    let mut worst: f64 = 0.0;
    for r in rows {
        for (m, nq, nc, n, gb, dist, bound) in r? {
            let ratio = dist / bound;
            worst = worst.max(ratio);
            if dist > bound * (1.0 + 1e-9) + 1e-13 {
                violations += 1;
            }
            table.push(vec![
                m.into(),
                nq.into(),
                nc.into(),
                n.into(),
                gb.into(),
                dist.into(),
                bound.into(),
                ratio.into(),
            ]);
        }
    }
    Ok(Output {
        tables: vec![table],
        checks: vec![Check::at_most("bound violations", violations as f64, 0.0)],
        summary: vec![("max_distance_over_bound".into(), worst)],
        reference: "dimensionless model units (ħ = 1)".into(),
        ..Default::default()
    })
}
