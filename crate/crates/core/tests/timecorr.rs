use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use qdyn_core::qcore::*;
use qdyn_core::timecorr::*;
use qdyn_core::{CMat, CVec, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn q1() -> HilbertSpace {
    HilbertSpace::qubits(1).unwrap()
}

fn pauli_op(space: &HilbertSpace, s: &str) -> OperatorSum {
    s.parse::<PauliString>()
        .unwrap()
        .embed(space, &(0..s.len()).collect::<Vec<_>>(), c(1.0, 0.0))
        .unwrap()
}

fn sz_half(space: &HilbertSpace, w0: f64) -> Schedule {
    Schedule::constant(&OperatorSum::single(space, 0, Prim::Q(QubitOp::Z), w0 / 2.0).unwrap()).unwrap()
}

fn plus_state(space: &HilbertSpace) -> PureState {
    let h = c(1.0 / 2f64.sqrt(), 0.0);
    PureState::new(space, CVec::from_vec(vec![h, h])).unwrap()
}

#[test]
fn single_operator_at_time_zero() {
    let s = q1();
    let spec = CorrelationSpec::new(
        sz_half(&s, 0.7),
        vec![0.0],
        vec![pauli_op(&s, "Z")],
        PureState::basis(&s, &[0]).unwrap().into(),
    )
    .unwrap();
    assert_abs_diff_eq!(
        (correlation_exact(&spec).unwrap() - c(1.0, 0.0)).norm(),
        0.0,
        epsilon = 1e-14
    );
    let a = correlation_ancilla(&spec, AncillaMode::ExactExpectation).unwrap();
    assert_abs_diff_eq!((a - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-14);
}

#[test]
fn sigma_x_two_time_closed_forms() {
    let s = q1();
    let w0: f64 = 1.9;
    let t = 0.83;
    let x = pauli_op(&s, "X");
    for (state, expect) in [
        (plus_state(&s), c((w0 * t).cos(), 0.0)),
        (PureState::basis(&s, &[0]).unwrap(), C64::from_polar(1.0, w0 * t)),
    ] {
        let spec =
            CorrelationSpec::new(sz_half(&s, w0), vec![0.0, t], vec![x.clone(), x.clone()], state.into()).unwrap();
        let e = correlation_exact(&spec).unwrap();
        assert_abs_diff_eq!((e - expect).norm(), 0.0, epsilon = 1e-12);
        let a = correlation_ancilla(&spec, AncillaMode::ExactExpectation).unwrap();
        assert_abs_diff_eq!((a - expect).norm(), 0.0, epsilon = 1e-12);
    }
}

#[test]
fn ordered_spec_rejects_decreasing_times() {
    let s = q1();
    let x = pauli_op(&s, "X");
    let st: QState = plus_state(&s).into();
    assert!(CorrelationSpec::new(
        Schedule::zero(&s),
        vec![1.0, 0.5],
        vec![x.clone(), x.clone()],
        st.clone()
    )
    .is_err());
    assert!(CorrelationSpec::unordered(
        Schedule::zero(&s),
        vec![1.0, 0.5],
        vec![x.clone(), x.clone()],
        st.clone()
    )
    .is_ok());
    assert!(CorrelationSpec::new(Schedule::zero(&s), vec![], vec![], st.clone()).is_err());
    assert!(CorrelationSpec::new(Schedule::zero(&s), vec![0.0], vec![x.clone(), x], st).is_err());
    assert!(ShotPlan::new(0, 1).is_err());
}

#[test]
fn ten_point_alternating_chain() {
    let s = q1();
    let h = OperatorSum::single(&s, 0, Prim::Q(QubitOp::Z), -100.0 * PI).unwrap();
    let sch = Schedule::constant(&h).unwrap();
    let th = 1.41 * PI / 2.0;
    let init = PureState::new(
        &s,
        CVec::from_vec(vec![c((th / 2.0).cos(), 0.0), c(0.0, -(th / 2.0).sin())]),
    )
    .unwrap();
    let ops: Vec<OperatorSum> = (0..10)
        .map(|k| pauli_op(&s, if k % 2 == 0 { "X" } else { "Y" }))
        .collect();
    let times: Vec<f64> = (0..10).map(|k| 0.3e-3 * k as f64).collect();
    let spec = CorrelationSpec::new(sch, times, ops, init.into()).unwrap();
    let e = correlation_exact(&spec).unwrap();
    let a = correlation_ancilla(&spec, AncillaMode::ExactExpectation).unwrap();
    assert!((e - a).norm() < 1e-10, "{e} vs {a}");
}

#[test]
fn decomposable_operator_sums_terms() {
    let s = HilbertSpace::qubits(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = random::hermitian(&mut rng, 4);
    let sch = Schedule::constant_dense(&s, h).unwrap();
    let mut a = OperatorSum::zero(&s);
    a.push(
        c(0.3, 0.1),
        &[(0, Prim::Q(QubitOp::SigmaPlus)), (1, Prim::Q(QubitOp::ProjE))],
    )
    .unwrap();
    a.push(c(-1.2, 0.0), &[(1, Prim::Q(QubitOp::SigmaMinus))]).unwrap();
    let b = pauli_op(&s, "ZY");
    let psi = PureState::new(&s, random::state(&mut rng, 4)).unwrap();
    let spec = CorrelationSpec::new(sch, vec![0.2, 0.9], vec![a, b], psi.into()).unwrap();
    let e = correlation_exact(&spec).unwrap();
    let g = correlation_ancilla(&spec, AncillaMode::ExactExpectation).unwrap();
    assert!((e - g).norm() < 1e-10);
}

#[test]
fn mixed_initial_state_supported() {
    let s = HilbertSpace::qubits(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let sch = Schedule::constant_dense(&s, random::hermitian(&mut rng, 4)).unwrap();
    let rho = DensityMatrix::new(&s, random::density(&mut rng, 4)).unwrap();
    let spec = CorrelationSpec::new(
        sch,
        vec![0.1, 0.4, 1.3],
        vec![pauli_op(&s, "XZ"), pauli_op(&s, "IY"), pauli_op(&s, "ZZ")],
        rho.into(),
    )
    .unwrap();
    let e = correlation_exact(&spec).unwrap();
    let a = correlation_ancilla(&spec, AncillaMode::ExactExpectation).unwrap();
    assert!((e - a).norm() < 1e-10);
}

#[test]
fn time_dependent_evolution_supported() {
    let s = q1();
    let x = QubitOp::X.matrix();
    let z = QubitOp::Z.matrix();
    let sch = Schedule::time_dependent(
        &s,
        std::sync::Arc::new(move |t: f64| &z * c(0.5, 0.0) + &x * c(0.3 * t.cos(), 0.0)),
    );
    let spec = CorrelationSpec::new(
        sch,
        vec![0.3, 1.1],
        vec![pauli_op(&s, "Y"), pauli_op(&s, "X")],
        plus_state(&s).into(),
    )
    .unwrap();
    let e = correlation_exact(&spec).unwrap();
    let a = correlation_ancilla(&spec, AncillaMode::ExactExpectation).unwrap();
    assert!((e - a).norm() < 1e-8);
}

#[test]
fn sampled_mode_is_deterministic_and_unbiased() {
    let s = q1();
    let x = pauli_op(&s, "X");
    let spec = CorrelationSpec::new(
        sz_half(&s, 1.0),
        vec![0.0, 0.7],
        vec![x.clone(), x],
        plus_state(&s).into(),
    )
    .unwrap();
    let exact = correlation_exact(&spec).unwrap();
    let plan = ShotPlan::new(4000, 77).unwrap();
    let a = correlation_ancilla(&spec, AncillaMode::Sampled(plan)).unwrap();
    let b = correlation_ancilla(&spec, AncillaMode::Sampled(plan)).unwrap();
    assert_eq!(a, b);
    let mean: C64 = (0..200u64)
        .map(|seed| correlation_ancilla(&spec, AncillaMode::Sampled(ShotPlan::new(400, seed).unwrap())).unwrap())
        .sum::<C64>()
        / c(200.0, 0.0);
    // 200 × 200 shots per quadrature: standard error ≈ 0.005
    assert!((mean - exact).norm() < 0.03, "{mean} vs {exact}");
}

#[test]
fn shot_plan_for_accuracy() {
    let p = ShotPlan::for_accuracy(0.05, 3.0, 0).unwrap();
    assert_eq!(p.shots, 6400);
    assert_eq!(p.per_batch(), 3200);
    assert_eq!(ShotPlan::new(5, 0).unwrap().per_batch(), 3);
}

#[test]
fn gate_count_is_affine() {
    assert_eq!(gate_count(1, 7), 4);
    assert_eq!(gate_count(3, 2), 16);
    for n in 1..10 {
        assert_eq!(gate_count(n + 1, 5) - gate_count(n, 5), 9);
    }
}

fn jc_system(n_max: usize) -> (HilbertSpace, Schedule) {
    let s = HilbertSpace::qubits_boson(1, n_max).unwrap();
    let (w, g) = (1.0, 0.2);
    let mut h = OperatorSum::single(&s, 0, Prim::Q(QubitOp::Z), w / 2.0).unwrap();
    h = h
        .plus(&OperatorSum::single(&s, 1, Prim::B(BosonOp::N), w).unwrap())
        .unwrap();
    let mut k = OperatorSum::zero(&s);
    k.push(c(g, 0.0), &[(0, Prim::Q(QubitOp::SigmaPlus)), (1, Prim::B(BosonOp::A))])
        .unwrap();
    k.push(
        c(g, 0.0),
        &[(0, Prim::Q(QubitOp::SigmaMinus)), (1, Prim::B(BosonOp::Adag))],
    )
    .unwrap();
    (
        s.clone(),
        Schedule::constant(&h.plus(&k).unwrap().into_hermitian().unwrap()).unwrap(),
    )
}

#[test]
fn bosonic_mean_on_coherent_state() {
    let n_max = 30;
    let s = HilbertSpace::new(vec![Factor::Boson { n_max }]).unwrap();
    let alpha = 0.8;
    let psi = PureState::normalized(&s, PureState::coherent_local(c(alpha, 0.0), n_max)).unwrap();
    let xq = OperatorSum::single(&s, 0, Prim::B(BosonOp::X), 1.0).unwrap();
    let spec = CorrelationSpec::new(Schedule::zero(&s), vec![0.0], vec![xq], psi.into()).unwrap();
    assert!(matches!(
        correlation_ancilla(&spec, AncillaMode::ExactExpectation),
        Err(qdyn_core::Error::Unsupported(_))
    ));
    let v = correlation_bosonic(&spec, BosonicOptions::default()).unwrap();
    assert_abs_diff_eq!((v - c(2.0 * alpha, 0.0)).norm(), 0.0, epsilon = 1e-9);
}

#[test]
fn bosonic_two_time_matches_oracle_and_converges_quadratically() {
    let (s, sch) = jc_system(12);
    let xq = OperatorSum::single(&s, 1, Prim::B(BosonOp::X), 1.0).unwrap();
    let sx = OperatorSum::single(&s, 0, Prim::Q(QubitOp::X), 1.0).unwrap();
    let init = PureState::basis(&s, &[0, 0]).unwrap();
    let spec = CorrelationSpec::new(sch, vec![0.0, 2.1], vec![sx, xq], init.into()).unwrap();
    let exact = correlation_exact(&spec).unwrap();
    let v = correlation_bosonic(&spec, BosonicOptions::default()).unwrap();
    assert!((v - exact).norm() < 1e-6, "{v} vs {exact}");
    let err = |h: f64| (correlation_bosonic(&spec, BosonicOptions { h, richardson: false }).unwrap() - exact).norm();
    let ratio = err(0.1) / err(0.05);
    assert!((3.5..4.5).contains(&ratio), "{ratio}");
    assert!(correlation_bosonic(
        &spec,
        BosonicOptions {
            h: 0.0,
            richardson: true
        }
    )
    .is_err());
    assert!(correlation_bosonic(
        &spec,
        BosonicOptions {
            h: 1e-9,
            richardson: true
        }
    )
    .is_err());
}

#[test]
fn unsupported_boson_factor_is_rejected() {
    let (s, sch) = jc_system(5);
    let n = OperatorSum::single(&s, 1, Prim::B(BosonOp::N), 1.0).unwrap();
    let spec = CorrelationSpec::new(sch, vec![0.0], vec![n], PureState::basis(&s, &[0, 1]).unwrap().into()).unwrap();
    assert!(matches!(
        correlation_bosonic(&spec, BosonicOptions::default()),
        Err(qdyn_core::Error::Unsupported(_))
    ));
}

/// Dense Fock-space ladder operator; level 0 of each qubit is "occupied".
fn fock_annihilator(n_modes: usize, p: usize) -> CMat {
    let d = 1 << n_modes;
    let mut m = CMat::zeros(d, d);
    for idx in 0..d {
        let occ = |k: usize| (idx >> (n_modes - 1 - k)) & 1 == 0;
        if !occ(p) {
            continue;
        }
        let before = (0..p).filter(|&k| occ(k)).count();
        let to = idx | (1 << (n_modes - 1 - p));
        m[(to, idx)] = c(if before % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
    }
    m
}

#[test]
fn fermionic_occupation_examples() {
    let s = HilbertSpace::qubits(2).unwrap();
    let vac = PureState::basis(&s, &[1, 1]).unwrap();
    let one = PureState::basis(&s, &[1, 0]).unwrap();
    let ops = [
        FermionOp {
            mode: 1,
            dagger: true,
            time: 0.0,
        },
        FermionOp {
            mode: 1,
            dagger: false,
            time: 0.0,
        },
    ];
    let sch = Schedule::zero(&s);
    let n_vac = correlation_fermionic(&ops, &sch, &vac.into(), AncillaMode::ExactExpectation).unwrap();
    let n_one = correlation_fermionic(&ops, &sch, &one.into(), AncillaMode::ExactExpectation).unwrap();
    assert_abs_diff_eq!(n_vac.norm(), 0.0, epsilon = 1e-14);
    assert_abs_diff_eq!((n_one - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-14);
    let bad = [FermionOp {
        mode: 2,
        dagger: false,
        time: 0.0,
    }];
    assert!(correlation_fermionic(
        &bad,
        &sch,
        &PureState::basis(&s, &[1, 1]).unwrap().into(),
        AncillaMode::ExactExpectation
    )
    .is_err());
}

#[test]
fn jordan_wigner_matches_fock_operators() {
    let s = HilbertSpace::qubits(3).unwrap();
    for p in 0..3 {
        let jw = jordan_wigner(&s, p, false).unwrap().to_dense().unwrap();
        assert_abs_diff_eq!((jw - fock_annihilator(3, p)).norm(), 0.0, epsilon = 1e-14);
    }
}

#[test]
fn fermionic_hopping_two_time_matches_fock_oracle() {
    let n = 3;
    let s = HilbertSpace::qubits(n).unwrap();
    let b: Vec<CMat> = (0..n).map(|p| fock_annihilator(n, p)).collect();
    let j = 0.7;
    let mut h = CMat::zeros(8, 8);
    for p in 0..n - 1 {
        h += (b[p].adjoint() * &b[p + 1] + b[p + 1].adjoint() * &b[p]) * c(-j, 0.0);
    }
    h += b[2].adjoint() * &b[2] * c(0.4, 0.0);
    let sch = Schedule::constant_dense(&s, h.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let psi = PureState::new(&s, random::state(&mut rng, 8)).unwrap();
    let t = 1.37;
    let u = unitary_exp(&h, t);
    let b2t = u.adjoint() * b[2].adjoint() * &u;
    let oracle = psi.amplitudes().dotc(&(b2t * &b[1] * psi.amplitudes()));
    let ops = [
        FermionOp {
            mode: 2,
            dagger: true,
            time: t,
        },
        FermionOp {
            mode: 1,
            dagger: false,
            time: 0.0,
        },
    ];
    let got = correlation_fermionic(&ops, &sch, &psi.into(), AncillaMode::ExactExpectation).unwrap();
    assert!((got - oracle).norm() < 1e-10, "{got} vs {oracle}");
}

#[test]
fn response_vanishes_for_commuting_observables() {
    let s = q1();
    let z = pauli_op(&s, "Z");
    let grid: Vec<f64> = (0..20).map(|k| 0.1 * k as f64).collect();
    let phi = response_function(&sz_half(&s, 1.3), &z, &z, &plus_state(&s).into(), &grid).unwrap();
    assert!(phi.iter().all(|p| p.abs() < 1e-12));
    let chi = susceptibility(&grid, &phi, 0.4, 1.9).unwrap();
    assert_eq!(chi, c(0.0, 0.0));
}

#[test]
fn response_sigma_x_thermal() {
    let s = q1();
    let w0 = 2.0;
    let beta = 0.8;
    let sch = sz_half(&s, w0);
    let h = sch.constant_matrix().unwrap().clone();
    let rho = DensityMatrix::thermal(&s, &h, beta).unwrap();
    let x = pauli_op(&s, "X");
    let grid: Vec<f64> = (0..30).map(|k| 0.13 * k as f64).collect();
    let phi = response_function(&sch, &x, &x, &rho.clone().into(), &grid).unwrap();
    // oracle: i Tr(ρ [X(τ), X])
    let xm = x.to_dense().unwrap();
    for (t, p) in grid.iter().zip(&phi) {
        let u = unitary_exp(&h, *t);
        let xt = u.adjoint() * &xm * &u;
        let comm = &xt * &xm - &xm * &xt;
        let o = (c(0.0, 1.0) * (rho.matrix() * comm).trace()).re;
        assert_abs_diff_eq!(*p, o, epsilon = 1e-12);
        // closed form: 2 tanh(βω0/2) sin(ω0 τ)
        assert_abs_diff_eq!(*p, 2.0 * (beta * w0 / 2.0).tanh() * (w0 * t).sin(), epsilon = 1e-12);
    }
}

#[test]
fn response_with_motional_observable() {
    let (s, sch) = jc_system(10);
    let a = OperatorSum::single(&s, 0, Prim::Q(QubitOp::X), 1.0).unwrap();
    let b = OperatorSum::single(&s, 1, Prim::B(BosonOp::X), 1.0).unwrap();
    let init: QState = PureState::basis(&s, &[1, 0]).unwrap().into();
    let grid = [0.0, 0.5, 1.7, 3.0];
    let phi = response_function(&sch, &a, &b, &init, &grid).unwrap();
    let am = a.to_dense().unwrap();
    let bm = b.to_dense().unwrap();
    let h = sch.constant_matrix().unwrap().clone();
    let rho = init.to_density();
    for (t, p) in grid.iter().zip(&phi) {
        let u = unitary_exp(&h, *t);
        let bt = u.adjoint() * &bm * &u;
        let o = (c(0.0, 1.0) * (rho.matrix() * (&bt * &am - &am * &bt)).trace()).re;
        assert!((p - o).abs() < 1e-8, "{p} vs {o}");
    }
}

#[test]
fn response_rejects_non_hermitian() {
    let s = q1();
    let sp = OperatorSum::term(&s, c(1.0, 0.0), &[(0, Prim::Q(QubitOp::SigmaPlus))]).unwrap();
    let x = pauli_op(&s, "X");
    assert!(response_function(&Schedule::zero(&s), &sp, &x, &plus_state(&s).into(), &[0.0]).is_err());
}

#[test]
fn susceptibility_guards_and_static_limit() {
    assert!(susceptibility(&[], &[], 1.0, 1.0).is_err());
    let grid: Vec<f64> = (0..101).map(|k| 0.01 * k as f64).collect();
    let phi: Vec<f64> = grid.iter().map(|t| (3.0 * t).sin()).collect();
    let chi0 = susceptibility(&grid, &phi, 0.0, 1.0).unwrap();
    let trap: f64 = phi.windows(2).map(|w| 0.005 * (w[0] + w[1])).sum();
    assert_abs_diff_eq!(chi0.re, trap, epsilon = 1e-14);
    assert_eq!(chi0.im, 0.0);
    assert!(susceptibility(&grid, &phi, 400.0, 1.0).is_err());
    let band = susceptibility_band(&grid, &phi, -0.5, 0.5, 1.0, 10).unwrap();
    assert!(band.norm() > 0.0);
}

#[test]
fn linear_response_error_is_quadratic_in_drive() {
    let s = q1();
    // tilted field so both the first- and second-order shifts of ⟨Z⟩ are nonzero
    let h0 = OperatorSum::single(&s, 0, Prim::Q(QubitOp::Z), 0.75)
        .unwrap()
        .plus(&OperatorSum::single(&s, 0, Prim::Q(QubitOp::X), 0.4).unwrap())
        .unwrap();
    let sch = Schedule::constant(&h0).unwrap();
    let h = sch.constant_matrix().unwrap().clone();
    let rho: QState = DensityMatrix::thermal(&s, &h, 0.6).unwrap().into();
    let x = pauli_op(&s, "X");
    let y = pauli_op(&s, "Z");
    let (omega, t) = (1.1, 3.0);
    let r1 = linear_response_check(&sch, &x, &y, &rho, 0.02, omega, t, 2001).unwrap();
    let r2 = linear_response_check(&sch, &x, &y, &rho, 0.01, omega, t, 2001).unwrap();
    assert!((r1.exact - r1.predicted).abs() < 0.1 * r1.exact.abs());
    let ratio = (r1.exact - r1.predicted).abs() / (r2.exact - r2.predicted).abs();
    assert!((3.0..5.0).contains(&ratio), "{ratio}");
    assert!(linear_response_check(&sch, &x, &y, &plus_state(&s).into(), 0.01, omega, t, 201).is_err());
}

fn random_spec(seed: u64) -> CorrelationSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nq = rng.random_range(1..=3);
    let n = rng.random_range(1..=4);
    let s = HilbertSpace::qubits(nq).unwrap();
    let sch = Schedule::constant_dense(&s, random::hermitian(&mut rng, 1 << nq)).unwrap();
    let mut times: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
    times.sort_by(f64::total_cmp);
    let ops = (0..n)
        .map(|_| {
            random::pauli_string(&mut rng, nq, true)
                .to_operator(c(1.0, 0.0))
                .unwrap()
        })
        .collect();
    let psi = PureState::new(&s, random::state(&mut rng, 1 << nq)).unwrap();
    CorrelationSpec::new(sch, times, ops, psi.into()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn ancilla_matches_oracle(seed in any::<u64>()) {
        let spec = random_spec(seed);
        let e = correlation_exact(&spec).unwrap();
        let a = correlation_ancilla(&spec, AncillaMode::ExactExpectation).unwrap();
        prop_assert!((e - a).norm() < 1e-9);
    }

    #[test]
    fn hermitian_symmetry(seed in any::<u64>(), t in 0.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = HilbertSpace::qubits(2).unwrap();
        let sch = Schedule::constant_dense(&s, random::hermitian(&mut rng, 4)).unwrap();
        let a = random::pauli_string(&mut rng, 2, false).to_operator(c(1.0, 0.0)).unwrap();
        let psi: QState = PureState::new(&s, random::state(&mut rng, 4)).unwrap().into();
        let at0 = CorrelationSpec::new(sch.clone(), vec![0.0, t], vec![a.clone(), a.clone()], psi.clone()).unwrap();
        let a0t = CorrelationSpec::unordered(sch, vec![t, 0.0], vec![a.clone(), a], psi).unwrap();
        let x = correlation_ancilla(&at0, AncillaMode::ExactExpectation).unwrap();
        let y = correlation_ancilla(&a0t, AncillaMode::ExactExpectation).unwrap();
        prop_assert!((x.conj() - y).norm() < 1e-10);
    }

    #[test]
    fn equal_times_give_heisenberg_product(seed in any::<u64>(), t in 0.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = HilbertSpace::qubits(2).unwrap();
        let h = random::hermitian(&mut rng, 4);
        let sch = Schedule::constant_dense(&s, h.clone()).unwrap();
        let ps: Vec<PauliString> = (0..3).map(|_| random::pauli_string(&mut rng, 2, true)).collect();
        let psi = PureState::new(&s, random::state(&mut rng, 4)).unwrap();
        let u = unitary_exp(&h, t);
        let prod = ps.iter().rev().fold(CMat::identity(4, 4), |acc, p| acc * p.to_dense());
        let heis = u.adjoint() * prod * &u;
        let want = psi.amplitudes().dotc(&(heis * psi.amplitudes()));
        let ops = ps.iter().map(|p| p.to_operator(c(1.0, 0.0)).unwrap()).collect();
        let spec = CorrelationSpec::new(sch, vec![t; 3], ops, psi.into()).unwrap();
        let got = correlation_ancilla(&spec, AncillaMode::ExactExpectation).unwrap();
        prop_assert!((got - want).norm() < 1e-10);
    }
}
