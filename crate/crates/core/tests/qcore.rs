use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use qdyn_core::qcore::ops::kron_all;
use qdyn_core::qcore::pauli::pauli_rebuild;
use qdyn_core::qcore::*;
use qdyn_core::{CMat, CVec, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn qubit() -> HilbertSpace {
    HilbertSpace::qubits(1).unwrap()
}

#[test]
fn space_rejects_oversize_and_bad_boson() {
    assert!(HilbertSpace::qubits(14).is_ok());
    assert!(matches!(
        HilbertSpace::qubits(15),
        Err(qdyn_core::Error::DimensionCap { .. })
    ));
    assert!(HilbertSpace::new(vec![Factor::Boson { n_max: 0 }]).is_err());
    let s = HilbertSpace::qubits_boson(2, 3).unwrap();
    assert_eq!(s.dim(), 16);
    assert_eq!(s.strides(), vec![8, 4, 1]);
    let idx = s.index_of(&[1, 0, 2]).unwrap();
    assert_eq!(idx, 10);
    assert_eq!(s.levels_of(idx), vec![1, 0, 2]);
}

#[test]
fn primitive_conventions() {
    let sp = QubitOp::SigmaPlus.matrix();
    let x = QubitOp::X.matrix();
    let y = QubitOp::Y.matrix();
    let z = QubitOp::Z.matrix();
    assert_abs_diff_eq!(
        (&sp - (&x + &y * c(0.0, 1.0)) * c(0.5, 0.0)).norm(),
        0.0,
        epsilon = 1e-15
    );
    assert_eq!(y[(0, 1)], c(0.0, -1.0));
    assert_eq!(z[(0, 0)], c(1.0, 0.0));
    let a = BosonOp::A.matrix(5);
    let n = BosonOp::N.matrix(5);
    assert_abs_diff_eq!((a.adjoint() * &a - n).norm(), 0.0, epsilon = 1e-14);
    let a2 = BosonOp::A2.matrix(6);
    assert_abs_diff_eq!(
        (&a2 - BosonOp::A.matrix(6) * BosonOp::A.matrix(6)).norm(),
        0.0,
        epsilon = 1e-13
    );
}

#[test]
fn displacement_is_unitary_at_truncation_boundary() {
    let d = BosonOp::Displace(0.7).matrix(12);
    let id = CMat::identity(13, 13);
    assert_abs_diff_eq!((d.adjoint() * &d - id).norm(), 0.0, epsilon = 1e-12);
    // low-lying matrix elements converge to the infinite-space values
    let d40 = BosonOp::Displace(0.1).matrix(40);
    let expect_01 = c(0.0, 0.1) * (-0.005f64).exp();
    assert_abs_diff_eq!((d40[(1, 0)] - expect_01).norm(), 0.0, epsilon = 1e-12);
}

#[test]
fn evolve_zero_generator_is_identity() {
    let s = qubit();
    let psi = PureState::basis(&s, &[0]).unwrap();
    let out = evolve(&psi.clone().into(), &Schedule::zero(&s), 0.0, 3.7, DEFAULT_TOL).unwrap();
    assert_eq!(out.state.as_pure().unwrap().amplitudes(), psi.amplitudes());
}

#[test]
fn evolve_half_sigma_z_full_period_gives_minus_one_phase() {
    let s = qubit();
    let w = 2.3;
    let h = OperatorSum::single(&s, 0, Prim::Q(QubitOp::Z), w / 2.0).unwrap();
    let sch = Schedule::constant(&h).unwrap();
    let psi = PureState::basis(&s, &[0]).unwrap();
    let out = evolve(&psi.into(), &sch, 0.0, 2.0 * PI / w, DEFAULT_TOL).unwrap();
    let a = out.state.as_pure().unwrap().amplitudes().clone();
    assert_abs_diff_eq!((a[0] - c(-1.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
    assert!(out.norm_drift < 1e-12);
}

fn jc(n_max: usize, g: f64, w: f64) -> OperatorSum {
    let s = HilbertSpace::qubits_boson(1, n_max).unwrap();
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
    h.plus(&k).unwrap().into_hermitian().unwrap()
}

#[test]
fn evolve_matches_closed_form_jaynes_cummings() {
    // g(σ+a + σ−a†) couples |g,1⟩ and |e,0⟩ with frequency g; at a quarter
    // Rabi period (gt = π/4) the two carry equal weight.
    let (g, w) = (0.3, 1.7);
    let h = jc(8, g, w);
    let s = h.space().clone();
    let sch = Schedule::constant(&h).unwrap();
    let psi = PureState::basis(&s, &[1, 1]).unwrap();
    let t = PI / (4.0 * g);
    let out = evolve(&psi.into(), &sch, 0.0, t, DEFAULT_TOL).unwrap();
    let a = out.state.as_pure().unwrap().amplitudes().clone();
    let eg = s.index_of(&[1, 1]).unwrap();
    let ee = s.index_of(&[0, 0]).unwrap();
    // In the manifold both states have energy w/2, so the common phase is e^{−iwt/2}.
    let ph = C64::from_polar(1.0, -w * t / 2.0);
    assert_abs_diff_eq!((a[eg] - ph * (g * t).cos()).norm(), 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!((a[ee] - ph * c(0.0, -(g * t).sin())).norm(), 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(a[eg].norm_sqr(), 0.5, epsilon = 1e-12);
}

#[test]
fn time_dependent_integrator_matches_exact_rotating_drive() {
    // H(t) = (Ω/2)(cos(wt) X + sin(wt) Y) has the closed form
    // U = e^{−iwtZ/2} e^{−i((Ω X − w Z)/2) t} … checked through the rotating frame.
    let s = qubit();
    let (om, w) = (1.3, 0.8);
    let x = QubitOp::X.matrix();
    let y = QubitOp::Y.matrix();
    let z = QubitOp::Z.matrix();
    let (x2, y2) = (x.clone(), y.clone());
    let sch = Schedule::time_dependent(
        &s,
        std::sync::Arc::new(move |t: f64| {
            (&x2 * c((w * t).cos(), 0.0) + &y2 * c((w * t).sin(), 0.0)) * c(om / 2.0, 0.0)
        }),
    );
    let t = 5.0;
    let psi = PureState::basis(&s, &[1]).unwrap();
    let out = evolve(&psi.clone().into(), &sch, 0.0, t, 1e-11).unwrap();
    let hr = (&x * c(om / 2.0, 0.0)) - (&z * c(w / 2.0, 0.0));
    let exact = unitary_exp(&(&z * c(w / 2.0, 0.0)), t) * unitary_exp(&hr, t) * psi.amplitudes();
    let got = out.state.as_pure().unwrap().amplitudes();
    assert!((got - &exact).norm() < 1e-8, "{}", (got - &exact).norm());
    assert!(out.norm_drift < 1e-8);
}

#[test]
fn expectation_examples() {
    let s = qubit();
    let z = OperatorSum::single(&s, 0, Prim::Q(QubitOp::Z), 1.0).unwrap();
    let x = OperatorSum::single(&s, 0, Prim::Q(QubitOp::X), 1.0).unwrap();
    let zero = PureState::basis(&s, &[0]).unwrap();
    assert_eq!(expectation(&zero.into(), &z).unwrap(), c(1.0, 0.0));
    let plus = PureState::new(&s, CVec::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]) / c(2f64.sqrt(), 0.0)).unwrap();
    assert_abs_diff_eq!(expectation(&plus.into(), &x).unwrap().re, 1.0, epsilon = 1e-15);
    let thermal = DensityMatrix::diagonal(&s, &[0.7, 0.3]).unwrap();
    let v = expectation(&thermal.into(), &z).unwrap();
    assert_abs_diff_eq!(v.re, 0.4, epsilon = 1e-15);
    assert_eq!(v.im, 0.0);
}

#[test]
fn state_norm_is_monitored_not_fixed() {
    let s = qubit();
    let v = CVec::from_vec(vec![c(1.0, 0.0), c(0.1, 0.0)]);
    assert!(PureState::new(&s, v.clone()).is_err());
    assert!(PureState::normalized(&s, v).is_ok());
}

#[test]
fn fidelity_and_trace_distance_examples() {
    let s = qubit();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let psi = PureState::new(&s, random::state(&mut rng, 2)).unwrap();
    assert_abs_diff_eq!(fidelity(&psi, &psi).unwrap(), 1.0, epsilon = 1e-14);
    let r0 = PureState::basis(&s, &[0]).unwrap().to_density();
    let r1 = PureState::basis(&s, &[1]).unwrap().to_density();
    assert_abs_diff_eq!(trace_distance(&r0, &r0).unwrap(), 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(trace_distance(&r0, &r1).unwrap(), 1.0, epsilon = 1e-14);
    let mm = DensityMatrix::maximally_mixed(&s);
    assert_abs_diff_eq!(trace_distance(&r0, &mm).unwrap(), 0.5, epsilon = 1e-14);
}

#[test]
fn pauli_decompose_sigma_minus() {
    let s = qubit();
    let sm = OperatorSum::term(&s, c(1.0, 0.0), &[(0, Prim::Q(QubitOp::SigmaMinus))]).unwrap();
    let d = pauli_decompose(&sm).unwrap();
    assert_eq!(d.len(), 2);
    assert_eq!(d[0].1.to_string(), "X");
    assert_eq!(d[1].1.to_string(), "Y");
    assert_abs_diff_eq!((d[0].0 - c(0.5, 0.0)).norm(), 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!((d[1].0 - c(0.0, -0.5)).norm(), 0.0, epsilon = 1e-15);
    // dense path agrees
    let dd = pauli_decompose_dense(&sm.to_dense().unwrap(), 1).unwrap();
    assert_eq!(dd.len(), 2);
    assert_abs_diff_eq!((dd[1].0 - c(0.0, -0.5)).norm(), 0.0, epsilon = 1e-15);
}

#[test]
fn pauli_decompose_identity_and_boson_rejection() {
    let s = HilbertSpace::qubits(3).unwrap();
    let d = pauli_decompose(&OperatorSum::identity(&s)).unwrap();
    assert_eq!(d.len(), 1);
    assert_eq!(d[0].1.to_string(), "III");
    assert_eq!(d[0].0, c(1.0, 0.0));
    let sb = HilbertSpace::qubits_boson(1, 3).unwrap();
    assert!(matches!(
        pauli_decompose(&OperatorSum::identity(&sb)),
        Err(qdyn_core::Error::Unsupported(_))
    ));
}

#[test]
fn pauli_l1_bound_on_random_hermitian() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let h = random::hermitian(&mut rng, 4);
        let h = &h / c(op_norm(&h), 0.0);
        let d = pauli_decompose_dense(&h, 2).unwrap();
        let l1: f64 = d.iter().map(|(q, _)| q.norm()).sum();
        let l2: f64 = d.iter().map(|(q, _)| q.norm_sqr()).sum();
        assert!(l1 <= (d.len() as f64).sqrt() + 1e-12);
        assert!(l2 <= 1.0 + 1e-12);
    }
}

#[test]
fn partial_trace_examples() {
    let s2 = HilbertSpace::qubits(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ra = random::density(&mut rng, 2);
    let rb = random::density(&mut rng, 2);
    let prod = DensityMatrix::new(&s2, ra.kronecker(&rb)).unwrap();
    let red = partial_trace(&prod, &[0]).unwrap();
    assert_abs_diff_eq!((red.matrix() - &ra).norm(), 0.0, epsilon = 1e-14);
    let red_b = partial_trace(&prod, &[1]).unwrap();
    assert_abs_diff_eq!((red_b.matrix() - &rb).norm(), 0.0, epsilon = 1e-14);

    let h = c(1.0 / 2f64.sqrt(), 0.0);
    let bell = PureState::new(&s2, CVec::from_vec(vec![h, c(0.0, 0.0), c(0.0, 0.0), h])).unwrap();
    let r = partial_trace(&bell.to_density(), &[0]).unwrap();
    assert_abs_diff_eq!(
        (r.matrix() - CMat::identity(2, 2) * c(0.5, 0.0)).norm(),
        0.0,
        epsilon = 1e-15
    );

    let s3 = HilbertSpace::qubits(3).unwrap();
    let mut v = CVec::zeros(8);
    v[0] = h;
    v[7] = h;
    let ghz = PureState::new(&s3, v).unwrap();
    let r = partial_trace(&ghz.to_density(), &[0, 1]).unwrap();
    let mut expect = CMat::zeros(4, 4);
    expect[(0, 0)] = c(0.5, 0.0);
    expect[(3, 3)] = c(0.5, 0.0);
    assert_abs_diff_eq!((r.matrix() - expect).norm(), 0.0, epsilon = 1e-15);
}

#[test]
fn partial_trace_with_boson_factor() {
    let s = HilbertSpace::qubits_boson(1, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let rq = random::density(&mut rng, 2);
    let rb = random::density(&mut rng, 3);
    let rho = DensityMatrix::new(&s, rq.kronecker(&rb)).unwrap();
    let red = partial_trace(&rho, &[1]).unwrap();
    assert_abs_diff_eq!((red.matrix() - &rb).norm(), 0.0, epsilon = 1e-14);
}

#[test]
fn operator_sum_kron_order_matches_manual() {
    let s = HilbertSpace::qubits_boson(2, 2).unwrap();
    let op = OperatorSum::term(
        &s,
        c(0.5, -0.2),
        &[
            (0, Prim::Q(QubitOp::Y)),
            (1, Prim::Q(QubitOp::SigmaPlus)),
            (2, Prim::B(BosonOp::A)),
        ],
    )
    .unwrap();
    let manual = kron_all(&[QubitOp::Y.matrix(), QubitOp::SigmaPlus.matrix(), BosonOp::A.matrix(2)]) * c(0.5, -0.2);
    assert_abs_diff_eq!((op.to_dense().unwrap() - manual).norm(), 0.0, epsilon = 1e-15);
    let adj = op.adjoint().to_dense().unwrap();
    assert_abs_diff_eq!((adj - op.to_dense().unwrap().adjoint()).norm(), 0.0, epsilon = 1e-15);
}

#[test]
fn hermitian_flag_is_checked() {
    let s = qubit();
    let sp = OperatorSum::term(&s, c(1.0, 0.0), &[(0, Prim::Q(QubitOp::SigmaPlus))]).unwrap();
    assert!(sp.clone().into_hermitian().is_err());
    assert!(sp.assume_hermitian().to_dense().is_err());
}

#[test]
fn piecewise_schedule_and_backward_propagation() {
    let s = qubit();
    let x = QubitOp::X.matrix();
    let z = QubitOp::Z.matrix();
    let sch = Schedule::piecewise(
        &s,
        vec![
            (0.0, 1.0, Generator::Constant(x.clone())),
            (1.0, 2.5, Generator::Constant(z.clone())),
        ],
    )
    .unwrap();
    let u = propagator(&sch, 0.0, 2.5, DEFAULT_TOL).unwrap();
    let expect = unitary_exp(&z, 1.5) * unitary_exp(&x, 1.0);
    assert_abs_diff_eq!((&u - &expect).norm(), 0.0, epsilon = 1e-13);
    let ub = propagator(&sch, 2.5, 0.0, DEFAULT_TOL).unwrap();
    assert_abs_diff_eq!((ub - expect.adjoint()).norm(), 0.0, epsilon = 1e-13);
    let ue = sch.unitary(2.5, 0.0, DEFAULT_TOL).unwrap();
    assert_abs_diff_eq!((ue - expect.adjoint()).norm(), 0.0, epsilon = 1e-12);
    assert!(Schedule::piecewise(
        &s,
        vec![
            (0.0, 1.0, Generator::Constant(x.clone())),
            (1.5, 2.0, Generator::Constant(x))
        ]
    )
    .is_err());
    assert!(propagator(&sch, 0.0, 3.0, DEFAULT_TOL).is_err());
    assert!(evolve(&PureState::basis(&s, &[0]).unwrap().into(), &sch, 1.0, 0.5, DEFAULT_TOL).is_err());
}

#[test]
fn mixed_state_evolution_matches_pure() {
    let s = HilbertSpace::qubits(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let h = random::hermitian(&mut rng, 4);
    let sch = Schedule::constant_dense(&s, h).unwrap();
    let psi = PureState::new(&s, random::state(&mut rng, 4)).unwrap();
    let a = evolve(&psi.clone().into(), &sch, 0.0, 1.3, DEFAULT_TOL).unwrap();
    let b = evolve(&psi.to_density().into(), &sch, 0.0, 1.3, DEFAULT_TOL).unwrap();
    let ra = a.state.to_density();
    assert_abs_diff_eq!(
        (ra.matrix() - b.state.to_density().matrix()).norm(),
        0.0,
        epsilon = 1e-12
    );
}

fn random_qubit_setup(seed: u64, n: usize) -> (HilbertSpace, Schedule, PureState) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = HilbertSpace::qubits(n).unwrap();
    let h = random::hermitian(&mut rng, 1 << n);
    let psi = PureState::new(&s, random::state(&mut rng, 1 << n)).unwrap();
    (s.clone(), Schedule::constant_dense(&s, h).unwrap(), psi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evolve_group_law(seed in any::<u64>(), n in 1usize..4, t1 in 0.0f64..2.0, dt in 0.0f64..2.0) {
        let (_, sch, psi) = random_qubit_setup(seed, n);
        let st: QState = psi.into();
        let a = evolve(&st, &sch, 0.0, t1, DEFAULT_TOL).unwrap().state;
        let ab = evolve(&a, &sch, t1, t1 + dt, DEFAULT_TOL).unwrap().state;
        let direct = evolve(&st, &sch, 0.0, t1 + dt, DEFAULT_TOL).unwrap();
        let diff = (ab.as_pure().unwrap().amplitudes() - direct.state.as_pure().unwrap().amplitudes()).norm();
        prop_assert!(diff < 1e-9);
        prop_assert!(direct.norm_drift < 1e-8);
    }

    #[test]
    fn pauli_round_trip(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random::matrix(&mut rng, 1 << n);
        let d = pauli_decompose_dense(&m, n).unwrap();
        prop_assert!((pauli_rebuild(&d, n) - &m).norm() < 1e-12);
    }

    #[test]
    fn pauli_l2_at_most_one_for_unit_norm(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random::matrix(&mut rng, 1 << n);
        let m = &m / c(op_norm(&m), 0.0);
        let d = pauli_decompose_dense(&m, n).unwrap();
        let l2: f64 = d.iter().map(|(q, _)| q.norm_sqr()).sum();
        prop_assert!(l2 <= 1.0 + 1e-12);
    }

    #[test]
    fn trace_distance_triangle(seed in any::<u64>(), n in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = HilbertSpace::qubits(n).unwrap();
        let d = 1 << n;
        let r: Vec<DensityMatrix> = (0..3).map(|_| DensityMatrix::new(&s, random::density(&mut rng, d)).unwrap()).collect();
        let ab = trace_distance(&r[0], &r[1]).unwrap();
        let bc = trace_distance(&r[1], &r[2]).unwrap();
        let ac = trace_distance(&r[0], &r[2]).unwrap();
        prop_assert!(ac <= ab + bc + 1e-10);
        prop_assert!((ab - trace_distance(&r[1], &r[0]).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn symbolic_and_dense_decomposition_agree(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = HilbertSpace::qubits(2).unwrap();
        let prims = [QubitOp::I, QubitOp::X, QubitOp::Y, QubitOp::Z, QubitOp::SigmaPlus, QubitOp::SigmaMinus, QubitOp::ProjE, QubitOp::ProjG];
        let mut op = OperatorSum::zero(&s);
        for _ in 0..3 {
            let a = prims[(random::normal(&mut rng).abs() * 3.0) as usize % 8];
            let b = prims[(random::normal(&mut rng).abs() * 3.0) as usize % 8];
            op.push(random::complex(&mut rng), &[(0, Prim::Q(a)), (1, Prim::Q(b))]).unwrap();
        }
        let sym = pauli_decompose(&op).unwrap();
        let m = op.to_dense().unwrap();
        prop_assert!((pauli_rebuild(&sym, 2) - &m).norm() < 1e-12);
    }

    #[test]
    fn pauli_string_apply_matches_dense(seed in any::<u64>(), n in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random::pauli_string(&mut rng, n, true);
        let v = random::state(&mut rng, 1 << n);
        prop_assert!((p.apply(&v) - p.to_dense() * &v).norm() < 1e-14);
        let q = random::pauli_string(&mut rng, n, true);
        let (ph, r) = p.mul(&q);
        prop_assert!((p.to_dense() * q.to_dense() - r.to_dense() * ph).norm() < 1e-14);
        let comm = p.to_dense() * q.to_dense() - q.to_dense() * p.to_dense();
        prop_assert_eq!(p.commutes(&q), comm.norm() < 1e-12);
    }
}
