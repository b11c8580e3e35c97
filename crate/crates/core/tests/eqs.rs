use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use qdyn_core::eqs::*;
use qdyn_core::qcore::*;
use qdyn_core::{CMat, CVec, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn ps(s: &str) -> PauliString {
    s.parse().unwrap()
}

fn pure(n: usize, v: CVec) -> PureState {
    PureState::normalized(&HilbertSpace::qubits(n).unwrap(), v).unwrap()
}

fn rand_pure(rng: &mut ChaCha8Rng, n: usize) -> PureState {
    pure(n, random::state(rng, 1 << n))
}

fn rand_product(rng: &mut ChaCha8Rng, n: usize) -> PureState {
    let locals: Vec<CVec> = (0..n).map(|_| random::state(rng, 2)).collect();
    PureState::product(&HilbertSpace::qubits(n).unwrap(), &locals).unwrap()
}

/// `2|ad − bc|` for two qubits.
fn wootters(psi: &CVec) -> f64 {
    2.0 * (psi[0] * psi[3] - psi[1] * psi[2]).norm()
}

/// `4|d1 − 2d2 + 4d3|` from Cayley's hyperdeterminant.
fn cayley_tangle(a: &CVec) -> f64 {
    let x = |i: usize, j: usize, k: usize| a[4 * i + 2 * j + k];
    let d1 = x(0, 0, 0).powi(2) * x(1, 1, 1).powi(2)
        + x(0, 0, 1).powi(2) * x(1, 1, 0).powi(2)
        + x(0, 1, 0).powi(2) * x(1, 0, 1).powi(2)
        + x(1, 0, 0).powi(2) * x(0, 1, 1).powi(2);
    let d2 = x(0, 0, 0) * x(1, 1, 1) * x(0, 1, 1) * x(1, 0, 0)
        + x(0, 0, 0) * x(1, 1, 1) * x(1, 0, 1) * x(0, 1, 0)
        + x(0, 0, 0) * x(1, 1, 1) * x(1, 1, 0) * x(0, 0, 1)
        + x(0, 1, 1) * x(1, 0, 0) * x(1, 0, 1) * x(0, 1, 0)
        + x(0, 1, 1) * x(1, 0, 0) * x(1, 1, 0) * x(0, 0, 1)
        + x(1, 0, 1) * x(0, 1, 0) * x(1, 1, 0) * x(0, 0, 1);
    let d3 = x(0, 0, 0) * x(1, 1, 0) * x(1, 0, 1) * x(0, 1, 1) + x(1, 1, 1) * x(0, 0, 1) * x(0, 1, 0) * x(1, 0, 0);
    4.0 * (d1 - d2 * 2.0 + d3 * 4.0).norm()
}

fn dense(terms: &[(f64, PauliString)]) -> CMat {
    let n = terms[0].1.len();
    let d = 1 << n;
    terms
        .iter()
        .fold(CMat::zeros(d, d), |acc, (q, p)| acc + p.to_dense() * c(*q, 0.0))
}

#[test]
fn state_embedding_examples() {
    let m = EmbeddingMap::new(1).unwrap();
    let zero = CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
    assert_eq!(m.forward(&zero).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
    let i1 = CVec::from_vec(vec![c(0.0, 0.0), c(0.0, 1.0)]);
    assert_eq!(m.forward(&i1).unwrap(), vec![0.0, 0.0, 0.0, 1.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 1..=4 {
        let m = EmbeddingMap::new(n).unwrap();
        let psi = rand_pure(&mut rng, n);
        let e = m.embed_state(&psi).unwrap();
        assert!(e.amplitudes().iter().all(|z| z.im == 0.0));
        assert_abs_diff_eq!(e.norm(), psi.norm(), epsilon = 1e-15);
        let back = m.decode(e.amplitudes()).unwrap();
        assert!((back - psi.amplitudes()).camax() < 1e-15);
        assert!((m.decode_matrix() * e.amplitudes() - psi.amplitudes()).camax() < 1e-15);
    }
    assert!(EmbeddingMap::new(0).is_err());
}

#[test]
fn hamiltonian_embedding_examples() {
    let h = dense(&[(1.0, ps("XY")), (1.0, ps("XZ"))]);
    let want = dense(&[(1.0, ps("IXY")), (-1.0, ps("YXZ"))]);
    let ht = embed_hamiltonian(&h).unwrap();
    assert!((&ht - &want).camax() < 1e-15);
    assert!(ht.iter().all(|z| z.re == 0.0));
    let pauli = embed_pauli_hamiltonian(&[(1.0, ps("XY")), (1.0, ps("XZ"))]);
    assert_eq!(pauli, vec![(1.0, ps("IXY")), (-1.0, ps("YXZ"))]);

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let real = random::hermitian(&mut rng, 4).map(|z| c(z.re, 0.0));
    let real = (&real + real.transpose()) * c(0.5, 0.0);
    let want = qdyn_core::qcore::ops::kron_all(&[Pauli::Y.matrix(), real.clone()]) * c(-1.0, 0.0);
    assert!((embed_hamiltonian(&real).unwrap() - want).camax() < 1e-15);

    let bad = random::matrix(&mut rng, 4);
    assert!(embed_hamiltonian(&bad).is_err());

    let s = HilbertSpace::qubits(2).unwrap();
    let op = OperatorSum::term(&s, c(0.7, 0.0), &[(0, Prim::Q(QubitOp::X)), (1, Prim::Q(QubitOp::Y))])
        .unwrap()
        .plus(&OperatorSum::single(&s, 1, Prim::Q(QubitOp::Z), -0.3).unwrap())
        .unwrap();
    let via_op = embed_operator(&op).unwrap().to_dense().unwrap();
    assert!((via_op - embed_hamiltonian(&op.to_dense().unwrap()).unwrap()).camax() < 1e-14);
}

#[test]
fn embedded_dynamics_reproduce_simulated_dynamics() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 1..=3 {
        let m = EmbeddingMap::new(n).unwrap();
        let h = random::hermitian(&mut rng, 1 << n);
        let ht = embed_hamiltonian(&h).unwrap();
        let psi = rand_pure(&mut rng, n);
        let e = m.embed_state(&psi).unwrap();
        for _ in 0..4 {
            let t = rng.random_range(0.0..5.0);
            let sim = unitary_exp(&h, t) * psi.amplitudes();
            let emb = unitary_exp(&ht, t) * e.amplitudes();
            assert!(emb.iter().all(|z| z.im.abs() < 1e-9));
            assert!((m.decode(&emb).unwrap() - &sim).camax() < 1e-9);
            let conj = m.decode(&(m.conjugation_gate() * &emb)).unwrap();
            assert!((conj - sim.map(|z| z.conj())).camax() < 1e-10);
        }
    }
}

#[test]
fn conj_expectation_examples() {
    let m = EmbeddingMap::new(2).unwrap();
    let real = pure(
        2,
        CVec::from_vec(vec![c(0.3, 0.0), c(-0.5, 0.0), c(0.1, 0.0), c(0.8, 0.0)]),
    );
    let e: QState = m.embed_state(&real).unwrap().into();
    assert_abs_diff_eq!(
        conj_expectation(&e, &CMat::identity(4, 4)).unwrap().re,
        1.0,
        epsilon = 1e-14
    );
    let s = 1.0 / 2f64.sqrt();
    let bell = pure(2, CVec::from_vec(vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]));
    let e: QState = m.embed_state(&bell).unwrap().into();
    assert_abs_diff_eq!(
        conj_expectation(&e, &ps("YY").to_dense()).unwrap().norm(),
        1.0,
        epsilon = 1e-14
    );
    assert!(conj_expectation(&e, &random::matrix(&mut ChaCha8Rng::seed_from_u64(0), 4)).is_err());

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in 1..=3 {
        let m = EmbeddingMap::new(n).unwrap();
        for _ in 0..10 {
            let psi = rand_pure(&mut rng, n);
            let o = random::hermitian(&mut rng, 1 << n);
            let e: QState = m.embed_state(&psi).unwrap().into();
            let got = conj_expectation(&e, &o).unwrap();
            let want = conj_expectation_direct(psi.amplitudes(), &o);
            assert!((got - want).norm() < 1e-12);
        }
    }
}

#[test]
fn monotone_specs_and_observable_counts() {
    use MonotoneKind::*;
    for (kind, n, count) in [
        (Concurrence2, 2, 2),
        (SecondOrder2, 2, 18),
        (Tangle3, 3, 6),
        (EvenN, 4, 2),
        (OddN, 5, 6),
    ] {
        let spec = MonotoneSpec::new(kind, n).unwrap();
        assert_eq!(spec.enlarged_observables().len(), count, "{kind:?}");
    }
    assert!(MonotoneSpec::new(Concurrence2, 3).is_err());
    assert!(MonotoneSpec::new(Tangle3, 2).is_err());
    assert!(MonotoneSpec::new(EvenN, 3).is_err());
    assert!(MonotoneSpec::new(OddN, 4).is_err());
    let spec = MonotoneSpec::new(Concurrence2, 2).unwrap();
    assert_eq!(spec.enlarged_observables(), vec![ps("ZYY"), ps("XYY")]);
    let three = rand_pure(&mut ChaCha8Rng::seed_from_u64(0), 3);
    assert!(monotone(&MonotoneInput::Simulated(three), &spec).is_err());
}

#[test]
fn concurrence_closed_form_and_oracles() {
    let spec = MonotoneSpec::new(MonotoneKind::Concurrence2, 2).unwrap();
    let g = 0.8;
    let plus = CVec::from_element(4, c(0.5, 0.0));
    let zz = ps("ZZ").to_dense();
    for k in 0..20 {
        let t = k as f64 * 0.17;
        let psi = unitary_exp(&(&zz * c(-g, 0.0)), t) * &plus;
        let v = monotone(&MonotoneInput::Simulated(pure(2, psi)), &spec).unwrap();
        assert_abs_diff_eq!(v.value, (2.0 * g * t).sin().abs(), epsilon = 1e-12);
    }
    let times: Vec<f64> = (0..16).map(|k| k as f64 * 0.2).collect();
    for p in concurrence_scenario(1.0, &times).unwrap() {
        assert_abs_diff_eq!(p.eqs, (2.0 * p.t).sin().abs(), epsilon = 1e-12);
        assert_abs_diff_eq!(p.direct, (2.0 * p.t).sin().abs(), epsilon = 1e-12);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let psi = rand_pure(&mut rng, 2);
        let v = monotone(&MonotoneInput::Simulated(psi.clone()), &spec).unwrap().value;
        assert_abs_diff_eq!(v, wootters(psi.amplitudes()), epsilon = 1e-12);
        assert!((0.0..=1.0 + 1e-12).contains(&v));
    }
}

#[test]
fn tangle_dual_paths() {
    let spec = MonotoneSpec::new(MonotoneKind::Tangle3, 3).unwrap();
    let s = 1.0 / 2f64.sqrt();
    let mut ghz = CVec::zeros(8);
    ghz[0] = c(s, 0.0);
    ghz[7] = c(s, 0.0);
    let eqs = monotone(&MonotoneInput::Simulated(pure(3, ghz.clone())), &spec)
        .unwrap()
        .value;
    assert_abs_diff_eq!(eqs, monotone_direct(&ghz, &spec).unwrap(), epsilon = 1e-12);
    assert_abs_diff_eq!(eqs, 1.0, epsilon = 1e-12);
    // W state has no three-way entanglement
    let w = CVec::from_vec(
        [0, 1, 1, 0, 1, 0, 0, 0]
            .iter()
            .map(|&b| c(b as f64 / 3f64.sqrt(), 0.0))
            .collect(),
    );
    assert!(monotone_direct(&w, &spec).unwrap() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        let psi = rand_pure(&mut rng, 3);
        let v = monotone(&MonotoneInput::Simulated(psi.clone()), &spec).unwrap().value;
        assert_abs_diff_eq!(v, cayley_tangle(psi.amplitudes()), epsilon = 1e-12);
        assert!((0.0..=1.0 + 1e-12).contains(&v));
    }
}

#[test]
fn monotone_average_weights() {
    let spec = MonotoneSpec::new(MonotoneKind::Concurrence2, 2).unwrap();
    let s = 1.0 / 2f64.sqrt();
    let bell = pure(2, CVec::from_vec(vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]));
    let prod = pure(
        2,
        CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]),
    );
    let v = monotone_average(&[(0.25, bell.clone()), (0.75, prod.clone())], &spec).unwrap();
    assert_abs_diff_eq!(v, 0.25, epsilon = 1e-12);
    assert!(monotone_average(&[(0.5, bell), (0.4, prod)], &spec).is_err());
}

#[test]
fn reduced_circuit_identity() {
    assert!((reduced_circuit_unitary(0.0) - CMat::identity(8, 8)).camax() < 1e-15);
    let want = ps("YZZ").to_dense() * c(0.0, -1.0);
    assert!((reduced_circuit_unitary(FRAC_PI_2) - want).camax() < 1e-15);
    let mut p0 = CMat::zeros(8, 8);
    for k in 0..4 {
        p0[(k, k)] = c(1.0, 0.0);
    }
    for k in 0..64 {
        let phi = -PI + 2.0 * PI * k as f64 / 63.0;
        assert!(op_norm(&(reduced_circuit_unitary(phi) - reduced_circuit_target(phi))) < 1e-12);
        assert!(op_norm(&((reduced_circuit_two_gate(phi) - reduced_circuit_target(phi)) * &p0)) < 1e-12);
    }
    // the two-gate variant is wrong once the ancilla starts in |1⟩
    assert!(op_norm(&(reduced_circuit_two_gate(0.3) - reduced_circuit_target(0.3))) > 0.1);
}

#[test]
fn ms_sign_rule() {
    assert_eq!(ms_sign(2), -1.0);
    assert_eq!(ms_sign(3), -1.0);
    assert_eq!(ms_sign(4), 1.0);
    assert_eq!(ms_sign(5), 1.0);
    assert_eq!(ms_sign(6), -1.0);
    assert_eq!(ms_sign(7), -1.0);
}

#[test]
fn ms_compiler_three_qubit_example() {
    let target = ps("ZXX");
    let circ = ms_compile(&target, 0.37).unwrap();
    assert_eq!(circ.len(), 3);
    let t = ms_target(&target, 0.37, circ.space()).unwrap();
    assert!(ms_verify(&circ, &t).unwrap() < 1e-12);
}

#[test]
fn ms_compiler_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 2..=5 {
        for _ in 0..20 {
            let target = random::pauli_string(&mut rng, k, false);
            let phi = rng.random_range(-PI..PI);
            let circ = ms_compile(&target, phi).unwrap();
            let t = ms_target(&target, phi, circ.space()).unwrap();
            assert!(ms_verify(&circ, &t).unwrap() < 1e-12, "{target} {phi}");
        }
    }
    assert!(ms_compile(&ps("ZIX"), 0.1).is_err());
    assert!(ms_compile(&ps("Z"), 0.1).is_err());
}

#[test]
fn ms_compiler_spin_boson() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for target in [ps("ZX"), ps("ZXX"), ps("YZXY")] {
        let phi = rng.random_range(-1.0..1.0);
        let circ = ms_compile_spin_boson(&target, phi, 30).unwrap();
        let t = ms_target(&target, phi, circ.space()).unwrap();
        assert!(ms_verify(&circ, &t).unwrap() < 1e-10);
    }
}

#[test]
fn pauli_exponentials_with_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let p = random::pauli_string(&mut rng, 4, true);
        let phi = rng.random_range(-PI..PI);
        let circ = Circuit::new(
            &HilbertSpace::qubits(4).unwrap(),
            pauli_exponential_gates(&p, phi).unwrap(),
        )
        .unwrap();
        let u = circ.unitary().unwrap();
        let want = pauli_exp(&p, phi);
        // identity strings only differ by a global phase
        let k = if p.is_identity() { want[(0, 0)] } else { c(1.0, 0.0) };
        assert!(op_norm(&(u * k - want)) < 1e-12, "{p}");
    }
}

#[test]
fn trotter_circuit_converges() {
    let terms = ghz_embedded_terms(1.0, 2.0);
    let h = dense(&terms);
    let exact = unitary_exp(&h, 0.6);
    let err = |steps| op_norm(&(trotter_circuit(4, &terms, 0.6, steps).unwrap().unitary().unwrap() - &exact));
    let (e1, e2) = (err(8), err(16));
    assert!(e2 < e1);
    assert!((e1 / e2 - 2.0).abs() < 0.3, "{}", e1 / e2);
}

#[test]
fn anticommutation_single_evolution_example() {
    let theta = ps("YXXX");
    let (readout, dressings) = anticommutation_plan(&theta).unwrap();
    assert_eq!(readout, ps("ZIII"));
    assert_eq!(dressings.len(), 1);
    assert_eq!(dressings[0].0, ps("XXXX"));
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let st: QState = rand_pure(&mut rng, 4).into();
    let r = measure_via_anticommutation(&theta, &st).unwrap();
    assert_abs_diff_eq!(
        r.value,
        expectation_dense(&st, &theta.to_dense()).unwrap().re,
        epsilon = 1e-12
    );
}

#[test]
fn anticommutation_with_identity_slots() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let st: QState = rand_pure(&mut rng, 5).into();
    for s in ["YXXXI", "ZYYII", "IXIYZ", "XIZIY"] {
        let theta = ps(s);
        let r = measure_via_anticommutation(&theta, &st).unwrap();
        assert_eq!(r.dressings.len(), 2, "{s}");
        for (p, _) in &r.dressings {
            assert_eq!(p.weight(), 5);
        }
        assert_abs_diff_eq!(
            r.value,
            expectation_dense(&st, &theta.to_dense()).unwrap().re,
            epsilon = 1e-12
        );
    }
    // even correlations need a two-site readout
    assert_eq!(
        measure_via_anticommutation(&ps("YXXXI"), &st).unwrap().readout.weight(),
        2
    );
    let single = measure_via_anticommutation(&ps("IIZII"), &st).unwrap();
    assert!(single.dressings.is_empty());
    assert_eq!(single.readout, ps("IIZII"));
    assert!(measure_via_anticommutation(&ps("IIIII"), &st).is_err());
}

#[test]
fn noise_inversion_and_cost() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let s = HilbertSpace::qubits(3).unwrap();
    let rho = DensityMatrix::new(&s, random::density(&mut rng, 8)).unwrap();
    assert!((apply_noise(&rho, 1.0, 50).unwrap().matrix() - rho.matrix()).camax() < 1e-15);
    let o = ps("XZY").to_dense();
    let ideal = (&o * rho.matrix()).trace().re;
    assert_abs_diff_eq!(rescale_expectation(ideal, 1.0, 9, &o).unwrap(), ideal, epsilon = 1e-15);
    // repeated single-gate channels match the closed form
    let mut step = rho.clone();
    for _ in 0..7 {
        step = apply_noise(&step, 0.97, 1).unwrap();
    }
    assert!((step.matrix() - apply_noise(&rho, 0.97, 7).unwrap().matrix()).camax() < 1e-15);
    // observables with a trace need the offset term
    let o2 = &o + CMat::identity(8, 8) * c(0.4, 0.0);
    let noisy = apply_noise(&rho, 0.95, 30).unwrap();
    let m = (&o2 * noisy.matrix()).trace().re;
    assert_abs_diff_eq!(
        rescale_expectation(m, 0.95, 30, &o2).unwrap(),
        (&o2 * rho.matrix()).trace().re,
        epsilon = 1e-12
    );
    assert!(apply_noise(&rho, 0.0, 1).is_err());

    let r = cost_ratio(10, 2, 10, 0.97, 0.98).unwrap();
    assert_abs_diff_eq!(r, 2.0 * (0.98 / (3f64.sqrt() * 0.97)).powi(20), epsilon = 1e-15);
    assert!(r < 1e-3);
}

#[test]
fn noisy_circuit_matches_closed_form_and_crosstalk_limit() {
    let terms = ghz_embedded_terms(1.0, 2.0);
    let circ = trotter_circuit(4, &terms, 0.5, 3).unwrap();
    let s = HilbertSpace::qubits(4).unwrap();
    let rho0 = PureState::basis(&s, &[0, 0, 0, 0]).unwrap().to_density();
    let u = circ.unitary().unwrap();
    let ideal = DensityMatrix::new_unchecked(&s, &u * rho0.matrix() * u.adjoint()).unwrap();
    let clean = run_noisy(&circ, &rho0, &NoiseModel::new(1.0, 0.0).unwrap()).unwrap();
    assert!((clean.matrix() - ideal.matrix()).camax() < 1e-13);
    // depolarizing commutes with unitaries, so per-gate noise collapses
    let noisy = run_noisy(&circ, &rho0, &NoiseModel::new(0.97, 0.0).unwrap()).unwrap();
    let closed = apply_noise(&ideal, 0.97, circ.len() as u32).unwrap();
    assert!((noisy.matrix() - closed.matrix()).camax() < 1e-13);
    let native = circ.ion_native();
    assert!(op_norm(&(native.unitary().unwrap() - &u)) < 1e-12);
    assert!(native.gates().iter().all(|g| match g {
        Gate::Rot { axis, .. } => *axis == Pauli::Z,
        _ => !matches!(g, Gate::Central { .. }),
    }));
    let quiet = run_noisy(&native, &rho0, &NoiseModel::new(1.0, 0.0).unwrap()).unwrap();
    assert!((quiet.matrix() - ideal.matrix()).camax() < 1e-13);
    let talk = run_noisy(&native, &rho0, &NoiseModel::new(1.0, 0.05).unwrap()).unwrap();
    assert!((talk.matrix() - ideal.matrix()).camax() > 1e-4);
    assert_abs_diff_eq!(talk.trace(), 1.0, epsilon = 1e-12);
    assert!(NoiseModel::new(1.1, 0.0).is_err());
    let d = NoiseModel::new(1.0, 0.03).unwrap().crosstalk_matrix(3);
    assert_eq!(d[(0, 1)], 0.03);
    assert_eq!(d[(0, 2)], 0.0);
    assert_eq!(d[(1, 1)], 1.0);
}

#[test]
fn ghz_model_builds_three_tangle() {
    let terms = ghz_embedded_terms(1.0, 2.0);
    let ht = dense(&terms);
    let s = HilbertSpace::qubits(4).unwrap();
    let e0 = PureState::basis(&s, &[0, 0, 0, 0]).unwrap();
    // direct 3-qubit model: ω Σ σy + g σx σx σx
    let h = dense(&[(1.0, ps("YII")), (1.0, ps("IYI")), (1.0, ps("IIY")), (2.0, ps("XXX"))]);
    let map = EmbeddingMap::new(3).unwrap();
    let spec = MonotoneSpec::new(MonotoneKind::Tangle3, 3).unwrap();
    let mut peak: f64 = 0.0;
    for k in 0..20 {
        let t = 0.05 * k as f64;
        let e = PureState::new_unchecked(&s, unitary_exp(&ht, t) * e0.amplitudes()).unwrap();
        let via_eqs = tangle_embedded(&e.clone().into()).unwrap();
        let psi = map.decode(e.amplitudes()).unwrap();
        assert!((&psi - unitary_exp(&h, t) * map.decode(e0.amplitudes()).unwrap()).camax() < 1e-10);
        assert_abs_diff_eq!(via_eqs, monotone_direct(&psi, &spec).unwrap(), epsilon = 1e-12);
        peak = peak.max(via_eqs);
    }
    assert!(peak > 0.5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn intertwining(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random::hermitian(&mut rng, 1 << n);
        let m = EmbeddingMap::new(n).unwrap().decode_matrix();
        let ht = embed_hamiltonian(&h).unwrap();
        prop_assert!((&m * &ht - &h * &m).camax() < 1e-12);
        prop_assert!(hermitian_dev(&ht) < 1e-14);
    }

    #[test]
    fn monotones_vanish_on_product_states(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        use MonotoneKind::*;
        for (kind, n) in [(Concurrence2, 2), (SecondOrder2, 2), (Tangle3, 3), (EvenN, 4), (OddN, 5)] {
            let spec = MonotoneSpec::new(kind, n).unwrap();
            let v = monotone(&MonotoneInput::Simulated(rand_product(&mut rng, n)), &spec).unwrap().value;
            prop_assert!(v < 1e-10, "{kind:?}: {v}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn anticommutation_readout_matches_direct(seed in any::<u64>(), n in 3usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut theta = random::pauli_string(&mut rng, n, true);
        if theta.is_identity() {
            theta = PauliString::single(n, 0, Pauli::X);
        }
        let st: QState = if rng.random_bool(0.5) {
            rand_pure(&mut rng, n).into()
        } else {
            DensityMatrix::new(&HilbertSpace::qubits(n).unwrap(), random::density(&mut rng, 1 << n)).unwrap().into()
        };
        let r = measure_via_anticommutation(&theta, &st).unwrap();
        prop_assert!((r.value - expectation_dense(&st, &theta.to_dense()).unwrap().re).abs() < 1e-12);
        prop_assert!(r.dressings.iter().all(|(p, phi)| p.weight() == n && (phi.abs() - FRAC_PI_4).abs() < 1e-15));
    }
}

fn hermitian_dev(m: &CMat) -> f64 {
    (m - m.adjoint()).camax()
}
