//! Regression of the multiple-scale engine against the closed-form low-order
//! solutions of the dissipative Jaynes-Cummings model at resonance, for both
//! generator splits, plus the quadrature and triple-product oracles for the
//! frame machinery.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64 as C64;

use multiscale::engine::{
    build_expansion, interaction_frame, oscillatory_antiderivative, secular_split,
    TruncationLevel,
};
use multiscale::models::{
    analytic_sc, analytic_sc_term, analytic_wc, analytic_wc_term, jc_full_liouvillian,
    jc_initial_state, jc_split, JcParams, Regime,
};
use multiscale::superop::{
    commutator_superop, frame_conjugate, spectral_decompose, superop_exp_at, vectorize,
    DensityMatrix, Operator,
};
use multiscale::Tolerances;

fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn max_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    (a - b).iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

fn grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| start + (stop - start) * i as f64 / (points - 1) as f64)
        .collect()
}

fn sc_params() -> JcParams {
    JcParams::resonant(1000.0, 1.0, 0.1, 0.01)
}

fn wc_params() -> JcParams {
    JcParams::resonant(1000.0, 0.01, 1.0, 0.01)
}

#[test]
fn sc_zero_order_exponential_swap() {
    // e^{L0 t} at gt = π/2 moves the excitation fully into the photon mode
    let tol = Tolerances::default();
    let p = sc_params();
    let split = jc_split(&p, Regime::StrongCoupling, &tol).unwrap();
    let t = std::f64::consts::FRAC_PI_2 / p.g;
    let out = superop_exp_at(split.l0(), t)
        .apply(&jc_initial_state().mat().view())
        .unwrap();
    assert!(out[(1, 1)].norm() < 1e-10);
    assert!((out[(2, 2)].re - 1.0).abs() < 1e-10);
}

#[test]
fn sc_coherent_part_is_pure_commutator() {
    let tol = Tolerances::default();
    let mut p = sc_params();
    p.kappa = 0.0;
    p.pump = 0.0;
    let full = jc_full_liouvillian(&p, &tol).unwrap();
    let split = jc_split(&p, Regime::StrongCoupling, &tol).unwrap();
    assert!(max_diff(full.mat(), split.l0().mat()) < 1e-15);
}

#[test]
fn sc_terms_match_closed_forms_over_grid() {
    let tol = Tolerances::default();
    let p = sc_params();
    let split = jc_split(&p, Regime::StrongCoupling, &tol).unwrap();
    let exp = build_expansion(&split, 1, &tol).unwrap();
    let rho0 = jc_initial_state();
    for t in grid(0.0, 50.0, 200) {
        for (m, k) in [(0usize, 0usize), (0, 1), (1, 0)] {
            let engine = exp.evaluate_term(m, k, t, &rho0).unwrap();
            let paper = analytic_sc_term(m, k, &p, t).unwrap();
            let dev = max_diff(&engine, &paper);
            assert!(dev <= 1e-8, "term ({m},{k}) at gt={t}: dev {dev:.2e}");
        }
    }
}

#[test]
fn sc_levels_match_closed_forms_over_grid() {
    let tol = Tolerances::default();
    let p = sc_params();
    let split = jc_split(&p, Regime::StrongCoupling, &tol).unwrap();
    let exp = build_expansion(&split, 1, &tol).unwrap();
    let rho0 = jc_initial_state();
    let levels = [
        TruncationLevel::FullOrder(0),
        TruncationLevel::SolvabilityCondition(1),
        TruncationLevel::FullOrder(1),
    ];
    for t in grid(0.0, 50.0, 200) {
        for level in levels {
            let engine = exp.evaluate_state(level, t, &rho0).unwrap();
            let paper = analytic_sc(level, &p, t).unwrap();
            let dev = max_diff(engine.mat(), paper.mat());
            assert!(dev <= 1e-8, "level {level} at gt={t}: dev {dev:.2e}");
        }
    }
}

#[test]
fn sc_first_order_slow_generator_rates() {
    // K1 carries the two characteristic decay rates, 2/κ and 2/(2P+κ)
    let tol = Tolerances::default();
    let p = sc_params();
    let split = jc_split(&p, Regime::StrongCoupling, &tol).unwrap();
    let exp = build_expansion(&split, 1, &tol).unwrap();
    let dec = spectral_decompose(&exp.k_generators()[1], &tol).unwrap();
    for target in [-(2.0 * p.pump + p.kappa) / 2.0, -p.kappa / 2.0] {
        let hit = dec
            .eigenvalues()
            .iter()
            .any(|l| (l - cr(target)).norm() < 1e-10);
        assert!(hit, "missing K1 rate {target}");
    }
}

#[test]
fn sc_term_point_checks() {
    let tol = Tolerances::default();
    let p = sc_params();
    let split = jc_split(&p, Regime::StrongCoupling, &tol).unwrap();
    let exp = build_expansion(&split, 1, &tol).unwrap();
    let rho0 = jc_initial_state();

    // zero-order matrix at gt = π/4
    let t = std::f64::consts::FRAC_PI_4 / p.g;
    let zero = exp.evaluate_term(0, 0, t, &rho0).unwrap();
    assert!((zero[(1, 1)].re - 0.5).abs() < 1e-10);
    assert!((zero[(2, 2)].re - 0.5).abs() < 1e-10);
    assert!((zero[(1, 2)] - C64::new(0.0, 0.5)).norm() < 1e-10);

    // first correction at gt = 5 against the transcribed closed form
    let t = 5.0 / p.g;
    let corr = exp.evaluate_term(1, 0, t, &rho0).unwrap();
    let paper = analytic_sc_term(1, 0, &p, t).unwrap();
    assert!(max_diff(&corr, &paper) <= 1e-8);

    // improved slow population saturates at κ/(2P+κ)
    let rho = exp
        .evaluate_state(TruncationLevel::SolvabilityCondition(1), 2000.0, &rho0)
        .unwrap();
    let want = p.kappa / (2.0 * p.pump + p.kappa);
    assert!((rho.mat()[(0, 0)].re - want).abs() < 1e-8);
}

#[test]
fn wc_terms_match_closed_forms_over_grid() {
    let tol = Tolerances::default();
    let p = wc_params();
    let split = jc_split(&p, Regime::WeakCoupling, &tol).unwrap();
    let exp = build_expansion(&split, 2, &tol).unwrap();
    let rho0 = jc_initial_state();
    let terms = [(0usize, 0usize), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0)];
    for t in grid(0.0, 500.0, 200) {
        for (m, k) in terms {
            let engine = exp.evaluate_term(m, k, t, &rho0).unwrap();
            let paper = analytic_wc_term(m, k, &p, t).unwrap();
            let dev = max_diff(&engine, &paper);
            assert!(dev <= 1e-8, "term ({m},{k}) at κt={t}: dev {dev:.2e}");
        }
    }
}

#[test]
fn wc_levels_match_closed_forms_over_grid() {
    let tol = Tolerances::default();
    let p = wc_params();
    let split = jc_split(&p, Regime::WeakCoupling, &tol).unwrap();
    let exp = build_expansion(&split, 2, &tol).unwrap();
    let rho0 = jc_initial_state();
    let levels = [
        TruncationLevel::FullOrder(0),
        TruncationLevel::FullOrder(1),
        TruncationLevel::SolvabilityCondition(2),
        TruncationLevel::FullOrder(2),
    ];
    for t in grid(0.0, 500.0, 200) {
        for level in levels {
            let engine = exp.evaluate_state(level, t, &rho0).unwrap();
            let paper = analytic_wc(level, &p, t).unwrap();
            let dev = max_diff(engine.mat(), paper.mat());
            assert!(dev <= 1e-8, "level {level} at κt={t}: dev {dev:.2e}");
        }
    }
}

#[test]
fn wc_first_order_coherence_saturation() {
    let tol = Tolerances::default();
    let p = wc_params();
    let split = jc_split(&p, Regime::WeakCoupling, &tol).unwrap();
    let exp = build_expansion(&split, 1, &tol).unwrap();
    let rho = exp
        .evaluate_state(TruncationLevel::FullOrder(1), 2000.0, &jc_initial_state())
        .unwrap();
    // 2ig/κ = 0.02i for g = 0.01κ
    assert!((rho.mat()[(1, 2)] - C64::new(0.0, 0.02)).norm() < 1e-8);
}

#[test]
fn ladder_commutation_for_both_regimes() {
    let tol = Tolerances::default();
    for (p, regime) in [
        (sc_params(), Regime::StrongCoupling),
        (wc_params(), Regime::WeakCoupling),
    ] {
        let split = jc_split(&p, regime, &tol).unwrap();
        let exp = build_expansion(&split, 2, &tol).unwrap();
        let ks = exp.k_generators();
        for n in 0..2 {
            let norm = ks[n + 1].commutator_norm(&ks[n]).unwrap();
            let scale = ks[n + 1].max_norm().max(ks[n].max_norm()).max(1e-300);
            assert!(
                norm <= 1e-8 * scale,
                "[K{},K{}] = {norm:.3e} vs scale {scale:.3e}",
                n + 1,
                n
            );
        }
    }
}

#[test]
fn sc_interaction_frame_matches_triple_product_oracle() {
    let tol = Tolerances::default();
    let p = sc_params();
    let split = jc_split(&p, Regime::StrongCoupling, &tol).unwrap();
    let frame = Arc::new(spectral_decompose(split.l0(), &tol).unwrap());
    let framed = interaction_frame(split.l1_terms(), &frame, &tol).unwrap();
    let l1 = split.total_at(0.0).sub(split.l0()).unwrap();
    let tau = std::f64::consts::FRAC_PI_2 / p.g;
    let brute = superop_exp_at(split.l0(), -tau)
        .compose(&l1)
        .unwrap()
        .compose(&superop_exp_at(split.l0(), tau))
        .unwrap();
    assert!(max_diff(framed.evaluate(tau).mat(), brute.mat()) < 1e-9);
}

/// Adaptive Simpson quadrature on a matrix-valued integrand.
fn adaptive_simpson<F: Fn(f64) -> Array2<C64>>(
    f: &F,
    a: f64,
    b: f64,
    eps: f64,
    depth: usize,
) -> Array2<C64> {
    fn simpson<F: Fn(f64) -> Array2<C64>>(f: &F, a: f64, b: f64) -> Array2<C64> {
        let m = 0.5 * (a + b);
        (f(a) + f(m).mapv(|z| z * 4.0) + f(b)).mapv(|z| z * ((b - a) / 6.0))
    }
    fn recurse<F: Fn(f64) -> Array2<C64>>(
        f: &F,
        a: f64,
        b: f64,
        whole: Array2<C64>,
        eps: f64,
        depth: usize,
    ) -> Array2<C64> {
        let m = 0.5 * (a + b);
        let left = simpson(f, a, m);
        let right = simpson(f, m, b);
        let err = (&left + &right - &whole)
            .iter()
            .fold(0.0f64, |acc, z| acc.max(z.norm()));
        if depth == 0 || err < 15.0 * eps {
            return left + right;
        }
        recurse(f, a, m, left, eps * 0.5, depth - 1) + recurse(f, m, b, right, eps * 0.5, depth - 1)
    }
    let whole = simpson(f, a, b);
    recurse(f, a, b, whole, eps, depth)
}

#[test]
fn sc_first_correction_matches_quadrature_oracle() {
    // independent route: integrate the oscillatory remainder of the
    // brute-force frame conjugation, entry by entry. A moderate detuning
    // scale keeps the oscillatory integrand resolvable by quadrature.
    let tol = Tolerances::default();
    let p = JcParams::resonant(10.0, 1.0, 0.1, 0.01);
    let split = jc_split(&p, Regime::StrongCoupling, &tol).unwrap();
    let frame = Arc::new(spectral_decompose(split.l0(), &tol).unwrap());
    let framed = interaction_frame(split.l1_terms(), &frame, &tol).unwrap();
    let secular = secular_split(&framed).unwrap();
    let b = oscillatory_antiderivative(&secular);

    let l1 = split.total_at(0.0).sub(split.l0()).unwrap();
    let mean = secular.mean().clone();
    let integrand = |s: f64| {
        let f = frame_conjugate(&l1, &frame, s).unwrap();
        f.sub(&mean).unwrap().mat().clone()
    };
    let tau = 3.0 / p.g;
    let oracle = adaptive_simpson(&integrand, 0.0, tau, 1e-11, 30);
    let dev = max_diff(b.evaluate(tau).mat(), &oracle);
    assert!(dev <= 1e-8, "B(τ) vs quadrature: {dev:.2e}");
}

#[test]
fn rk_oracle_reproduces_damped_rabi_dynamics() {
    // self-consistency of the integrator against the exponential of the
    // constant full liouvillian, on the resonant strong-coupling problem
    let tol = Tolerances::default();
    let p = sc_params();
    let full = jc_full_liouvillian(&p, &tol).unwrap();
    let rho0 = jc_initial_state();
    let n_pts = 101;
    let ts = grid(0.0, std::f64::consts::FRAC_PI_2, n_pts);
    let traj = multiscale::oracle::rk_integrate(&full, &rho0, &ts, 1e-10, 1e-12, &tol).unwrap();
    let mut max_td = 0.0f64;
    for (t, s) in ts.iter().zip(traj.states.iter()) {
        let exact = superop_exp_at(&full, *t).apply(&rho0.mat().view()).unwrap();
        let td = multiscale::metrics::trace_distance(
            &DensityMatrix::from_matrix_unchecked(exact),
            s,
            &tol,
        )
        .unwrap();
        max_td = max_td.max(td);
    }
    assert!(max_td < 1e-8, "cross-oracle distance {max_td:.2e}");

    // damped Rabi oscillation: the excited population swaps almost fully
    let end = traj.states.last().unwrap();
    assert!(end.mat()[(2, 2)].re > 0.9);
    assert!(end.mat()[(1, 1)].re < 0.1);
}

#[test]
fn commutator_check_requires_hermitian_hamiltonian() {
    // smoke check that the JC operators satisfy the hermiticity gates used
    // by the splits
    let tol = Tolerances::default();
    let p = sc_params();
    let ops = multiscale::models::jc_operators(&p);
    assert!(commutator_superop(&ops.h0, &tol).is_ok());
    assert!(commutator_superop(&ops.v, &tol).is_ok());
    assert!(commutator_superop(
        &Operator::new(ops.a.mat().clone()).unwrap(),
        &tol
    )
    .is_err());
}

#[test]
fn framed_signal_vectorization_consistency() {
    // the framed F(τ) applied to vec(ρ) agrees with conjugating state-side
    let tol = Tolerances::default();
    let p = sc_params();
    let split = jc_split(&p, Regime::StrongCoupling, &tol).unwrap();
    let frame = Arc::new(spectral_decompose(split.l0(), &tol).unwrap());
    let framed = interaction_frame(split.l1_terms(), &frame, &tol).unwrap();
    let rho = jc_initial_state();
    let tau = 0.37;
    let f_tau = framed.evaluate(tau);
    let via_super = f_tau.mat().dot(&vectorize(&rho.mat().view()));
    let l1 = split.total_at(0.0).sub(split.l0()).unwrap();
    let brute = superop_exp_at(split.l0(), -tau)
        .compose(&l1)
        .unwrap()
        .compose(&superop_exp_at(split.l0(), tau))
        .unwrap();
    let via_brute = brute.mat().dot(&vectorize(&rho.mat().view()));
    let dev = (&via_super - &via_brute)
        .iter()
        .fold(0.0f64, |acc, z| acc.max(z.norm()));
    assert!(dev < 1e-9);
}

#[test]
fn sc_expansion_of_order_two_improves_long_time_coherence() {
    // the second solvability condition corrects the long-time coherence
    // amplitude that the first-order truncations miss
    let tol = Tolerances::default();
    let p = sc_params();
    let split = jc_split(&p, Regime::StrongCoupling, &tol).unwrap();
    let exp = build_expansion(&split, 2, &tol).unwrap();
    let full = jc_full_liouvillian(&p, &tol).unwrap();
    let rho0 = jc_initial_state();
    let mut s1_err = 0.0f64;
    let mut s2_err = 0.0f64;
    for t in grid(200.0, 220.0, 81) {
        let exact = superop_exp_at(&full, t).apply(&rho0.mat().view()).unwrap();
        let s1 = exp
            .evaluate_state(TruncationLevel::SolvabilityCondition(1), t, &rho0)
            .unwrap();
        let s2 = exp
            .evaluate_state(TruncationLevel::SolvabilityCondition(2), t, &rho0)
            .unwrap();
        s1_err = s1_err.max((s1.mat()[(1, 2)] - exact[(1, 2)]).norm());
        s2_err = s2_err.max((s2.mat()[(1, 2)] - exact[(1, 2)]).norm());
    }
    assert!(
        s2_err < 0.2 * s1_err,
        "s2 coherence error {s2_err:.2e} not well below s1 {s1_err:.2e}"
    );
}
