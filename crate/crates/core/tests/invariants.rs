//! Randomized invariant suites for the linear-algebra layer, the expansion
//! ladder and the reference integrator, over system dimensions 2, 3 and 4.

use std::sync::OnceLock;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

use multiscale::engine::{build_expansion, GeneratorSplit, MsptExpansion, TruncationLevel};
use multiscale::metrics::trace_distance;
use multiscale::oracle::{exact_constant_map, rk_integrate};
use multiscale::superop::{
    commutator_superop, devectorize, dissipator_superop, frame_conjugate, lindblad_liouvillian,
    spectral_decompose, superop_exp_at, vectorize, DensityMatrix, Operator, SuperOperator,
};
use multiscale::testkit::{
    random_hermitian, random_lindblad, random_lindblad_split, random_matrix,
    random_physical_state, SplitMix64,
};
use multiscale::Tolerances;

fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

fn max_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    max_abs(&(a - b))
}

fn herm_dev(m: &Array2<C64>) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Dimensions cycled so that every suite sees at least 50 cases over 2..4.
const CASE_COUNT: usize = 54;

struct Case {
    dim: usize,
    expansion: MsptExpansion,
    rho0: DensityMatrix,
}

fn cases() -> &'static [Case] {
    static CASES: OnceLock<Vec<Case>> = OnceLock::new();
    CASES.get_or_init(|| {
        let tol = Tolerances::default();
        let mut rng = SplitMix64::new(0x5eed_cafe_f00d_0001);
        let mut out = Vec::with_capacity(CASE_COUNT);
        for idx in 0..CASE_COUNT {
            let dim = 2 + idx % 3;
            let split = random_lindblad_split(dim, &mut rng, 0.15);
            let expansion = build_expansion(&split, 2, &tol)
                .unwrap_or_else(|e| panic!("case {idx} (dim {dim}) failed to build: {e}"));
            let rho0 = random_physical_state(dim, &mut rng);
            out.push(Case {
                dim,
                expansion,
                rho0,
            });
        }
        out
    })
}

const TIME_GRID: [f64; 4] = [0.4, 1.3, 3.7, 8.0];

#[test]
fn ladder_commutation_across_cases() {
    for (idx, case) in cases().iter().enumerate() {
        let ks = case.expansion.k_generators();
        for n in 0..case.expansion.order() {
            let norm = ks[n + 1].commutator_norm(&ks[n]).unwrap();
            let scale = ks[n + 1].max_norm().max(ks[n].max_norm()).max(1e-300);
            assert!(
                norm <= 1e-8 * scale,
                "case {idx}: [K{},K{}] = {norm:.3e}, scale {scale:.3e}",
                n + 1,
                n
            );
        }
    }
}

#[test]
fn leading_term_unit_trace_and_corrections_traceless() {
    for (idx, case) in cases().iter().enumerate() {
        for &t in &TIME_GRID {
            for m in 0..=case.expansion.order() {
                for k in 0..=(case.expansion.order() - m) {
                    let term = case.expansion.evaluate_term(m, k, t, &case.rho0).unwrap();
                    let tr: C64 = term.diag().sum();
                    if m == 0 {
                        assert!(
                            (tr - C64::new(1.0, 0.0)).norm() <= 1e-9,
                            "case {idx} ({m},{k}) t={t}: trace {tr}"
                        );
                    } else {
                        assert!(
                            tr.norm() <= 1e-9,
                            "case {idx} ({m},{k}) t={t}: trace {tr}"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn states_stay_hermitian() {
    for (idx, case) in cases().iter().enumerate() {
        for &t in &TIME_GRID {
            for level in [
                TruncationLevel::SolvabilityCondition(1),
                TruncationLevel::FullOrder(1),
                TruncationLevel::FullOrder(2),
            ] {
                let s = case.expansion.evaluate_state(level, t, &case.rho0).unwrap();
                let dev = herm_dev(s.mat());
                assert!(dev <= 1e-9, "case {idx} level {level} t={t}: {dev:.2e}");
            }
        }
    }
}

#[test]
fn initial_condition_is_exact() {
    for (idx, case) in cases().iter().enumerate() {
        for level in [
            TruncationLevel::FullOrder(0),
            TruncationLevel::SolvabilityCondition(1),
            TruncationLevel::FullOrder(2),
        ] {
            let s = case
                .expansion
                .evaluate_state(level, 0.0, &case.rho0)
                .unwrap();
            let dev = max_diff(s.mat(), case.rho0.mat());
            assert!(dev <= 1e-12, "case {idx} level {level}: {dev:.2e}");
        }
    }
}

#[test]
fn map_and_state_evaluations_agree() {
    for (idx, case) in cases().iter().enumerate() {
        for &t in &TIME_GRID {
            let level = TruncationLevel::FullOrder(2);
            let map = case.expansion.evaluate_map(level, t).unwrap();
            let via_map = devectorize(&map.mat().dot(&case.rho0.vectorize())).unwrap();
            let state = case.expansion.evaluate_state(level, t, &case.rho0).unwrap();
            let dev = max_diff(&via_map, state.mat());
            assert!(dev <= 1e-12, "case {idx} t={t}: {dev:.2e}");
        }
    }
}

#[test]
fn corrections_vanish_at_zero_exactly() {
    for (idx, case) in cases().iter().enumerate() {
        for m in 1..=case.expansion.order() {
            for n in 0..=(case.expansion.order() - m) {
                let b = case.expansion.b_correction(m, n).unwrap();
                assert_eq!(
                    b.evaluate(0.0).max_norm(),
                    0.0,
                    "case {idx}: B({m},{n})(0) != 0"
                );
            }
        }
    }
}

#[test]
fn map_identity_at_zero() {
    for (idx, case) in cases().iter().enumerate() {
        let eye = SuperOperator::identity(case.dim);
        let map = case
            .expansion
            .evaluate_map(TruncationLevel::FullOrder(2), 0.0)
            .unwrap();
        let dev = max_diff(map.mat(), eye.mat());
        assert!(dev <= 1e-12, "case {idx}: {dev:.2e}");
    }
}

#[test]
fn spectral_reconstruction_across_cases() {
    let tol = Tolerances::default();
    let mut rng = SplitMix64::new(0x5eed_0002);
    for idx in 0..CASE_COUNT {
        let dim = 2 + idx % 3;
        let l = random_lindblad(dim, &mut rng);
        let dec = spectral_decompose(&l, &tol).unwrap();
        let dev = max_diff(&dec.reconstruct(), l.mat());
        let scale = l.max_norm().max(1e-300);
        assert!(dev <= 1e-10 * scale.max(1.0), "case {idx}: {dev:.2e}");
    }
}

#[test]
fn exponential_group_property_across_cases() {
    let mut rng = SplitMix64::new(0x5eed_0003);
    for idx in 0..CASE_COUNT {
        let dim = 2 + idx % 3;
        let l = random_lindblad(dim, &mut rng);
        let (t1, t2) = (rng.range(0.1, 1.5), rng.range(0.1, 1.5));
        let prod = superop_exp_at(&l, t1)
            .compose(&superop_exp_at(&l, t2))
            .unwrap();
        let sum = superop_exp_at(&l, t1 + t2);
        let dev = max_diff(prod.mat(), sum.mat());
        assert!(dev <= 1e-10, "case {idx}: {dev:.2e}");
    }
}

#[test]
fn frame_conjugation_matches_triple_product_across_cases() {
    let tol = Tolerances::default();
    let mut rng = SplitMix64::new(0x5eed_0004);
    for idx in 0..20 {
        let dim = 2 + idx % 3;
        let h = random_hermitian(dim, &mut rng);
        let k = commutator_superop(&h, &tol).unwrap();
        let frame = spectral_decompose(&k, &tol).unwrap();
        let o = Operator::new(random_matrix(dim, &mut rng)).unwrap();
        let f = dissipator_superop(&o);
        let t = rng.range(0.2, 2.0);
        let got = frame_conjugate(&f, &frame, t).unwrap();
        let brute = superop_exp_at(&k, -t)
            .compose(&f)
            .unwrap()
            .compose(&superop_exp_at(&k, t))
            .unwrap();
        assert!(max_diff(got.mat(), brute.mat()) <= 1e-10, "case {idx}");
    }
}

#[test]
fn cross_oracle_rk_vs_exponential() {
    let tol = Tolerances::default();
    let mut rng = SplitMix64::new(0x5eed_0005);
    for idx in 0..CASE_COUNT {
        let dim = 2 + idx % 3;
        let l = random_lindblad(dim, &mut rng);
        let rho0 = random_physical_state(dim, &mut rng);
        let ts: Vec<f64> = (0..9).map(|i| i as f64 * 0.5).collect();
        let traj = rk_integrate(&l, &rho0, &ts, 1e-10, 1e-12, &tol).unwrap();
        for (t, s) in ts.iter().zip(traj.states.iter()) {
            let exact = exact_constant_map(&l, *t).apply(&rho0.mat().view()).unwrap();
            let td =
                trace_distance(&DensityMatrix::from_matrix_unchecked(exact), s, &tol).unwrap();
            assert!(td <= 1e-8, "case {idx} t={t}: {td:.2e}");
        }
    }
}

#[test]
fn commuting_split_exactness_property() {
    // L0 = -i[σz/2, ·], L1 = γ D[σz] commute; the first-order map is exact
    let tol = Tolerances::default();
    let gamma = 0.35;
    let h = Operator::new(ndarray::array![
        [C64::new(0.5, 0.0), C64::new(0.0, 0.0)],
        [C64::new(0.0, 0.0), C64::new(-0.5, 0.0)]
    ])
    .unwrap();
    let sz = Operator::new(ndarray::array![
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        [C64::new(0.0, 0.0), C64::new(-1.0, 0.0)]
    ])
    .unwrap();
    let l0 = commutator_superop(&h, &tol).unwrap();
    let l1 = dissipator_superop(&sz).scaled(C64::new(gamma, 0.0));
    assert!(l0.commutator_norm(&l1).unwrap() < 1e-14);
    let split = GeneratorSplit::constant(l0, l1).unwrap();
    let exp = build_expansion(&split, 1, &tol).unwrap();
    let full = split.total_at(0.0);
    let mut rng = SplitMix64::new(0x5eed_0006);
    let rho0 = random_physical_state(2, &mut rng);
    for i in 0..=40 {
        let t = i as f64 * 0.5 / gamma;
        let approx = exp
            .evaluate_state(TruncationLevel::FullOrder(1), t, &rho0)
            .unwrap();
        let exact = exact_constant_map(&full, t)
            .apply(&rho0.mat().view())
            .unwrap();
        let td = trace_distance(
            &approx,
            &DensityMatrix::from_matrix_unchecked(exact),
            &tol,
        )
        .unwrap();
        assert!(td <= 1e-9, "t={t}: {td:.2e}");
    }
}

#[test]
fn lindblad_trace_annihilation_and_hermiticity_preservation() {
    // 200 random hermitian states against randomly drawn GKLS generators
    let tol = Tolerances::default();
    let mut rng = SplitMix64::new(0x5eed_0007);
    for idx in 0..200 {
        let dim = 2 + idx % 3;
        let h = random_hermitian(dim, &mut rng);
        let o = Operator::new(random_matrix(dim, &mut rng)).unwrap();
        let l = lindblad_liouvillian(&h, &[(rng.range(0.0, 1.0), o)], &tol).unwrap();
        let a = random_matrix(dim, &mut rng);
        let rho = (&a + &a.t().mapv(|z| z.conj())).mapv(|z| z * C64::new(0.5, 0.0));
        let out = l.apply(&rho.view()).unwrap();
        let tr: C64 = out.diag().sum();
        assert!(tr.norm() <= 1e-12, "case {idx}: trace {tr}");
        assert!(herm_dev(&out) <= 1e-12, "case {idx}: hermiticity");
    }
}

// ---------------------------------------------------------------------------
// proptest properties
// ---------------------------------------------------------------------------

fn complex_matrix_strategy(dim: usize) -> impl Strategy<Value = Array2<C64>> {
    proptest::collection::vec(
        (
            prop_oneof![Just(0.0), -1.0f64..1.0],
            prop_oneof![Just(0.0), -1.0f64..1.0],
        ),
        dim * dim,
    )
    .prop_map(move |vals| {
        Array2::from_shape_fn((dim, dim), |(i, j)| {
            let (re, im) = vals[i * dim + j];
            C64::new(re, im)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vectorize_round_trip_is_exact(m in complex_matrix_strategy(3)) {
        let v = vectorize(&m.view());
        let back = devectorize(&v).unwrap();
        prop_assert_eq!(m, back);
    }

    #[test]
    fn dissipator_annihilates_trace(m in complex_matrix_strategy(3), s in complex_matrix_strategy(3)) {
        let o = Operator::new(m).unwrap();
        let l = dissipator_superop(&o);
        let rho = (&s + &s.t().mapv(|z| z.conj())).mapv(|z| z * C64::new(0.5, 0.0));
        let out = l.apply(&rho.view()).unwrap();
        let tr: C64 = out.diag().sum();
        prop_assert!(tr.norm() <= 1e-12);
    }

    #[test]
    fn trace_distance_metric_properties(
        a in complex_matrix_strategy(3),
        b in complex_matrix_strategy(3),
        c in complex_matrix_strategy(3),
    ) {
        let tol = Tolerances::default();
        let normalize = |m: &Array2<C64>| {
            let md = m.t().mapv(|z| z.conj());
            let pos = m.dot(&md) + Array2::<C64>::eye(3).mapv(|z| z * C64::new(1e-6, 0.0));
            let tr: C64 = pos.diag().sum();
            DensityMatrix::from_matrix_unchecked(pos.mapv(|z| z / tr))
        };
        let (x, y, z) = (normalize(&a), normalize(&b), normalize(&c));
        let dxy = trace_distance(&x, &y, &tol).unwrap();
        let dyx = trace_distance(&y, &x, &tol).unwrap();
        let dxz = trace_distance(&x, &z, &tol).unwrap();
        let dzy = trace_distance(&z, &y, &tol).unwrap();
        prop_assert!((dxy - dyx).abs() <= 1e-12);
        prop_assert!(dxy >= 0.0);
        prop_assert!(dxy <= dxz + dzy + 1e-12);
        prop_assert!(dxy <= 1.0 + 1e-12);
    }
}
