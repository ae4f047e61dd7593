//! The dissipative Jaynes-Cummings model on the truncated three-level basis
//! `{|0> = |g,0_c>, |1> = |e,0_c>, |2> = |g,1_c>}`, with photon leakage at
//! rate `κ` and incoherent pumping of the two-level system at rate `P`.
//!
//! Besides the generator splits for the strong- and weak-coupling regimes,
//! the module carries the closed-form low-order solutions at resonance for
//! the initial condition `ρ_11(0) = 1`, which serve as regression oracles
//! for the perturbative engine. Only the `(0,0)`, `(1,1)` and `(1,2)`
//! entries of the corrections are independent; the rest follow from
//! hermiticity, tracelessness of corrections and unit trace of the leading
//! term.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::engine::{GeneratorSplit, TruncationLevel};
use crate::error::{Error, Result};
use crate::superop::{
    commutator_superop, dissipator_superop, DensityMatrix, Operator, SuperOperator,
};
use crate::tolerances::Tolerances;

/// Model parameters, all in a common inverse-time unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JcParams {
    pub omega_c: f64,
    pub omega_a: f64,
    pub g: f64,
    pub kappa: f64,
    pub pump: f64,
}

impl JcParams {
    pub fn resonant(omega: f64, g: f64, kappa: f64, pump: f64) -> Self {
        Self {
            omega_c: omega,
            omega_a: omega,
            g,
            kappa,
            pump,
        }
    }

    pub fn is_resonant(&self) -> bool {
        self.omega_c == self.omega_a
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("g", self.g), ("kappa", self.kappa), ("pump", self.pump)] {
            if v < 0.0 {
                return Err(Error::NotPhysical(format!("{name} = {v} must be >= 0")));
            }
        }
        Ok(())
    }
}

/// Which part of the liouvillian is treated as the perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `g > κ` intended: dissipators are the perturbation.
    StrongCoupling,
    /// `g < κ` intended: the interaction hamiltonian and the pump are the
    /// perturbation. Both splits are well defined regardless of parameters.
    WeakCoupling,
}

/// The model operators on the truncated basis.
#[derive(Debug, Clone)]
pub struct JcOperators {
    pub h0: Operator,
    pub v: Operator,
    pub a: Operator,
    pub sigma_plus: Operator,
    pub sigma_minus: Operator,
    pub sigma_z: Operator,
}

fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Build the bare hamiltonian, the interaction and the jump operators.
pub fn jc_operators(params: &JcParams) -> JcOperators {
    let mut a = Array2::zeros((3, 3));
    a[(0, 2)] = cr(1.0);
    let mut sp = Array2::zeros((3, 3));
    sp[(1, 0)] = cr(1.0);
    let mut sm = Array2::zeros((3, 3));
    sm[(0, 1)] = cr(1.0);
    let mut sz = Array2::zeros((3, 3));
    sz[(0, 0)] = cr(-1.0);
    sz[(1, 1)] = cr(1.0);
    sz[(2, 2)] = cr(-1.0);
    let mut v = Array2::zeros((3, 3));
    v[(1, 2)] = cr(1.0);
    v[(2, 1)] = cr(1.0);
    // H0 = ω_c a†a + (ω_a/2) σz on the truncated basis
    let mut h0 = Array2::zeros((3, 3));
    h0[(0, 0)] = cr(-params.omega_a / 2.0);
    h0[(1, 1)] = cr(params.omega_a / 2.0);
    h0[(2, 2)] = cr(params.omega_c - params.omega_a / 2.0);
    JcOperators {
        h0: Operator::new(h0).expect("square"),
        v: Operator::new(v).expect("square"),
        a: Operator::new(a).expect("square"),
        sigma_plus: Operator::new(sp).expect("square"),
        sigma_minus: Operator::new(sm).expect("square"),
        sigma_z: Operator::new(sz).expect("square"),
    }
}

/// The full GKLS generator `-i[H0 + gV, ·] + κ D[a] + P D[σ+]`.
pub fn jc_full_liouvillian(params: &JcParams, tol: &Tolerances) -> Result<SuperOperator> {
    params.validate()?;
    let ops = jc_operators(params);
    let h = Operator::new(ops.h0.mat() + &ops.v.mat().mapv(|z| z * params.g))?;
    crate::superop::lindblad_liouvillian(
        &h,
        &[(params.kappa, ops.a), (params.pump, ops.sigma_plus)],
        tol,
    )
}

/// The regime-dependent generator split. Both splits partition the same
/// full liouvillian.
pub fn jc_split(params: &JcParams, regime: Regime, tol: &Tolerances) -> Result<GeneratorSplit> {
    params.validate()?;
    let ops = jc_operators(params);
    let diss_a = dissipator_superop(&ops.a).scaled(cr(params.kappa));
    let diss_p = dissipator_superop(&ops.sigma_plus).scaled(cr(params.pump));
    match regime {
        Regime::StrongCoupling => {
            let h = Operator::new(ops.h0.mat() + &ops.v.mat().mapv(|z| z * params.g))?;
            let l0 = commutator_superop(&h, tol)?;
            let l1 = diss_a.add(&diss_p)?;
            GeneratorSplit::constant(l0, l1)
        }
        Regime::WeakCoupling => {
            let l0 = commutator_superop(&ops.h0, tol)?.add(&diss_a)?;
            let l1 = commutator_superop(&ops.v, tol)?
                .scaled(cr(params.g))
                .add(&diss_p)?;
            GeneratorSplit::constant(l0, l1)
        }
    }
}

/// The paper-style initial condition: atom excited, no photons.
pub fn jc_initial_state() -> DensityMatrix {
    DensityMatrix::basis_state(3, 1)
}

fn require_resonance(params: &JcParams) -> Result<()> {
    if !params.is_resonant() {
        return Err(Error::UnsupportedLevel(
            "closed forms are derived at resonance (omega_c = omega_a)".into(),
        ));
    }
    Ok(())
}

fn hermitian_completion(mut m: Array2<C64>) -> Array2<C64> {
    for i in 0..3 {
        for j in (i + 1)..3 {
            m[(j, i)] = m[(i, j)].conj();
        }
    }
    m
}

/// Closed-form expansion term `ϱ^{(m,k)}` for the strong-coupling split;
/// covers `(0,0)`, `(0,1)` and `(1,0)`.
pub fn analytic_sc_term(m: usize, k: usize, params: &JcParams, t: f64) -> Result<Array2<C64>> {
    require_resonance(params)?;
    let g = params.g;
    let kap = params.kappa;
    let p = params.pump;
    let r = 2.0 * p + kap;
    let e_r = (-r * t / 2.0).exp();
    let e_k = (-kap * t / 2.0).exp();
    let e_p = (-p * t).exp();
    let (s, c) = (2.0 * g * t).sin_cos();
    let mut out = Array2::zeros((3, 3));
    match (m, k) {
        (0, 0) => {
            out[(1, 1)] = cr((g * t).cos().powi(2));
            out[(2, 2)] = cr((g * t).sin().powi(2));
            out[(1, 2)] = C64::new(0.0, 0.5 * s);
        }
        (0, 1) => {
            out[(0, 0)] = cr(kap / r * (1.0 - e_r));
            out[(1, 1)] = cr((2.0 * p + kap * e_r + r * e_k * c) / (2.0 * r));
            out[(1, 2)] = C64::new(0.0, 0.5 * e_k * s);
            out[(2, 2)] = cr(1.0) - out[(0, 0)] - out[(1, 1)];
        }
        (1, 0) => {
            out[(0, 0)] = cr(-kap * s / (4.0 * g) * e_k);
            out[(1, 1)] =
                cr(kap * s / (8.0 * g * r) * (r * (1.0 + e_p) * e_k + 4.0 * p * (1.0 - e_r)));
            out[(1, 2)] = C64::new(
                0.0,
                kap * (g * t).sin().powi(2) / (4.0 * g * r) * (r * e_r + 4.0 * p * (1.0 - e_r)),
            );
            out[(2, 2)] = -out[(0, 0)] - out[(1, 1)];
        }
        _ => {
            return Err(Error::UnsupportedLevel(format!(
                "no strong-coupling closed form for term ({m},{k})"
            )))
        }
    }
    Ok(hermitian_completion(out))
}

/// Closed-form truncated state for the strong-coupling split; covers
/// `FullOrder(0)`, `SolvabilityCondition(1)` and `FullOrder(1)`.
pub fn analytic_sc(level: TruncationLevel, params: &JcParams, t: f64) -> Result<DensityMatrix> {
    let parts: &[(usize, usize)] = match level {
        TruncationLevel::FullOrder(0) => &[(0, 0)],
        TruncationLevel::SolvabilityCondition(1) => &[(0, 1)],
        TruncationLevel::FullOrder(1) => &[(0, 1), (1, 0)],
        other => {
            return Err(Error::UnsupportedLevel(format!(
                "no strong-coupling closed form for level {other}"
            )))
        }
    };
    let mut acc = Array2::zeros((3, 3));
    for (m, k) in parts {
        acc = acc + analytic_sc_term(*m, *k, params, t)?;
    }
    Ok(DensityMatrix::from_matrix_unchecked(acc))
}

/// Closed-form expansion term `ϱ^{(m,k)}` for the weak-coupling split;
/// covers `(0,0)`, `(0,1)`, `(1,0)`, `(0,2)`, `(1,1)` and `(2,0)`.
pub fn analytic_wc_term(m: usize, k: usize, params: &JcParams, t: f64) -> Result<Array2<C64>> {
    require_resonance(params)?;
    let g = params.g;
    let kap = params.kappa;
    let p = params.pump;
    let e_k2 = (-kap * t / 2.0).exp();
    let e_k = (-kap * t).exp();
    let e_p = (-p * t).exp();
    let e_r = (-(2.0 * p + kap) * t / 2.0).exp();
    let coh1 = C64::new(0.0, 2.0 * g / kap * (1.0 - e_k2));
    let mut out = Array2::zeros((3, 3));
    match (m, k) {
        (0, 0) | (0, 1) | (0, 2) => {
            out[(1, 1)] = cr(1.0);
        }
        (1, 0) => {
            out[(1, 2)] = coh1;
        }
        (1, 1) => {
            out[(0, 0)] = cr(4.0 * g * g / (p * kap) * (1.0 - e_p));
            out[(1, 1)] = -out[(0, 0)];
            out[(1, 2)] = coh1;
        }
        (2, 0) => {
            out[(0, 0)] = cr(-4.0 * g * g / (kap * kap) * (3.0 - 4.0 * e_k2 + e_k));
            out[(1, 1)] = cr(8.0 * g * g / (kap * kap) * (1.0 - e_k2));
            out[(1, 2)] = C64::new(
                0.0,
                -8.0 * g * g * g / (p * kap * kap) * (1.0 - e_p - e_k2 + e_r),
            );
            out[(2, 2)] = -out[(0, 0)] - out[(1, 1)];
        }
        _ => {
            return Err(Error::UnsupportedLevel(format!(
                "no weak-coupling closed form for term ({m},{k})"
            )))
        }
    }
    Ok(hermitian_completion(out))
}

/// Closed-form truncated state for the weak-coupling split; covers
/// `FullOrder(0)`, `FullOrder(1)`, `SolvabilityCondition(2)` and
/// `FullOrder(2)`.
pub fn analytic_wc(level: TruncationLevel, params: &JcParams, t: f64) -> Result<DensityMatrix> {
    let parts: &[(usize, usize)] = match level {
        TruncationLevel::FullOrder(0) => &[(0, 0)],
        TruncationLevel::FullOrder(1) => &[(0, 1), (1, 0)],
        TruncationLevel::SolvabilityCondition(2) => &[(0, 2), (1, 1)],
        TruncationLevel::FullOrder(2) => &[(0, 2), (1, 1), (2, 0)],
        other => {
            return Err(Error::UnsupportedLevel(format!(
                "no weak-coupling closed form for level {other}"
            )))
        }
    };
    let mut acc = Array2::zeros((3, 3));
    for (m, k) in parts {
        acc = acc + analytic_wc_term(*m, *k, params, t)?;
    }
    Ok(DensityMatrix::from_matrix_unchecked(acc))
}
