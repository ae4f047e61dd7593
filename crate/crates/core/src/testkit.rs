//! Deterministic random instances for invariant suites: seeded generators
//! for hermitian operators, physical states and GKLS splits. Kept in the
//! library so downstream test targets can share the same case distribution.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::engine::GeneratorSplit;
use crate::superop::{
    commutator_superop, dissipator_superop, DensityMatrix, Operator, SuperOperator,
};
use crate::tolerances::Tolerances;

/// SplitMix64: small, seedable, reproducible across platforms.
#[derive(Debug, Clone)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in `[lo, hi)`.
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn complex(&mut self) -> C64 {
        C64::new(self.range(-1.0, 1.0), self.range(-1.0, 1.0))
    }
}

/// A dense complex matrix with entries uniform in the unit square.
pub fn random_matrix(dim: usize, rng: &mut SplitMix64) -> Array2<C64> {
    Array2::from_shape_fn((dim, dim), |_| rng.complex())
}

/// A random hermitian operator, `(A + A†)/2`.
pub fn random_hermitian(dim: usize, rng: &mut SplitMix64) -> Operator {
    let a = random_matrix(dim, rng);
    let h = (&a + &a.t().mapv(|z| z.conj())).mapv(|z| z * C64::new(0.5, 0.0));
    Operator::new(h).expect("square by construction")
}

/// A random physical state, `M M† / tr(M M†)`.
pub fn random_physical_state(dim: usize, rng: &mut SplitMix64) -> DensityMatrix {
    let m = random_matrix(dim, rng);
    let md = m.t().mapv(|z| z.conj());
    let pos = m.dot(&md);
    let tr: C64 = pos.diag().sum();
    DensityMatrix::from_matrix_unchecked(pos.mapv(|z| z / tr))
}

/// A random GKLS generator `-i[H, ·] + Σ γ D[O]` with `O(1)` scales.
pub fn random_lindblad(dim: usize, rng: &mut SplitMix64) -> SuperOperator {
    let split = random_lindblad_split(dim, rng, 1.0);
    split.total_at(0.0)
}

/// A random perturbative split: coherent `L0 = -i[H, ·]` with a spread-out
/// spectrum and dissipative `L1 = Σ γ D[O]` scaled by `strength`. The
/// diagonal ladder keeps frame frequency gaps away from zero, so the
/// oscillatory integrals stay well conditioned and truncated states stay
/// `O(1)` — the regime the expansion is meant for.
pub fn random_lindblad_split(
    dim: usize,
    rng: &mut SplitMix64,
    strength: f64,
) -> GeneratorSplit {
    let tol = Tolerances::default();
    let spread = Array2::from_shape_fn((dim, dim), |(i, j)| {
        if i == j {
            C64::new(i as f64, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let h = random_hermitian(dim, rng);
    let h = Operator::new(spread + h.mat().mapv(|z| z * 0.3)).expect("square");
    let l0 = commutator_superop(&h, &tol).expect("hermitian by construction");
    let channels = 1 + (rng.next_u64() % 2) as usize;
    let mut l1 = SuperOperator::zeros(dim);
    for _ in 0..channels {
        let o = Operator::new(random_matrix(dim, rng)).expect("square");
        let gamma = strength * rng.range(0.05, 0.25);
        l1 = l1
            .add(&dissipator_superop(&o).scaled(C64::new(gamma, 0.0)))
            .expect("same dim");
    }
    GeneratorSplit::constant(l0, l1).expect("same dim")
}
