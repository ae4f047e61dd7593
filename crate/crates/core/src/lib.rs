//! Approximate dynamical maps for time-local quantum master equations.
//!
//! The library builds multiple-scale approximations to the evolution
//! `dρ/dt = L(t) ρ` generated by a (generally non-hermitian) liouvillian
//! superoperator. A generator split `L = L0 + L1(t)` is turned into a ladder
//! of commuting slow generators `K_n` plus bounded oscillatory corrections
//! `B_{m,n}`, from which truncated density matrices and dynamical maps are
//! assembled at any requested order. A direct Runge-Kutta integration of the
//! same master equation serves as the reference for error estimation.
//!
//! Modules:
//! - [`superop`]: dense complex linear algebra for density matrices and
//!   superoperators (vectorization, GKLS construction, spectral
//!   decomposition, matrix exponentials, frame conjugation).
//! - [`signal`]: exponential-polynomial signals, the closed function class
//!   used for all time dependence.
//! - [`engine`]: the multiple-scale recursion and truncated-map evaluation.
//! - [`oracle`]: adaptive Runge-Kutta reference trajectories.
//! - [`models`]: the dissipative Jaynes-Cummings model with its
//!   strong/weak-coupling splits and closed-form low-order solutions.
//! - [`metrics`]: trace distance and observable extraction.

pub mod engine;
mod engine_io;
pub mod error;
pub mod metrics;
pub mod models;
pub mod oracle;
pub mod signal;
pub mod superop;
pub mod testkit;
pub mod tolerances;

mod expm;

pub use engine::{
    build_expansion, interaction_frame, oscillatory_antiderivative, secular_split,
    GeneratorSplit, MsptExpansion, OscillatoryCorrection, SecularSplit, TruncationLevel,
};
pub use error::{Error, Result};
pub use metrics::{observables, trace_distance, Observables};
pub use models::{jc_full_liouvillian, jc_operators, jc_split, JcOperators, JcParams, Regime};
pub use oracle::{exact_constant_map, rk_integrate, EvolutionGenerator, Trajectory};
pub use signal::ExpSignal;
pub use superop::{
    commutator_superop, dissipator_superop, lindblad_liouvillian, spectral_decompose,
    superop_exp_at, DensityMatrix, Operator, SpectralDecomposition, SuperOperator,
};
pub use tolerances::Tolerances;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
