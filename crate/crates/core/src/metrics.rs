//! State comparison and observable extraction.

use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::superop::{herm_deviation, DensityMatrix};
use crate::tolerances::Tolerances;

/// Trace distance `½ Σ |λ_i|` of the hermitian difference `ρ1 - ρ2`,
/// in `[0, 1]` for physical inputs.
pub fn trace_distance(rho1: &DensityMatrix, rho2: &DensityMatrix, tol: &Tolerances) -> Result<f64> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch(format!(
            "trace distance of {}x{} and {}x{} states",
            rho1.dim(),
            rho1.dim(),
            rho2.dim(),
            rho2.dim()
        )));
    }
    for rho in [rho1, rho2] {
        let dev = herm_deviation(&rho.mat().view());
        if dev > tol.eps_herm {
            return Err(Error::NonHermitianInput {
                deviation: dev,
                tolerance: tol.eps_herm,
            });
        }
    }
    let diff = rho1.mat() - rho2.mat();
    // symmetrize before the hermitian eigensolver; inputs already passed the
    // hermiticity gate so this only removes rounding noise
    let sym = (&diff + &diff.t().mapv(|z| z.conj())).mapv(|z| z * C64::new(0.5, 0.0));
    let (eigs, _) = sym
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Backend(e.to_string()))?;
    Ok(0.5 * eigs.iter().map(|l| l.abs()).sum::<f64>())
}

/// Populations and coherences of a state, labeled by basis indices.
#[derive(Debug, Clone)]
pub struct Observables {
    /// Diagonal entries (real parts).
    pub populations: Vec<f64>,
    /// Upper-triangle entries `(i, j, ρ_ij)` with `i < j`.
    pub coherences: Vec<(usize, usize, C64)>,
}

/// Extract the plotted quantities from a state.
pub fn observables(rho: &DensityMatrix) -> Observables {
    let d = rho.dim();
    let populations = (0..d).map(|i| rho.mat()[(i, i)].re).collect();
    let mut coherences = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            coherences.push((i, j, rho.mat()[(i, j)]));
        }
    }
    Observables {
        populations,
        coherences,
    }
}
