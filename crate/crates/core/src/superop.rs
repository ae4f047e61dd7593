//! Dense complex linear algebra for density matrices and superoperators.
//!
//! Superoperators are `D² × D²` complex matrices acting on column-stacked
//! vectorized `D × D` matrices: `vec(ρ)[i + D j] = ρ[(i, j)]`, so that
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use ndarray::{linalg::kron, Array1, Array2, ArrayView2};
use ndarray_linalg::{Eig, Eigh, Inverse, UPLO};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::expm::expm;
use crate::tolerances::Tolerances;

/// Max-norm of a complex matrix.
pub(crate) fn max_abs(m: &ArrayView2<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Conjugate transpose.
pub(crate) fn dagger(m: &ArrayView2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

/// Largest deviation from hermiticity, max |a_ij - conj(a_ji)|.
pub(crate) fn herm_deviation(m: &ArrayView2<C64>) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

fn check_hermitian(m: &ArrayView2<C64>, eps: f64) -> Result<()> {
    let dev = herm_deviation(m);
    if dev > eps {
        return Err(Error::NonHermitianInput {
            deviation: dev,
            tolerance: eps,
        });
    }
    Ok(())
}

/// A `D × D` complex matrix acting on the system Hilbert space. No structure
/// is assumed; jump operators are generally non-hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    mat: Array2<C64>,
}

impl Operator {
    pub fn new(mat: Array2<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "operator must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(Self { mat })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: Array2::zeros((dim, dim)),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: Array2::eye(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn dagger(&self) -> Operator {
        Operator {
            mat: dagger(&self.mat.view()),
        }
    }

    pub fn is_hermitian(&self, eps: f64) -> bool {
        herm_deviation(&self.mat.view()) <= eps
    }
}

/// A system state: `D × D` complex matrix, hermitian within tolerance.
/// Physical inputs additionally have unit trace and nonnegative spectrum;
/// truncated perturbative outputs need not be positive.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: Array2<C64>,
}

impl DensityMatrix {
    /// Validate hermiticity only.
    pub fn new(mat: Array2<C64>, tol: &Tolerances) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "density matrix must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        check_hermitian(&mat.view(), tol.eps_herm)?;
        Ok(Self { mat })
    }

    /// Validate hermiticity, unit trace and positive semidefiniteness, as
    /// required of initial conditions.
    pub fn physical(mat: Array2<C64>, tol: &Tolerances) -> Result<Self> {
        let rho = Self::new(mat, tol)?;
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > tol.eps_trace || tr.im.abs() > tol.eps_trace {
            return Err(Error::NotPhysical(format!(
                "trace {tr} deviates from 1 by more than {:.1e}",
                tol.eps_trace
            )));
        }
        let eigs = rho
            .mat
            .eigh(UPLO::Lower)
            .map_err(|e| Error::Backend(e.to_string()))?
            .0;
        if let Some(min) = eigs.iter().cloned().reduce(f64::min) {
            if min < -tol.eps_psd {
                return Err(Error::NotPhysical(format!(
                    "eigenvalue {min:.3e} below -{:.1e}",
                    tol.eps_psd
                )));
            }
        }
        Ok(rho)
    }

    /// Wrap without validation. Used for perturbative outputs, which are
    /// hermitian only up to truncation error.
    pub fn from_matrix_unchecked(mat: Array2<C64>) -> Self {
        Self { mat }
    }

    /// Pure state `|i><i|` in the computational basis.
    pub fn basis_state(dim: usize, i: usize) -> Self {
        let mut mat = Array2::zeros((dim, dim));
        mat[(i, i)] = C64::new(1.0, 0.0);
        Self { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn trace(&self) -> C64 {
        self.mat.diag().sum()
    }

    pub fn vectorize(&self) -> Array1<C64> {
        vectorize(&self.mat.view())
    }
}

/// Column-stack a `D × D` matrix into a length-`D²` vector.
pub fn vectorize(m: &ArrayView2<C64>) -> Array1<C64> {
    let d = m.nrows();
    let mut v = Array1::zeros(d * d);
    for j in 0..d {
        for i in 0..d {
            v[j * d + i] = m[(i, j)];
        }
    }
    v
}

/// Inverse of [`vectorize`]. Fails unless the length is a perfect square.
pub fn devectorize(v: &Array1<C64>) -> Result<Array2<C64>> {
    let d = (v.len() as f64).sqrt().round() as usize;
    if d * d != v.len() {
        return Err(Error::LengthNotSquare(v.len()));
    }
    let mut m = Array2::zeros((d, d));
    for j in 0..d {
        for i in 0..d {
            m[(i, j)] = v[j * d + i];
        }
    }
    Ok(m)
}

/// A linear map on `D × D` matrices, stored as its `D² × D²` matrix in the
/// column-stacking convention.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOperator {
    dim: usize,
    mat: Array2<C64>,
}

impl SuperOperator {
    /// Wrap a `D² × D²` matrix.
    pub fn from_matrix(mat: Array2<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "superoperator must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let side = mat.nrows();
        let dim = (side as f64).sqrt().round() as usize;
        if dim * dim != side {
            return Err(Error::LengthNotSquare(side));
        }
        Ok(Self { dim, mat })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            mat: Array2::zeros((dim * dim, dim * dim)),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            mat: Array2::eye(dim * dim),
        }
    }

    /// System dimension `D`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Matrix side `D²`.
    pub fn side(&self) -> usize {
        self.dim * self.dim
    }

    pub fn mat(&self) -> &Array2<C64> {
        &self.mat
    }

    /// Apply to a state: `devec(S vec ρ)`.
    pub fn apply(&self, rho: &ArrayView2<C64>) -> Result<Array2<C64>> {
        if rho.nrows() != self.dim || rho.ncols() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "superoperator acts on {}x{} matrices, got {}x{}",
                self.dim,
                self.dim,
                rho.nrows(),
                rho.ncols()
            )));
        }
        devectorize(&self.mat.dot(&vectorize(rho)))
    }

    pub fn max_norm(&self) -> f64 {
        max_abs(&self.mat.view())
    }

    pub fn scaled(&self, c: C64) -> SuperOperator {
        SuperOperator {
            dim: self.dim,
            mat: self.mat.mapv(|z| z * c),
        }
    }

    pub fn add(&self, other: &SuperOperator) -> Result<SuperOperator> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "superoperator dims {} and {}",
                self.dim, other.dim
            )));
        }
        Ok(SuperOperator {
            dim: self.dim,
            mat: &self.mat + &other.mat,
        })
    }

    pub fn sub(&self, other: &SuperOperator) -> Result<SuperOperator> {
        self.add(&other.scaled(C64::new(-1.0, 0.0)))
    }

    /// Composition `self ∘ other` as matrix product.
    pub fn compose(&self, other: &SuperOperator) -> Result<SuperOperator> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "superoperator dims {} and {}",
                self.dim, other.dim
            )));
        }
        Ok(SuperOperator {
            dim: self.dim,
            mat: self.mat.dot(&other.mat),
        })
    }

    /// Commutator norm `max |[self, other]|`, used by ladder diagnostics.
    pub fn commutator_norm(&self, other: &SuperOperator) -> Result<f64> {
        let ab = self.mat.dot(&other.mat);
        let ba = other.mat.dot(&self.mat);
        if ab.dim() != ba.dim() {
            return Err(Error::DimensionMismatch("commutator".into()));
        }
        Ok(max_abs(&(&ab - &ba).view()))
    }

    /// Matrix exponential `e^{S t}`. Uses the spectral route when the
    /// generator decomposes cleanly, otherwise falls back to
    /// scaling-and-squaring. `t = 0` returns the identity exactly.
    pub fn exp_at(&self, t: f64) -> SuperOperator {
        superop_exp_at(self, t)
    }
}

/// Build the commutator superoperator `ρ ↦ -i [H, ρ]` of a hamiltonian.
pub fn commutator_superop(h: &Operator, tol: &Tolerances) -> Result<SuperOperator> {
    check_hermitian(&h.mat().view(), tol.eps_herm)?;
    Ok(commutator_superop_unchecked(h.mat()))
}

/// `ρ ↦ -i (A ρ - ρ A)` without the hermiticity check; interaction terms in
/// generator splits reuse this with operators already validated.
pub(crate) fn commutator_superop_unchecked(a: &Array2<C64>) -> SuperOperator {
    let d = a.nrows();
    let eye = Array2::eye(d);
    let mi = C64::new(0.0, -1.0);
    let mat = (&kron(&eye, a) - &kron(&a.t().to_owned(), &eye)).mapv(|z| z * mi);
    SuperOperator { dim: d, mat }
}

/// Build the dissipator superoperator
/// `ρ ↦ O ρ O† - ½ (O†O ρ + ρ O†O)`.
pub fn dissipator_superop(o: &Operator) -> SuperOperator {
    let d = o.dim();
    let eye = Array2::eye(d);
    let od = dagger(&o.mat().view());
    let odo = od.dot(o.mat());
    let half = C64::new(0.5, 0.0);
    let jump = kron(&o.mat().mapv(|z| z.conj()), o.mat());
    let anti = (&kron(&eye, &odo) + &kron(&odo.t().to_owned(), &eye)).mapv(|z| z * half);
    SuperOperator {
        dim: d,
        mat: &jump - &anti,
    }
}

/// Assemble a GKLS generator `-i[H, ·] + Σ γ_n D[O_n]`.
pub fn lindblad_liouvillian(
    h: &Operator,
    channels: &[(f64, Operator)],
    tol: &Tolerances,
) -> Result<SuperOperator> {
    let mut total = commutator_superop(h, tol)?;
    for (rate, op) in channels {
        if *rate < 0.0 {
            return Err(Error::NegativeRate(*rate));
        }
        if op.dim() != h.dim() {
            return Err(Error::DimensionMismatch(format!(
                "channel operator dim {} does not match hamiltonian dim {}",
                op.dim(),
                h.dim()
            )));
        }
        total = total.add(&dissipator_superop(op).scaled(C64::new(*rate, 0.0)))?;
    }
    Ok(total)
}

/// Eigendecomposition `S = V diag(λ) V⁻¹` of a superoperator, with
/// eigenvalues sorted by (real part descending, imaginary part ascending)
/// for determinism.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<C64>,
    right_vectors: Array2<C64>,
    left_inverse: Array2<C64>,
    condition_estimate: f64,
    side: usize,
}

fn norm1(m: &ArrayView2<C64>) -> f64 {
    let mut best: f64 = 0.0;
    for col in m.columns() {
        best = best.max(col.iter().map(|z| z.norm()).sum());
    }
    best
}

/// Decompose a superoperator; rejects (near-)defective generators whose
/// eigenvector condition estimate exceeds `kappa_max`. Time averages over
/// quasi-periodic frames are undefined for Jordan-block generators, so
/// those are errors rather than a degraded mode.
pub fn spectral_decompose(s: &SuperOperator, tol: &Tolerances) -> Result<SpectralDecomposition> {
    spectral_decompose_matrix(&s.mat, tol, "")
}

pub(crate) fn spectral_decompose_matrix(
    mat: &Array2<C64>,
    tol: &Tolerances,
    context: &str,
) -> Result<SpectralDecomposition> {
    let (vals, vecs) = mat.eig().map_err(|e| Error::Backend(e.to_string()))?;
    let side = mat.nrows();
    let mut order: Vec<usize> = (0..side).collect();
    order.sort_by(|&a, &b| {
        vals[b]
            .re
            .total_cmp(&vals[a].re)
            .then(vals[a].im.total_cmp(&vals[b].im))
    });
    let eigenvalues: Vec<C64> = order.iter().map(|&i| vals[i]).collect();
    let mut right = Array2::zeros((side, side));
    for (dst, &src) in order.iter().enumerate() {
        right.column_mut(dst).assign(&vecs.column(src));
    }
    let left = right.inv().map_err(|_| Error::DefectiveGenerator {
        condition: f64::INFINITY,
        limit: tol.kappa_max,
        context: context.to_string(),
    })?;
    let condition = norm1(&right.view()) * norm1(&left.view());
    if !condition.is_finite() || condition > tol.kappa_max {
        return Err(Error::DefectiveGenerator {
            condition,
            limit: tol.kappa_max,
            context: context.to_string(),
        });
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        right_vectors: right,
        left_inverse: left,
        condition_estimate: condition,
        side,
    })
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    pub fn right_vectors(&self) -> &Array2<C64> {
        &self.right_vectors
    }

    pub fn left_inverse(&self) -> &Array2<C64> {
        &self.left_inverse
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    /// Matrix side, `D²` for a superoperator on `D × D` states.
    pub fn side(&self) -> usize {
        self.side
    }

    /// Transform into the eigenbasis: `V⁻¹ M V`.
    pub fn to_eigenbasis(&self, m: &ArrayView2<C64>) -> Array2<C64> {
        self.left_inverse.dot(m).dot(&self.right_vectors)
    }

    /// Transform out of the eigenbasis: `V M V⁻¹`.
    pub fn from_eigenbasis(&self, m: &ArrayView2<C64>) -> Array2<C64> {
        self.right_vectors.dot(m).dot(&self.left_inverse)
    }

    /// `e^{S t} = V diag(e^{λ t}) V⁻¹`; the identity exactly at `t = 0`.
    pub fn exp_at(&self, t: f64) -> Array2<C64> {
        if t == 0.0 {
            return Array2::eye(self.side);
        }
        let mut scaled = self.right_vectors.clone();
        for (j, lam) in self.eigenvalues.iter().enumerate() {
            let phase = (lam * t).exp();
            scaled.column_mut(j).mapv_inplace(|z| z * phase);
        }
        scaled.dot(&self.left_inverse)
    }

    /// Reconstruct `V diag(λ) V⁻¹`.
    pub fn reconstruct(&self) -> Array2<C64> {
        let mut scaled = self.right_vectors.clone();
        for (j, lam) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(j).mapv_inplace(|z| z * lam);
        }
        scaled.dot(&self.left_inverse)
    }
}

/// `e^{S t}` through the spectral route, propagating `DefectiveGenerator`
/// when the decomposition is rejected.
pub fn superop_exp_at_spectral(s: &SuperOperator, t: f64, tol: &Tolerances) -> Result<SuperOperator> {
    let dec = spectral_decompose(s, tol)?;
    Ok(SuperOperator {
        dim: s.dim,
        mat: dec.exp_at(t),
    })
}

/// `e^{S t}` via the spectral route when available, falling back to
/// 13th-order Padé scaling-and-squaring for near-defective generators.
/// `t = 0` returns the identity exactly.
pub fn superop_exp_at(s: &SuperOperator, t: f64) -> SuperOperator {
    if t == 0.0 {
        return SuperOperator::identity(s.dim);
    }
    match spectral_decompose(s, &Tolerances::default()) {
        Ok(dec) => SuperOperator {
            dim: s.dim,
            mat: dec.exp_at(t),
        },
        Err(_) => SuperOperator {
            dim: s.dim,
            mat: expm(&s.mat.mapv(|z| z * t)),
        },
    }
}

/// Conjugate into the interaction frame of a decomposed generator:
/// `e^{-K t} F e^{K t}`, computed as entrywise phases `e^{(λ_j - λ_i) t}` on
/// the eigenbasis representation.
pub fn frame_conjugate(
    f: &SuperOperator,
    frame: &SpectralDecomposition,
    t: f64,
) -> Result<SuperOperator> {
    if f.side() != frame.side {
        return Err(Error::DimensionMismatch(format!(
            "superoperator side {} does not match frame side {}",
            f.side(),
            frame.side
        )));
    }
    let mut g = frame.to_eigenbasis(&f.mat.view());
    let lam = &frame.eigenvalues;
    for i in 0..frame.side {
        for j in 0..frame.side {
            g[(i, j)] *= ((lam[j] - lam[i]) * t).exp();
        }
    }
    Ok(SuperOperator {
        dim: f.dim,
        mat: frame.from_eigenbasis(&g.view()),
    })
}
