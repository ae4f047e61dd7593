//! The multiple-scale recursion: secular/oscillatory separation of
//! frame-conjugated generators, the commuting ladder `K_n`, the bounded
//! corrections `B_{m,n}`, and evaluation of truncated states and maps.
//!
//! A generator split `L(t) = L0 + L1(t)` is processed level by level. At
//! ladder level `n` the current slow generator `K_n` defines an interaction
//! frame; the frame-conjugated forcing separates into a zero-frequency mean
//! (which becomes `K_{n+1}`) and an oscillatory remainder whose
//! antiderivative is `B_{1,n}`. Higher corrections at the same level follow
//! the product recursion
//!
//! ```text
//! F_{m,n} = F_{1,n} B_{m-1,n} - B_{m-1,n} <F_{1,n}>
//!           - Σ_{j=1}^{m-2} B_{j,n} <F_{m-j,n}>,
//! ```
//!
//! and the level transition conjugates `<F_{2,n}>` into the frame of
//! `K_{n+1}`. Time averages are implemented spectrally: a component
//! `e^{Δτ}` is secular iff `|Δ|` lies below the frame's secular threshold,
//! which covers real and imaginary averaging periods alike.

use std::collections::BTreeMap;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::signal::{phi, ExpSignal, IntegratedMatrix, SignalMatrix};
use crate::superop::{
    devectorize, spectral_decompose_matrix, DensityMatrix, SpectralDecomposition, SuperOperator,
};
use crate::tolerances::Tolerances;

/// A perturbative decomposition `L(t) = L0 + Σ_k f_k(t) S_k` with
/// exponential-polynomial signals `f_k`. The bookkeeping parameter of the
/// expansion is fixed to one; perturbation strengths live inside the terms.
#[derive(Debug, Clone)]
pub struct GeneratorSplit {
    l0: SuperOperator,
    l1_terms: Vec<(SuperOperator, ExpSignal)>,
}

impl GeneratorSplit {
    pub fn new(l0: SuperOperator, l1_terms: Vec<(SuperOperator, ExpSignal)>) -> Result<Self> {
        for (s, _) in &l1_terms {
            if s.dim() != l0.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "perturbation term dim {} does not match L0 dim {}",
                    s.dim(),
                    l0.dim()
                )));
            }
        }
        Ok(Self { l0, l1_terms })
    }

    /// Split with a single time-independent perturbation.
    pub fn constant(l0: SuperOperator, l1: SuperOperator) -> Result<Self> {
        let one = ExpSignal::constant(C64::new(1.0, 0.0));
        Self::new(l0, vec![(l1, one)])
    }

    pub fn dim(&self) -> usize {
        self.l0.dim()
    }

    pub fn l0(&self) -> &SuperOperator {
        &self.l0
    }

    pub fn l1_terms(&self) -> &[(SuperOperator, ExpSignal)] {
        &self.l1_terms
    }

    /// The full generator `L0 + L1(t)`.
    pub fn total_at(&self, t: f64) -> SuperOperator {
        let mut total = self.l0.clone();
        for (s, sig) in &self.l1_terms {
            total = total
                .add(&s.scaled(sig.evaluate(t)))
                .expect("dims checked at construction");
        }
        total
    }

    pub fn is_time_independent(&self) -> bool {
        self.l1_terms.iter().all(|(_, sig)| {
            sig.terms()
                .iter()
                .all(|t| t.power == 0 && t.freq == C64::new(0.0, 0.0))
        })
    }
}

/// Which truncation of the expansion to evaluate.
///
/// `FullOrder(n)` sums every correction `ϱ^{(m, n-m)}`, `m = 0..=n`.
/// `SolvabilityCondition(n)` keeps only the improved slow dependence,
/// dropping the newest oscillatory correction: `m = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TruncationLevel {
    FullOrder(usize),
    SolvabilityCondition(usize),
}

impl TruncationLevel {
    /// The expansion order this level requires.
    pub fn order(&self) -> usize {
        match self {
            TruncationLevel::FullOrder(n) => *n,
            TruncationLevel::SolvabilityCondition(n) => *n,
        }
    }

    /// Validate and list the `(m, k)` expansion terms the level sums.
    pub fn terms(&self) -> Result<Vec<(usize, usize)>> {
        match *self {
            TruncationLevel::FullOrder(n) => Ok((0..=n).map(|m| (m, n - m)).collect()),
            TruncationLevel::SolvabilityCondition(n) => {
                if n == 0 {
                    return Err(Error::InvalidLevel(
                        "solvability-condition level requires n >= 1".into(),
                    ));
                }
                Ok((0..n).map(|m| (m, n - m)).collect())
            }
        }
    }
}

impl std::fmt::Display for TruncationLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TruncationLevel::FullOrder(n) => write!(f, "{n}"),
            TruncationLevel::SolvabilityCondition(n) => write!(f, "s{n}"),
        }
    }
}

impl std::str::FromStr for TruncationLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse_n = |txt: &str| {
            txt.parse::<usize>()
                .map_err(|_| Error::InvalidLevel(format!("cannot parse level `{s}`")))
        };
        if let Some(rest) = s.strip_prefix('s') {
            let n = parse_n(rest)?;
            if n == 0 {
                return Err(Error::InvalidLevel(
                    "solvability-condition level requires n >= 1".into(),
                ));
            }
            Ok(TruncationLevel::SolvabilityCondition(n))
        } else {
            Ok(TruncationLevel::FullOrder(parse_n(s)?))
        }
    }
}

// ---------------------------------------------------------------------------
// Public frame operations
// ---------------------------------------------------------------------------

/// A frame-conjugated forcing `F(τ) = e^{-Kτ} L1(τ) e^{Kτ}` in exact
/// frequency-component form.
#[derive(Debug, Clone)]
pub struct FramedSignal {
    frame: Arc<SpectralDecomposition>,
    matrix: SignalMatrix,
    dim: usize,
    sec_eps: f64,
}

impl FramedSignal {
    /// Evaluate at `τ`, returned in the original basis.
    pub fn evaluate(&self, t: f64) -> SuperOperator {
        let eig = self.matrix.evaluate(t);
        SuperOperator::from_matrix(self.frame.from_eigenbasis(&eig.view()))
            .expect("frame side is a superoperator side")
    }

    pub fn frame(&self) -> &Arc<SpectralDecomposition> {
        &self.frame
    }

    /// The secular threshold derived from this frame's frequency content.
    pub fn secular_eps(&self) -> f64 {
        self.sec_eps
    }
}

fn framed_signal_from_terms(
    terms: &[(Array2<C64>, ExpSignal)],
    frame: &Arc<SpectralDecomposition>,
    dim: usize,
    tol: &Tolerances,
) -> FramedSignal {
    let side = frame.side();
    let mut matrix = SignalMatrix::zeros(side);
    for (mat, sig) in terms {
        let eig = frame.to_eigenbasis(&mat.view());
        for term in sig.terms() {
            matrix.add_matrix_term(&eig.view(), term.coeff, term.freq, term.power, 0.0);
        }
    }
    matrix.apply_frame_phases(frame.eigenvalues());
    let sec_eps = tol.eps_sec_rel * matrix.max_abs_freq();
    FramedSignal {
        frame: frame.clone(),
        matrix,
        dim,
        sec_eps,
    }
}

/// Conjugate a perturbation into the interaction frame of a decomposed
/// generator. In the frame eigenbasis, entry `(i, j)` of each term carries
/// the exact frequency `λ_j - λ_i + μ` and the polynomial power of its
/// signal.
pub fn interaction_frame(
    terms: &[(SuperOperator, ExpSignal)],
    frame: &Arc<SpectralDecomposition>,
    tol: &Tolerances,
) -> Result<FramedSignal> {
    let mut dim = 0;
    let mats: Vec<(Array2<C64>, ExpSignal)> = terms
        .iter()
        .map(|(s, sig)| {
            dim = s.dim();
            if s.side() != frame.side() {
                return Err(Error::DimensionMismatch(format!(
                    "term side {} does not match frame side {}",
                    s.side(),
                    frame.side()
                )));
            }
            Ok((s.mat().clone(), sig.clone()))
        })
        .collect::<Result<_>>()?;
    Ok(framed_signal_from_terms(&mats, frame, dim, tol))
}

/// The secular/oscillatory separation of a frame-conjugated forcing:
/// `F = <F> + F̃`. The mean collects components with `|Δ|` below the secular
/// threshold (back-transformed to the original basis); the oscillatory part
/// is kept as frequency-indexed coefficient matrices in the eigenbasis.
#[derive(Debug, Clone)]
pub struct SecularSplit {
    frame: Arc<SpectralDecomposition>,
    dim: usize,
    mean: SuperOperator,
    components: Vec<(C64, u32, Array2<C64>)>,
}

impl SecularSplit {
    pub fn mean(&self) -> &SuperOperator {
        &self.mean
    }

    /// Oscillatory components `(Δ, power, coefficient-in-eigenbasis)`,
    /// every `|Δ|` above the secular threshold.
    pub fn oscillatory_components(&self) -> &[(C64, u32, Array2<C64>)] {
        &self.components
    }

    /// Evaluate the oscillatory part at `τ` in the original basis.
    pub fn oscillatory_at(&self, t: f64) -> SuperOperator {
        let side = self.frame.side();
        let mut acc: Array2<C64> = Array2::zeros((side, side));
        for (freq, power, coeff) in &self.components {
            let w = t.powi(*power as i32) * (freq * t).exp();
            acc = acc + coeff.mapv(|z| z * w);
        }
        SuperOperator::from_matrix(self.frame.from_eigenbasis(&acc.view()))
            .expect("component side matches")
    }
}

/// Split a framed forcing into mean and oscillatory parts.
pub fn secular_split(f: &FramedSignal) -> Result<SecularSplit> {
    let (mean_eig, osc) = f
        .matrix
        .secular_split(f.sec_eps)
        .map_err(|power| Error::PolynomialSecularTerm {
            power,
            m: 1,
            level: 0,
        })?;
    let integ = osc.integrate_from_zero();
    let components = integ.components(f.sec_eps);
    Ok(SecularSplit {
        frame: f.frame.clone(),
        dim: f.dim,
        mean: SuperOperator::from_matrix(f.frame.from_eigenbasis(&mean_eig.view()))
            .expect("side matches"),
        components,
    })
}

/// A bounded oscillatory correction `B(τ) = ∫₀^τ F̃(τ') dτ'`, stored as
/// frequency components `(Δ, power, coefficient)` in the original basis.
/// `B(0)` is the zero matrix exactly, term by term.
#[derive(Debug, Clone)]
pub struct OscillatoryCorrection {
    dim: usize,
    components: Vec<(C64, u32, Array2<C64>)>,
}

impl OscillatoryCorrection {
    pub fn evaluate(&self, t: f64) -> SuperOperator {
        let side = self.dim * self.dim;
        let mut acc: Array2<C64> = Array2::zeros((side, side));
        for (freq, power, coeff) in &self.components {
            let w = phi(*freq, *power, t);
            acc = acc + coeff.mapv(|z| z * w);
        }
        SuperOperator::from_matrix(acc).expect("component side matches")
    }

    /// Components `(Δ, power, coefficient)`; evaluation is
    /// `Σ coeff · ∫₀ᵗ s^power e^{Δ s} ds`.
    pub fn components(&self) -> &[(C64, u32, Array2<C64>)] {
        &self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }
}

/// Integrate the oscillatory part of a split from zero. The secular
/// precondition `|Δ| > ε` guarantees no division by a vanishing frequency.
pub fn oscillatory_antiderivative(split: &SecularSplit) -> OscillatoryCorrection {
    let components = split
        .components
        .iter()
        .map(|(f, p, c)| (*f, *p, split.frame.from_eigenbasis(&c.view())))
        .collect();
    OscillatoryCorrection {
        dim: split.dim,
        components,
    }
}

// ---------------------------------------------------------------------------
// Expansion construction
// ---------------------------------------------------------------------------

/// The computed ladder: commuting slow generators `K_0..K_N`, their frames,
/// and the oscillatory corrections `B_{m,n}` for `m + n <= N`.
#[derive(Debug, Clone)]
pub struct MsptExpansion {
    dim: usize,
    order: usize,
    k: Vec<SuperOperator>,
    frames: Vec<Arc<SpectralDecomposition>>,
    b: BTreeMap<(usize, usize), IntegratedMatrix>,
}

/// Run the multiple-scale recursion to the requested order.
pub fn build_expansion(
    split: &GeneratorSplit,
    order: usize,
    tol: &Tolerances,
) -> Result<MsptExpansion> {
    if order > tol.max_order {
        return Err(Error::OrderOutOfRange {
            requested: order,
            built: tol.max_order,
        });
    }
    let dim = split.dim();
    let mut k = vec![split.l0().clone()];
    let mut frames = vec![Arc::new(spectral_decompose_matrix(
        split.l0().mat(),
        tol,
        " (L0)",
    )?)];
    let mut b: BTreeMap<(usize, usize), IntegratedMatrix> = BTreeMap::new();

    // <F_{2, lvl-1}> in the original basis, the forcing seen by level lvl
    let mut carried_mean: Option<Array2<C64>> = None;

    for lvl in 0..order {
        let frame = frames[lvl].clone();
        let f1 = if lvl == 0 {
            let terms: Vec<(Array2<C64>, ExpSignal)> = split
                .l1_terms()
                .iter()
                .map(|(s, sig)| (s.mat().clone(), sig.clone()))
                .collect();
            framed_signal_from_terms(&terms, &frame, dim, tol)
        } else {
            let mean = carried_mean.take().expect("set by previous level");
            framed_signal_from_terms(
                &[(mean, ExpSignal::constant(C64::new(1.0, 0.0)))],
                &frame,
                dim,
                tol,
            )
        };
        let eps = f1.sec_eps;
        let f1 = f1.matrix;

        let (mean_eig, osc) =
            f1.secular_split(eps)
                .map_err(|power| Error::PolynomialSecularTerm {
                    power,
                    m: 1,
                    level: lvl,
                })?;
        let k_next =
            SuperOperator::from_matrix(frame.from_eigenbasis(&mean_eig.view())).expect("side");
        let b1 = osc.integrate_from_zero();

        // per-level means <F_{m,lvl}> (eigenbasis) and expanded B's for the
        // product recursion
        let mut means = vec![mean_eig];
        let mut b_expanded = vec![b1.expand(eps)];
        b.insert((1, lvl), b1);

        let m_max = order - lvl;
        for m in 2..=m_max {
            let prev = &b_expanded[m - 2];
            let mut fm = f1.mul(prev, eps);
            fm.sub_assign(&prev.mul_const(&means[0].view(), eps), eps);
            for j in 1..=(m - 2) {
                fm.sub_assign(&b_expanded[j - 1].mul_const(&means[m - j - 1].view(), eps), eps);
            }
            let (mean_m, osc_m) =
                fm.secular_split(eps)
                    .map_err(|power| Error::PolynomialSecularTerm {
                        power,
                        m,
                        level: lvl,
                    })?;
            let bm = osc_m.integrate_from_zero();
            means.push(mean_m);
            b_expanded.push(bm.expand(eps));
            b.insert((m, lvl), bm);
        }

        if lvl + 1 < order {
            carried_mean = Some(frame.from_eigenbasis(&means[1].view()));
        }
        frames.push(Arc::new(spectral_decompose_matrix(
            k_next.mat(),
            tol,
            &format!(" (K{})", lvl + 1),
        )?));
        k.push(k_next);
    }

    Ok(MsptExpansion {
        dim,
        order,
        k,
        frames,
        b,
    })
}

impl MsptExpansion {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// The slow generators `K_0..K_N` in the original basis.
    pub fn k_generators(&self) -> &[SuperOperator] {
        &self.k
    }

    pub fn frame(&self, n: usize) -> Option<&Arc<SpectralDecomposition>> {
        self.frames.get(n)
    }

    /// The correction `B_{m,n}` as original-basis frequency components, or
    /// `None` if outside the built ladder.
    pub fn b_correction(&self, m: usize, n: usize) -> Option<OscillatoryCorrection> {
        let integ = self.b.get(&(m, n))?;
        let frame = &self.frames[n];
        let components = integ
            .components(0.0)
            .into_iter()
            .map(|(f, p, c)| (f, p, frame.from_eigenbasis(&c.view())))
            .collect();
        Some(OscillatoryCorrection {
            dim: self.dim,
            components,
        })
    }

    pub(crate) fn b_raw(&self) -> &BTreeMap<(usize, usize), IntegratedMatrix> {
        &self.b
    }

    pub(crate) fn from_parts(
        dim: usize,
        order: usize,
        k: Vec<SuperOperator>,
        frames: Vec<Arc<SpectralDecomposition>>,
        b: BTreeMap<(usize, usize), IntegratedMatrix>,
    ) -> Self {
        Self {
            dim,
            order,
            k,
            frames,
            b,
        }
    }

    /// Evaluate the expansion term `ϱ^{(m, k)}(t)` applied to `ρ0`, with all
    /// time scales collapsed to `t`.
    pub fn evaluate_term(
        &self,
        m: usize,
        k: usize,
        t: f64,
        rho0: &DensityMatrix,
    ) -> Result<Array2<C64>> {
        let map = self.evaluate_map_term(m, k, t)?;
        devectorize(&map.mat().dot(&rho0.vectorize()))
    }

    /// The same term as a superoperator, independent of the initial state.
    pub fn evaluate_map_term(&self, m: usize, k: usize, t: f64) -> Result<SuperOperator> {
        if m + k > self.order {
            return Err(Error::OrderOutOfRange {
                requested: m + k,
                built: self.order,
            });
        }
        let mut ctx = EvalContext::new(self, t, m + k);
        let mat = ctx.combo(m, 0);
        Ok(SuperOperator::from_matrix(mat).expect("side"))
    }

    /// Evaluate a truncated state `ρ^{(level)}(t)` for the initial state
    /// `ρ0`. At `t = 0` this returns `ρ0` exactly.
    pub fn evaluate_state(
        &self,
        level: TruncationLevel,
        t: f64,
        rho0: &DensityMatrix,
    ) -> Result<DensityMatrix> {
        let map = self.evaluate_map(level, t)?;
        let out = devectorize(&map.mat().dot(&rho0.vectorize()))?;
        Ok(DensityMatrix::from_matrix_unchecked(out))
    }

    /// Assemble the truncated dynamical map at `t`.
    pub fn evaluate_map(&self, level: TruncationLevel, t: f64) -> Result<SuperOperator> {
        let parts = level.terms()?;
        if level.order() > self.order {
            return Err(Error::OrderOutOfRange {
                requested: level.order(),
                built: self.order,
            });
        }
        let side = self.dim * self.dim;
        let nt = level.order();
        let mut ctx = EvalContext::new(self, t, nt);
        let mut acc: Array2<C64> = Array2::zeros((side, side));
        for (m, _) in parts {
            acc = acc + ctx.combo(m, 0);
        }
        Ok(SuperOperator::from_matrix(acc).expect("side"))
    }
}

/// Per-evaluation cache: frame exponentials, paired `e^{K t} B` factors and
/// the truncated slow-structure recursion.
struct EvalContext<'a> {
    exp: &'a MsptExpansion,
    t: f64,
    nt: usize,
    exps: Vec<Option<Array2<C64>>>,
    pairs: BTreeMap<(usize, usize), Array2<C64>>,
    combos: BTreeMap<(usize, usize), Array2<C64>>,
}

impl<'a> EvalContext<'a> {
    fn new(exp: &'a MsptExpansion, t: f64, nt: usize) -> Self {
        Self {
            exp,
            t,
            nt,
            exps: vec![None; exp.order + 1],
            pairs: BTreeMap::new(),
            combos: BTreeMap::new(),
        }
    }

    /// `e^{K_lvl t} B_{m,lvl}(t)` in the original basis (`B_{0,·} = 1`).
    /// The product is evaluated through row-paired kernels so that
    /// oscillatory growth inside `B` cancels against the frame exponential
    /// per entry instead of numerically.
    fn pair(&mut self, lvl: usize, m: usize) -> Array2<C64> {
        if m == 0 {
            if self.exps[lvl].is_none() {
                self.exps[lvl] = Some(self.exp.frames[lvl].exp_at(self.t));
            }
            return self.exps[lvl].clone().expect("just set");
        }
        if let Some(hit) = self.pairs.get(&(lvl, m)) {
            return hit.clone();
        }
        let frame = &self.exp.frames[lvl];
        let integ = self
            .exp
            .b
            .get(&(m, lvl))
            .expect("ladder covers m + lvl <= order");
        let eig = integ.evaluate_row_paired(frame.eigenvalues(), self.t);
        let out = frame.from_eigenbasis(&eig.view());
        self.pairs.insert((lvl, m), out.clone());
        out
    }

    /// The truncated slow structure `C_{i,lvl}(t)`, original basis:
    /// boundary `C_{0, nt+1} = 1`, `C_{i, nt+1-i} = 0` for `i >= 1`.
    fn combo(&mut self, i: usize, lvl: usize) -> Array2<C64> {
        let side = self.exp.dim * self.exp.dim;
        if i + lvl == self.nt + 1 {
            return if i == 0 {
                Array2::eye(side)
            } else {
                Array2::zeros((side, side))
            };
        }
        if let Some(hit) = self.combos.get(&(i, lvl)) {
            return hit.clone();
        }
        let mut acc: Array2<C64> = Array2::zeros((side, side));
        for j in 0..=i {
            let factor = self.pair(lvl, i - j);
            let tail = self.combo(j, lvl + 1);
            acc = acc + factor.dot(&tail);
        }
        self.combos.insert((i, lvl), acc.clone());
        acc
    }
}

/// Vectorized initial condition helper shared by tests and callers.
pub fn apply_map(map: &SuperOperator, rho0: &DensityMatrix) -> Result<Array2<C64>> {
    devectorize(&map.mat().dot(&rho0.vectorize()))
}
