//! Exponential-polynomial signals `f(t) = Σ c · t^k · e^{μ t}`.
//!
//! This function class is closed under products and under antiderivatives
//! vanishing at zero, which is what keeps the multiple-scale recursion exact:
//! frame conjugation, secular averaging and the oscillatory integrals all
//! stay inside it.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64 as C64;

/// One signal term `coeff · t^power · e^{freq t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm {
    pub coeff: C64,
    pub freq: C64,
    pub power: u32,
}

/// A scalar exponential-polynomial signal.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExpSignal {
    terms: Vec<ExpTerm>,
}

impl ExpSignal {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    /// The constant signal `c`.
    pub fn constant(c: C64) -> Self {
        Self::term(c, C64::new(0.0, 0.0), 0)
    }

    /// A single term `c e^{μ t}`.
    pub fn exponential(c: C64, mu: C64) -> Self {
        Self::term(c, mu, 0)
    }

    /// A single term `c t^k e^{μ t}`.
    pub fn term(coeff: C64, freq: C64, power: u32) -> Self {
        let mut s = Self::zero();
        s.push(coeff, freq, power);
        s
    }

    /// Add a term, merging with an existing one at identical `(freq, power)`.
    pub fn push(&mut self, coeff: C64, freq: C64, power: u32) {
        if coeff == C64::new(0.0, 0.0) {
            return;
        }
        for t in self.terms.iter_mut() {
            if t.power == power && t.freq == freq {
                t.coeff += coeff;
                return;
            }
        }
        self.terms.push(ExpTerm { coeff, freq, power });
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    pub fn evaluate(&self, t: f64) -> C64 {
        self.terms
            .iter()
            .map(|term| term.coeff * t.powi(term.power as i32) * (term.freq * t).exp())
            .sum()
    }

    pub fn mul(&self, other: &ExpSignal) -> ExpSignal {
        let mut out = ExpSignal::zero();
        for a in &self.terms {
            for b in &other.terms {
                out.push(a.coeff * b.coeff, a.freq + b.freq, a.power + b.power);
            }
        }
        out
    }

    /// The antiderivative `F(t) = ∫₀ᵗ f(s) ds` (so `F(0) = 0`), again an
    /// exponential-polynomial signal.
    pub fn antiderivative_from_zero(&self) -> ExpSignal {
        let mut out = ExpSignal::zero();
        for term in &self.terms {
            if term.freq == C64::new(0.0, 0.0) {
                // ∫₀ᵗ s^k ds = t^{k+1}/(k+1)
                out.push(
                    term.coeff / C64::new((term.power + 1) as f64, 0.0),
                    term.freq,
                    term.power + 1,
                );
            } else {
                for (c, f, p) in phi_terms(term.freq, term.power) {
                    out.push(term.coeff * c, f, p);
                }
            }
        }
        out
    }

    pub fn max_abs_freq(&self) -> f64 {
        self.terms.iter().fold(0.0, |acc, t| acc.max(t.freq.norm()))
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Expansion of `Φ_k(Δ, ·) = ∫₀ᵗ s^k e^{Δ s} ds` (`Δ ≠ 0`) into plain terms.
fn phi_terms(freq: C64, power: u32) -> Vec<(C64, C64, u32)> {
    if power == 0 {
        return vec![
            (C64::new(1.0, 0.0) / freq, freq, 0),
            (C64::new(-1.0, 0.0) / freq, C64::new(0.0, 0.0), 0),
        ];
    }
    let mut out = vec![(C64::new(1.0, 0.0) / freq, freq, power)];
    let scale = -C64::new(power as f64, 0.0) / freq;
    for (c, f, p) in phi_terms(freq, power - 1) {
        out.push((scale * c, f, p));
    }
    out
}

/// `(e^z - 1)/z`, stable near `z = 0`.
fn expm1c(z: C64) -> C64 {
    if z.norm() < 1e-3 {
        // truncation error ~ |z|^5/720
        let one = C64::new(1.0, 0.0);
        one + z * (one / 2.0 + z * (one / 6.0 + z * (one / 24.0 + z / 120.0)))
    } else {
        (z.exp() - C64::new(1.0, 0.0)) / z
    }
}

/// `Φ_k(Δ, t) = ∫₀ᵗ s^k e^{Δ s} ds` for `Δ ≠ 0`; exactly zero at `t = 0`.
pub(crate) fn phi(freq: C64, power: u32, t: f64) -> C64 {
    if t == 0.0 {
        return C64::new(0.0, 0.0);
    }
    if power == 0 {
        return t * expm1c(freq * t);
    }
    (t.powi(power as i32) * (freq * t).exp()
        - C64::new(power as f64, 0.0) * phi(freq, power - 1, t))
        / freq
}

/// `Ψ_k(λ, Δ, t) = e^{λ t} Φ_k(Δ, t)`, evaluated without materializing the
/// possibly growing `Φ` factor: the composite exponents `λ + Δ` and `λ` are
/// the ones bounded in assembled expansion terms.
pub(crate) fn psi(lam: C64, freq: C64, power: u32, t: f64) -> C64 {
    if t == 0.0 {
        return C64::new(0.0, 0.0);
    }
    if power == 0 {
        let z = freq * t;
        if z.norm() < 1e-3 {
            return (lam * t).exp() * t * expm1c(z);
        }
        return (((lam + freq) * t).exp() - (lam * t).exp()) / freq;
    }
    (t.powi(power as i32) * ((lam + freq) * t).exp()
        - C64::new(power as f64, 0.0) * psi(lam, freq, power - 1, t))
        / freq
}

// ---------------------------------------------------------------------------
// Matrix-valued signals in a frame eigenbasis
// ---------------------------------------------------------------------------

/// Scalar signal with tolerance-based frequency merging, one per matrix entry.
#[derive(Debug, Clone, Default)]
pub(crate) struct MergedSignal {
    pub terms: Vec<ExpTerm>,
}

impl MergedSignal {
    pub fn push(&mut self, coeff: C64, freq: C64, power: u32, merge_tol: f64) {
        if coeff == C64::new(0.0, 0.0) {
            return;
        }
        for t in self.terms.iter_mut() {
            if t.power == power && (t.freq - freq).norm() <= merge_tol {
                t.coeff += coeff;
                return;
            }
        }
        self.terms.push(ExpTerm { coeff, freq, power });
    }
}

/// A matrix of exponential-polynomial signals, expressed in the eigenbasis of
/// the enclosing frame. Entry `(i, j)` of a frame-conjugated superoperator
/// carries the implicit phases `e^{(λ_j - λ_i) t}` folded into its term
/// frequencies, so matrix products of signals in the same frame compose by
/// plain term convolution.
#[derive(Debug, Clone)]
pub(crate) struct SignalMatrix {
    pub side: usize,
    pub entries: Vec<MergedSignal>,
}

impl SignalMatrix {
    pub fn zeros(side: usize) -> Self {
        Self {
            side,
            entries: vec![MergedSignal::default(); side * side],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.side + j
    }

    /// Accumulate `weight · m` as one `(freq, power)` term per entry.
    pub fn add_matrix_term(
        &mut self,
        m: &ArrayView2<C64>,
        weight: C64,
        freq: C64,
        power: u32,
        merge_tol: f64,
    ) {
        for i in 0..self.side {
            for j in 0..self.side {
                let idx = self.idx(i, j);
                self.entries[idx].push(weight * m[(i, j)], freq, power, merge_tol);
            }
        }
    }

    /// Fold the frame phases into entry frequencies: entry `(i, j)` gains
    /// `λ_j - λ_i`.
    pub fn apply_frame_phases(&mut self, lams: &[C64]) {
        for i in 0..self.side {
            for j in 0..self.side {
                let idx = i * self.side + j;
                let shift = lams[j] - lams[i];
                for t in self.entries[idx].terms.iter_mut() {
                    t.freq += shift;
                }
            }
        }
    }

    /// Matrix product with term convolution per entry.
    pub fn mul(&self, other: &SignalMatrix, merge_tol: f64) -> SignalMatrix {
        let n = self.side;
        let mut out = SignalMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let acc = &mut out.entries[i * n + k];
                for j in 0..n {
                    let a = &self.entries[i * n + j];
                    let b = &other.entries[j * n + k];
                    for ta in &a.terms {
                        for tb in &b.terms {
                            acc.push(
                                ta.coeff * tb.coeff,
                                ta.freq + tb.freq,
                                ta.power + tb.power,
                                merge_tol,
                            );
                        }
                    }
                }
            }
        }
        out
    }

    /// Right-multiply by a constant matrix.
    pub fn mul_const(&self, m: &ArrayView2<C64>, merge_tol: f64) -> SignalMatrix {
        let n = self.side;
        let mut out = SignalMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let acc = &mut out.entries[i * n + k];
                for j in 0..n {
                    let w = m[(j, k)];
                    if w == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for ta in &self.entries[i * n + j].terms {
                        acc.push(ta.coeff * w, ta.freq, ta.power, merge_tol);
                    }
                }
            }
        }
        out
    }

    pub fn sub_assign(&mut self, other: &SignalMatrix, merge_tol: f64) {
        for (acc, src) in self.entries.iter_mut().zip(other.entries.iter()) {
            for t in &src.terms {
                acc.push(-t.coeff, t.freq, t.power, merge_tol);
            }
        }
    }

    pub fn max_abs_freq(&self) -> f64 {
        self.entries.iter().fold(0.0, |acc, e| {
            e.terms.iter().fold(acc, |a, t| a.max(t.freq.norm()))
        })
    }

    pub fn evaluate(&self, t: f64) -> Array2<C64> {
        let n = self.side;
        let mut out = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let mut z = C64::new(0.0, 0.0);
                for term in &self.entries[i * n + j].terms {
                    z += term.coeff * t.powi(term.power as i32) * (term.freq * t).exp();
                }
                out[(i, j)] = z;
            }
        }
        out
    }

    /// Split into the zero-frequency mean (coefficient sum of `|freq| <= eps`,
    /// power-0 terms) and the oscillatory remainder. A resonant term with a
    /// polynomial prefactor has no finite average; its power is reported.
    pub fn secular_split(&self, eps: f64) -> Result<(Array2<C64>, SignalMatrix), u32> {
        let n = self.side;
        let mut mean = Array2::zeros((n, n));
        let mut osc = SignalMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for term in &self.entries[i * n + j].terms {
                    if term.freq.norm() <= eps {
                        if term.power > 0 {
                            return Err(term.power);
                        }
                        mean[(i, j)] += term.coeff;
                    } else {
                        osc.entries[i * n + j].terms.push(*term);
                    }
                }
            }
        }
        Ok((mean, osc))
    }

    /// Entrywise `∫₀ᵗ`, assuming every term frequency is nonzero (holds for
    /// the oscillatory part of a secular split).
    pub fn integrate_from_zero(&self) -> IntegratedMatrix {
        IntegratedMatrix {
            side: self.side,
            entries: self.entries.iter().map(|e| e.terms.clone()).collect(),
        }
    }
}

/// Antiderivative-from-zero of an oscillatory signal matrix, kept in the
/// frame eigenbasis. A term `(c, Δ, k)` denotes `c · Φ_k(Δ, t)`, which
/// vanishes at `t = 0` term by term.
#[derive(Debug, Clone)]
pub(crate) struct IntegratedMatrix {
    pub side: usize,
    pub entries: Vec<Vec<ExpTerm>>,
}

impl IntegratedMatrix {
    pub fn zeros(side: usize) -> Self {
        Self {
            side,
            entries: vec![Vec::new(); side * side],
        }
    }

    #[cfg(test)]
    pub fn evaluate(&self, t: f64) -> Array2<C64> {
        let n = self.side;
        let mut out = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let mut z = C64::new(0.0, 0.0);
                for term in &self.entries[i * n + j] {
                    z += term.coeff * phi(term.freq, term.power, t);
                }
                out[(i, j)] = z;
            }
        }
        out
    }

    /// Evaluate `diag(e^{λ_i t}) · B(t)` in one pass: the row phase is folded
    /// into each entry through `Ψ`, so growing `Φ` factors that would cancel
    /// against the frame exponential are never formed.
    pub fn evaluate_row_paired(&self, lams: &[C64], t: f64) -> Array2<C64> {
        let n = self.side;
        let mut out = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let mut z = C64::new(0.0, 0.0);
                for term in &self.entries[i * n + j] {
                    z += term.coeff * psi(lams[i], term.freq, term.power, t);
                }
                out[(i, j)] = z;
            }
        }
        out
    }

    /// Expand back into plain exponential-polynomial terms for further
    /// algebra.
    pub fn expand(&self, merge_tol: f64) -> SignalMatrix {
        let mut out = SignalMatrix::zeros(self.side);
        for (idx, terms) in self.entries.iter().enumerate() {
            for term in terms {
                for (c, f, p) in phi_terms(term.freq, term.power) {
                    out.entries[idx].push(term.coeff * c, f, p, merge_tol);
                }
            }
        }
        out
    }

    /// Group entry terms into `(freq, power)` components with coefficient
    /// matrices, sorted for determinism.
    pub fn components(&self, merge_tol: f64) -> Vec<(C64, u32, Array2<C64>)> {
        let n = self.side;
        let mut groups: Vec<(C64, u32, Array2<C64>)> = Vec::new();
        for i in 0..n {
            for j in 0..n {
                'term: for term in &self.entries[i * n + j] {
                    for (f, p, m) in groups.iter_mut() {
                        if *p == term.power && (*f - term.freq).norm() <= merge_tol {
                            m[(i, j)] += term.coeff;
                            continue 'term;
                        }
                    }
                    let mut m = Array2::zeros((n, n));
                    m[(i, j)] = term.coeff;
                    groups.push((term.freq, term.power, m));
                }
            }
        }
        groups.sort_by(|a, b| {
            a.0.re
                .total_cmp(&b.0.re)
                .then(a.0.im.total_cmp(&b.0.im))
                .then(a.1.cmp(&b.1))
        });
        groups
    }

}
