//! Numeric tolerances shared by validation, decomposition and averaging.

/// Tolerance configuration. `default()` gives the library-wide constants;
/// individual runs may override fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    /// Hermiticity check: max |a_ij - conj(a_ji)|.
    pub eps_herm: f64,
    /// Unit-trace check for physical states.
    pub eps_trace: f64,
    /// Eigenvalue floor for positive-semidefiniteness of physical states.
    pub eps_psd: f64,
    /// Spectral reconstruction residual, relative to the matrix max-norm.
    pub eps_spec: f64,
    /// Eigenvector condition estimate above which a generator is rejected
    /// as (near-)defective.
    pub kappa_max: f64,
    /// Secular threshold, relative to the largest frequency magnitude of the
    /// frame: a component with |freq| below this is folded into the slow
    /// generator instead of oscillating.
    pub eps_sec_rel: f64,
    /// Largest supported expansion order.
    pub max_order: usize,
    /// Relative local error tolerance of the reference integrator.
    pub rk_rtol: f64,
    /// Absolute local error tolerance of the reference integrator.
    pub rk_atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eps_herm: 1e-10,
            eps_trace: 1e-10,
            eps_psd: 1e-9,
            eps_spec: 1e-10,
            kappa_max: 1e8,
            eps_sec_rel: 1e-9,
            max_order: 4,
            rk_rtol: 1e-10,
            rk_atol: 1e-12,
        }
    }
}

impl Tolerances {
    /// Override a field by name, as used by scenario files and CLI flags.
    pub fn set(&mut self, key: &str, value: f64) -> Result<(), String> {
        match key {
            "eps_herm" => self.eps_herm = value,
            "eps_trace" => self.eps_trace = value,
            "eps_psd" => self.eps_psd = value,
            "eps_spec" => self.eps_spec = value,
            "kappa_max" => self.kappa_max = value,
            "eps_sec_rel" => self.eps_sec_rel = value,
            "max_order" => self.max_order = value as usize,
            "rk_rtol" => self.rk_rtol = value,
            "rk_atol" => self.rk_atol = value,
            other => return Err(format!("unknown tolerance key `{other}`")),
        }
        Ok(())
    }
}
