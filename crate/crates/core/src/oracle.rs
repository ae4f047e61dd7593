//! Ground-truth trajectories by direct numerical integration of the
//! vectorized master equation `d vec(ρ)/dt = L(t) vec(ρ)`.
//!
//! The integrator is the Dormand-Prince embedded 5(4) pair with PI step
//! control and 4th-order dense output, so approximate and reference
//! solutions are compared on identical grids.

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64 as C64;

use crate::engine::GeneratorSplit;
use crate::error::{Error, Result};
use crate::superop::{devectorize, superop_exp_at, DensityMatrix, SuperOperator};
use crate::tolerances::Tolerances;

/// Right-hand side `y' = L(t) y` of a vectorized master equation. The
/// reference integrator accepts arbitrary time dependence here, including
/// callables the perturbative engine rejects.
pub trait EvolutionGenerator {
    /// Vector length, `D²`.
    fn side(&self) -> usize;
    /// Write `L(t) y` into `out`.
    fn apply(&self, t: f64, y: &ArrayView1<C64>, out: &mut Array1<C64>);
}

impl EvolutionGenerator for SuperOperator {
    fn side(&self) -> usize {
        SuperOperator::side(self)
    }

    fn apply(&self, _t: f64, y: &ArrayView1<C64>, out: &mut Array1<C64>) {
        matvec_into(self.mat(), y, out, C64::new(1.0, 0.0), false);
    }
}

impl EvolutionGenerator for GeneratorSplit {
    fn side(&self) -> usize {
        self.l0().side()
    }

    fn apply(&self, t: f64, y: &ArrayView1<C64>, out: &mut Array1<C64>) {
        matvec_into(self.l0().mat(), y, out, C64::new(1.0, 0.0), false);
        for (s, sig) in self.l1_terms() {
            matvec_into(s.mat(), y, out, sig.evaluate(t), true);
        }
    }
}

/// Adapter for a generator given as a closure `t -> L(t)` matrix.
pub struct CallableGenerator<F: Fn(f64) -> Array2<C64>> {
    side: usize,
    f: F,
}

impl<F: Fn(f64) -> Array2<C64>> CallableGenerator<F> {
    pub fn new(side: usize, f: F) -> Self {
        Self { side, f }
    }
}

impl<F: Fn(f64) -> Array2<C64>> EvolutionGenerator for CallableGenerator<F> {
    fn side(&self) -> usize {
        self.side
    }

    fn apply(&self, t: f64, y: &ArrayView1<C64>, out: &mut Array1<C64>) {
        let m = (self.f)(t);
        matvec_into(&m, y, out, C64::new(1.0, 0.0), false);
    }
}

fn matvec_into(
    m: &Array2<C64>,
    y: &ArrayView1<C64>,
    out: &mut Array1<C64>,
    scale: C64,
    accumulate: bool,
) {
    let n = y.len();
    for i in 0..n {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            acc += m[(i, j)] * y[j];
        }
        if accumulate {
            out[i] += scale * acc;
        } else {
            out[i] = scale * acc;
        }
    }
}

/// A reference trajectory on a fixed grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub rtol: f64,
    pub atol: f64,
}

// Dormand-Prince 5(4) tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// dense output
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFE: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_SHRINK_MAX: f64 = 5.0; // divide h by at most this on rejection
const FAC_GROW_MAX: f64 = 0.1; // h may grow by at most 1/this
const MAX_STEPS: usize = 50_000_000;

/// Integrate `dρ/dt = L(t) ρ` from `grid[0]` with dense output at every grid
/// point. `grid` must be strictly increasing and `rho0` physical.
pub fn rk_integrate<G: EvolutionGenerator>(
    generator: &G,
    rho0: &DensityMatrix,
    grid: &[f64],
    rtol: f64,
    atol: f64,
    tol: &Tolerances,
) -> Result<Trajectory> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("grid is empty".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("grid must be strictly increasing".into()));
    }
    DensityMatrix::physical(rho0.mat().clone(), tol)?;
    let n = generator.side();
    if n != rho0.dim() * rho0.dim() {
        return Err(Error::DimensionMismatch(format!(
            "generator side {} does not match state dim {}",
            n,
            rho0.dim()
        )));
    }

    let mut states = Vec::with_capacity(grid.len());
    states.push(rho0.clone());
    if grid.len() == 1 {
        return Ok(Trajectory {
            times: grid.to_vec(),
            states,
            rtol,
            atol,
        });
    }

    let t_end = *grid.last().expect("nonempty");
    let mut t = grid[0];
    let mut y = rho0.vectorize();
    let mut k1 = Array1::zeros(n);
    generator.apply(t, &y.view(), &mut k1);

    let mut h = initial_step(generator, &y, &k1, t, t_end, rtol, atol);
    let mut next_out = 1usize;
    let mut facold: f64 = 1e-4;
    let expo1 = 0.2 - BETA * 0.75;

    let mut k2 = Array1::zeros(n);
    let mut k3 = Array1::zeros(n);
    let mut k4 = Array1::zeros(n);
    let mut k5 = Array1::zeros(n);
    let mut k6 = Array1::zeros(n);
    let mut k7 = Array1::zeros(n);
    let mut ysti = Array1::zeros(n);
    let mut ynew = Array1::zeros(n);

    let mut steps = 0usize;
    while next_out < grid.len() {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        if h < 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        let mut last = false;
        if t + h >= t_end {
            h = t_end - t;
            last = true;
        }

        // stages
        for i in 0..n {
            ysti[i] = y[i] + h * A21 * k1[i];
        }
        generator.apply(t + C2 * h, &ysti.view(), &mut k2);
        for i in 0..n {
            ysti[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        generator.apply(t + C3 * h, &ysti.view(), &mut k3);
        for i in 0..n {
            ysti[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        generator.apply(t + C4 * h, &ysti.view(), &mut k4);
        for i in 0..n {
            ysti[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        generator.apply(t + C5 * h, &ysti.view(), &mut k5);
        for i in 0..n {
            ysti[i] =
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        generator.apply(t + h, &ysti.view(), &mut k6);
        for i in 0..n {
            ynew[i] =
                y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        generator.apply(t + h, &ynew.view(), &mut k7);

        // embedded error estimate
        let mut err_acc = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = atol + rtol * y[i].norm().max(ynew[i].norm());
            let q = e.norm() / sc;
            err_acc += q * q;
        }
        let err = (err_acc / n as f64).sqrt();

        let fac11 = err.powf(expo1);
        if err <= 1.0 {
            // accept
            if !ynew.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NonFiniteState { t: t + h });
            }

            // dense output over (t, t + h]; the final step flushes the rest
            // of the grid so a one-ulp mismatch at t_end cannot strand a point
            while next_out < grid.len()
                && (grid[next_out] <= t + h + 1e-14 * h || last)
            {
                let theta = ((grid[next_out] - t) / h).clamp(0.0, 1.0);
                let state = dense_eval(&y, &ynew, &k1, &k3, &k4, &k5, &k6, &k7, h, theta);
                states.push(DensityMatrix::from_matrix_unchecked(devectorize(&state)?));
                next_out += 1;
            }

            t += h;
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7); // FSAL

            let fac = (fac11 / facold.powf(BETA) / SAFE).clamp(FAC_GROW_MAX, FAC_SHRINK_MAX);
            facold = err.max(1e-4);
            h /= fac;
            if last {
                break;
            }
        } else {
            // reject
            h /= (fac11 / SAFE).min(FAC_SHRINK_MAX);
        }
    }

    Ok(Trajectory {
        times: grid.to_vec(),
        states,
        rtol,
        atol,
    })
}

/// Dense interpolation of the accepted step, 4th order in `theta`.
#[allow(clippy::too_many_arguments)]
fn dense_eval(
    y: &Array1<C64>,
    ynew: &Array1<C64>,
    k1: &Array1<C64>,
    k3: &Array1<C64>,
    k4: &Array1<C64>,
    k5: &Array1<C64>,
    k6: &Array1<C64>,
    k7: &Array1<C64>,
    h: f64,
    theta: f64,
) -> Array1<C64> {
    let n = y.len();
    let mut out = Array1::zeros(n);
    let th1 = 1.0 - theta;
    for i in 0..n {
        let ydiff = ynew[i] - y[i];
        let cont3 = h * k1[i] - ydiff;
        let cont4 = ydiff - h * k7[i] - cont3;
        let cont5 =
            h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        out[i] = y[i] + theta * (ydiff + th1 * (cont3 + theta * (cont4 + th1 * cont5)));
    }
    out
}

/// Hairer's starting-step heuristic for a 5th-order method.
fn initial_step<G: EvolutionGenerator>(
    generator: &G,
    y: &Array1<C64>,
    f0: &Array1<C64>,
    t: f64,
    t_end: f64,
    rtol: f64,
    atol: f64,
) -> f64 {
    let n = y.len();
    let span = t_end - t;
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..n {
        let sc = atol + rtol * y[i].norm();
        dnf += (f0[i].norm() / sc).powi(2);
        dny += (y[i].norm() / sc).powi(2);
    }
    let mut h0 = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        (dny / dnf).sqrt() * 0.01
    };
    h0 = h0.min(span);

    let y1: Array1<C64> = y + &f0.mapv(|z| z * h0);
    let mut f1 = Array1::zeros(n);
    generator.apply(t + h0, &y1.view(), &mut f1);
    let mut der2_acc = 0.0;
    for i in 0..n {
        let sc = atol + rtol * y[i].norm();
        der2_acc += ((f1[i] - f0[i]).norm() / sc).powi(2);
    }
    let der2 = der2_acc.sqrt() / h0;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

/// `ρ(t) = e^{L t} ρ(0)` for a constant generator: the independent oracle
/// against which the integrator is cross-checked.
pub fn exact_constant_map(l: &SuperOperator, t: f64) -> SuperOperator {
    superop_exp_at(l, t)
}
