//! Scaling-and-squaring matrix exponential with the 13th-order Padé
//! approximant, used where a spectral route is unavailable.

use ndarray::Array2;
use ndarray_linalg::Inverse;
use num_complex::Complex64 as C64;

const THETA_13: f64 = 5.371920351148152;

const B: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn norm1(m: &Array2<C64>) -> f64 {
    let mut best: f64 = 0.0;
    for col in m.columns() {
        best = best.max(col.iter().map(|z| z.norm()).sum());
    }
    best
}

/// `e^A` for a square complex matrix.
pub(crate) fn expm(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let norm = norm1(a);
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a.mapv(|z| z / C64::new(2f64.powi(s), 0.0));

    let eye: Array2<C64> = Array2::eye(n);
    let a2 = scaled.dot(&scaled);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);

    let u_inner = &a6.mapv(|z| z * B[13]) + &a4.mapv(|z| z * B[11]) + &a2.mapv(|z| z * B[9]);
    let u_poly = a6.dot(&u_inner)
        + &a6.mapv(|z| z * B[7])
        + &a4.mapv(|z| z * B[5])
        + &a2.mapv(|z| z * B[3])
        + &eye.mapv(|z| z * B[1]);
    let u = scaled.dot(&u_poly);

    let v_inner = &a6.mapv(|z| z * B[12]) + &a4.mapv(|z| z * B[10]) + &a2.mapv(|z| z * B[8]);
    let v = a6.dot(&v_inner)
        + &a6.mapv(|z| z * B[6])
        + &a4.mapv(|z| z * B[4])
        + &a2.mapv(|z| z * B[2])
        + &eye.mapv(|z| z * B[0]);

    // r = (V - U)^{-1} (V + U), then square back
    let denom = (&v - &u).inv().expect("pade denominator is nonsingular");
    let mut r = denom.dot(&(&v + &u));
    for _ in 0..s {
        r = r.dot(&r);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn exp_zero() {
        let z: Array2<C64> = Array2::zeros((3, 3));
        let e = expm(&z);
        let eye: Array2<C64> = Array2::eye(3);
        assert!((&e - &eye).iter().all(|d| d.norm() < 1e-15));
    }

    #[test]
    fn exp_nilpotent() {
        // e^N = I + N for N² = 0
        let n = array![
            [C64::new(0.0, 0.0), C64::new(2.0, -1.0)],
            [C64::new(0.0, 0.0), C64::new(0.0, 0.0)]
        ];
        let e = expm(&n);
        let expected = &Array2::<C64>::eye(2) + &n;
        assert!((&e - &expected).iter().all(|d| d.norm() < 1e-14));
    }

    #[test]
    fn exp_rotation_large_norm() {
        // exercise the scaling branch with a norm well above theta
        let w = 40.0;
        let a = array![
            [C64::new(0.0, 0.0), C64::new(-w, 0.0)],
            [C64::new(w, 0.0), C64::new(0.0, 0.0)]
        ];
        let e = expm(&a);
        let (c, s) = (w.cos(), w.sin());
        assert!((e[(0, 0)].re - c).abs() < 1e-11);
        assert!((e[(1, 0)].re - s).abs() < 1e-11);
        assert!((e[(0, 1)].re + s).abs() < 1e-11);
    }
}
