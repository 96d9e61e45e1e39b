//! Small helpers for 2×2 complex matrices.

use nalgebra::Matrix2;
use num_complex::Complex64;

pub type Mat2 = Matrix2<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn mat(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Mat2 {
    Mat2::new(a, b, c, d)
}

pub fn identity() -> Mat2 {
    Mat2::identity()
}

pub fn det(m: &Mat2) -> Complex64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

/// Adjugate; equals the inverse when `det = 1`.
pub fn adj(m: &Mat2) -> Mat2 {
    mat(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)])
}

pub fn inv(m: &Mat2) -> Option<Mat2> {
    let d = det(m);
    if d.norm() == 0.0 {
        None
    } else {
        Some(adj(m) / d)
    }
}

pub fn dagger(m: &Mat2) -> Mat2 {
    m.adjoint()
}

pub fn trace(m: &Mat2) -> Complex64 {
    m[(0, 0)] + m[(1, 1)]
}

/// Frobenius norm.
pub fn norm(m: &Mat2) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Scale to determinant one (principal square root).
pub fn normalize_det(m: &Mat2) -> Option<Mat2> {
    let d = det(m);
    if d.norm() == 0.0 {
        None
    } else {
        Some(m / d.sqrt())
    }
}

/// `min(‖a - b‖, ‖a + b‖)`: distance in PSL(2, C).
pub fn dist_up_to_sign(a: &Mat2, b: &Mat2) -> f64 {
    norm(&(a - b)).min(norm(&(a + b)))
}

/// `‖m† m - I‖`
pub fn unitarity_residual(m: &Mat2) -> f64 {
    norm(&(m.adjoint() * m - identity()))
}

pub fn pauli() -> [Mat2; 3] {
    [mat(ZERO, ONE, ONE, ZERO), mat(ZERO, -I, I, ZERO), mat(ONE, ZERO, ZERO, -ONE)]
}

/// Lie-algebra element `(i/2)(x σ1 + y σ2 + z σ3)` to `(x, y, z)`.
/// Principal logarithm of a determinant-one matrix away from `−I`:
/// `log M = (φ / sin φ)(M − cos φ · I)` with `cos φ = tr M / 2`.
pub fn log_sl2(m: &Mat2) -> Mat2 {
    let c = trace(m) * 0.5;
    let phi = c.acos();
    let s = phi.sin();
    let k = if phi.norm() < 1e-4 { ONE + phi * phi / 6.0 } else { phi / s };
    (m - identity() * c) * k
}

pub fn su2_to_r3(m: &Mat2) -> [f64; 3] {
    // (i/2)σ3 = diag(i/2, -i/2); (i/2)σ1 has i/2 off-diagonal; (i/2)σ2 = [[0, 1/2], [-1/2, 0]].
    let x = (m[(0, 1)] + m[(1, 0)]).im;
    let y = (m[(0, 1)] - m[(1, 0)]).re;
    let z = (m[(0, 0)] - m[(1, 1)]).im;
    [x, y, z]
}

pub fn r3_to_su2(v: [f64; 3]) -> Mat2 {
    let p = pauli();
    (p[0] * Complex64::from(v[0]) + p[1] * Complex64::from(v[1]) + p[2] * Complex64::from(v[2])) * (I * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_inverts_exponential() {
        let x = mat(
            Complex64::new(0.0, 0.3),
            Complex64::new(0.2, -0.1),
            Complex64::new(-0.2, -0.1),
            Complex64::new(0.0, -0.3),
        );
        for t in [1e-6, 1e-3, 0.5, 2.0] {
            let xt = x * Complex64::from(t);
            assert!(norm(&(log_sl2(&xt.exp()) - xt)) < 1e-12 * (1.0 + t));
        }
    }

    #[test]
    fn su2_round_trip() {
        let v = [0.3, -1.2, 2.5];
        let w = su2_to_r3(&r3_to_su2(v));
        for k in 0..3 {
            assert!((v[k] - w[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn adjugate_inverts_unimodular() {
        let m = normalize_det(&mat(ONE, I, Complex64::new(2.0, 1.0), Complex64::new(0.5, -1.0))).unwrap();
        assert!(norm(&(m * adj(&m) - identity())) < 1e-14);
    }
}
