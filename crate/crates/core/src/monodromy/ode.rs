//! Adaptive Dormand–Prince 5(4) for the right-multiplicative matrix system
//! `Y' = Y A(t)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mat2::Mat2;

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub tol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            h_init: 0.05,
            h_min: 1e-12,
            max_steps: 200_000,
        }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn max_abs(m: &Mat2) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Integrates `Y' = Y A(t)` from `t0` to `t1` starting at `y0`.
pub fn integrate(a: &dyn Fn(f64) -> Result<Mat2>, y0: Mat2, t0: f64, t1: f64, opts: &OdeOptions) -> Result<Mat2> {
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(y0);
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0;
    let mut h = opts.h_init.min(span.abs());
    let mut k: [Mat2; 7] = [Mat2::zeros(); 7];
    k[0] = y * a(t)?;
    for _ in 0..opts.max_steps {
        let remaining = (t1 - t).abs();
        if remaining <= 1e-15 * span.abs() {
            return Ok(y);
        }
        let step = h.min(remaining);
        let hs = dir * step;
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                if A[s][j] != 0.0 {
                    ys += kj * Complex64::from(hs * A[s][j]);
                }
            }
            k[s] = ys * a(t + C[s] * hs)?;
        }
        let mut y5 = y;
        let mut err = Mat2::zeros();
        for s in 0..7 {
            y5 += k[s] * Complex64::from(hs * B5[s]);
            err += k[s] * Complex64::from(hs * (B5[s] - B4[s]));
        }
        let scale = opts.tol * (1.0 + max_abs(&y).max(max_abs(&y5)));
        let ratio = max_abs(&err) / scale;
        if ratio <= 1.0 || step <= opts.h_min {
            if ratio > 1.0 {
                return Err(Error::StepUnderflow { at: format!("t = {t}") });
            }
            t += hs;
            y = y5;
            // First-same-as-last: stage 7 is evaluated at the new point.
            k[0] = k[6];
        }
        let factor = if ratio == 0.0 { 5.0 } else { 0.9 * ratio.powf(-0.2) };
        h = step * factor.clamp(0.2, 5.0);
        if h < opts.h_min {
            h = opts.h_min;
        }
    }
    Err(Error::StepUnderflow {
        at: format!("t = {t} (step budget exhausted)"),
    })
}

/// Right-hand side of a batch: `(t, states, derivatives)`.
pub type BatchRhs<'a> = dyn Fn(f64, &[Mat2], &mut [Mat2]) -> Result<()> + 'a;

/// Integrates a batch of systems `Y_i' = F_i(t, Y_i)` with a shared step
/// size; `rhs` fills the derivatives of all members at once.
pub fn integrate_batch(rhs: &BatchRhs<'_>, y0: Vec<Mat2>, t0: f64, t1: f64, opts: &OdeOptions) -> Result<Vec<Mat2>> {
    let n = y0.len();
    let span = t1 - t0;
    if span == 0.0 || n == 0 {
        return Ok(y0);
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0;
    let mut h = opts.h_init.min(span.abs());
    let mut k: Vec<Vec<Mat2>> = vec![vec![Mat2::zeros(); n]; 7];
    let mut stage = vec![Mat2::zeros(); n];
    let mut y5 = vec![Mat2::zeros(); n];
    rhs(t, &y, &mut k[0])?;
    for _ in 0..opts.max_steps {
        let remaining = (t1 - t).abs();
        if remaining <= 1e-15 * span.abs() {
            return Ok(y);
        }
        let step = h.min(remaining);
        let hs = dir * step;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for j in 0..s {
                    if A[s][j] != 0.0 {
                        acc += k[j][i] * Complex64::from(hs * A[s][j]);
                    }
                }
                stage[i] = acc;
            }
            rhs(t + C[s] * hs, &stage, &mut k[s])?;
        }
        let mut ratio: f64 = 0.0;
        for i in 0..n {
            let mut acc = y[i];
            let mut err = Mat2::zeros();
            for s in 0..7 {
                acc += k[s][i] * Complex64::from(hs * B5[s]);
                err += k[s][i] * Complex64::from(hs * (B5[s] - B4[s]));
            }
            let scale = opts.tol * (1.0 + max_abs(&y[i]).max(max_abs(&acc)));
            ratio = ratio.max(max_abs(&err) / scale);
            y5[i] = acc;
        }
        if ratio <= 1.0 || step <= opts.h_min {
            if ratio > 1.0 {
                return Err(Error::StepUnderflow { at: format!("t = {t}") });
            }
            t += hs;
            std::mem::swap(&mut y, &mut y5);
            let last = std::mem::take(&mut k[6]);
            k[0] = last;
            k[6] = vec![Mat2::zeros(); n];
        }
        let factor = if ratio == 0.0 { 5.0 } else { 0.9 * ratio.powf(-0.2) };
        h = (step * factor.clamp(0.2, 5.0)).max(opts.h_min);
    }
    Err(Error::StepUnderflow {
        at: format!("t = {t} (step budget exhausted)"),
    })
}
