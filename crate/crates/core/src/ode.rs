//! Scalar adaptive Dormand–Prince 5(4) integration.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
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

/// Integrates `y' = f(t, y)` from `(t0, y0)` to `t1` (either direction).
pub fn rk45<F: FnMut(f64, f64) -> f64>(mut f: F, t0: f64, y0: f64, t1: f64, rtol: f64, atol: f64) -> Result<f64> {
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(y0);
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0;
    let mut h = span.abs() / 64.0;
    let mut steps = 0usize;
    while (t1 - t) * dir > 0.0 {
        steps += 1;
        if steps > 200_000 {
            return Err(Error::numeric("rk45 exceeded the step budget", h));
        }
        h = h.min((t1 - t).abs());
        let mut k = [0.0; 7];
        for i in 0..7 {
            let yi = y + dir * h * (0..i).map(|j| A[i][j] * k[j]).sum::<f64>();
            k[i] = f(t + dir * h * C[i], yi);
        }
        let y5 = y + dir * h * (0..7).map(|i| B5[i] * k[i]).sum::<f64>();
        let y4 = y + dir * h * (0..7).map(|i| B4[i] * k[i]).sum::<f64>();
        if !y5.is_finite() {
            return Err(Error::numeric("rk45 produced a non-finite state", h));
        }
        let scale = atol + rtol * y.abs().max(y5.abs());
        let err = (y5 - y4).abs() / scale;
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        if err <= 1.0 {
            t += dir * h;
            y = y5;
        } else if h * factor < 1e-14 * span.abs() {
            return Err(Error::numeric("rk45 step size underflow", err));
        }
        h *= factor;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let y = rk45(|_, y| y, 0.0, 1.0, 1.0, 1e-12, 1e-14).unwrap();
        assert!((y - 1f64.exp()).abs() < 1e-10);
    }

    #[test]
    fn backward_linear_problem() {
        // y' = y/(1 - t) - 1 with y(1) = 0 has solution (1 - t)/2
        let y = rk45(|t, y| y / (1.0 - t) - 1.0, 0.6, 0.2, 0.1, 1e-12, 1e-14).unwrap();
        assert!((y - 0.45).abs() < 1e-10);
    }
}
