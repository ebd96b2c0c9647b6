//! Scalar Dormand-Prince 5(4) integrator with adaptive step size.
//!
//! Used for the optimality ODE and its inverse. Both are scalar, so the
//! integrator is specialised to `y' = f(x, y)` with `y: f64`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 {
            rtol: 1e-12,
            atol: 1e-14,
            max_steps: 200_000,
        }
    }
}

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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// difference between the 5th- and 4th-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

impl Dopri5 {
    /// Integrate from `(x0, y0)` and report `y` at each of `xs`.
    ///
    /// `xs` must be monotone in the direction of integration (away from
    /// `x0`). Steps are clipped to land exactly on every requested point, so
    /// no interpolation error is introduced.
    pub fn solve<F>(&self, f: F, x0: f64, y0: f64, xs: &[f64]) -> Result<Vec<f64>>
    where
        F: Fn(f64, f64) -> Result<f64>,
    {
        let mut out = Vec::with_capacity(xs.len());
        let mut x = x0;
        let mut y = y0;
        let mut h: f64 = 0.0;
        let mut steps = 0usize;
        let mut k1 = f(x, y)?;
        for &target in xs {
            let span = target - x;
            if span == 0.0 {
                out.push(y);
                continue;
            }
            let dir = span.signum();
            if h == 0.0 || h.signum() != dir {
                h = dir * (span.abs() * 1e-3).max(1e-12 * x.abs().max(1.0));
            }
            while (target - x) * dir > 0.0 {
                steps += 1;
                if steps > self.max_steps {
                    return Err(Error::Integration {
                        x,
                        reason: "step budget exhausted".into(),
                    });
                }
                let last = (x + h - target) * dir >= 0.0;
                let hs = if last { target - x } else { h };
                let k2 = f(x + C2 * hs, y + hs * A21 * k1)?;
                let k3 = f(x + C3 * hs, y + hs * (A31 * k1 + A32 * k2))?;
                let k4 = f(x + C4 * hs, y + hs * (A41 * k1 + A42 * k2 + A43 * k3))?;
                let k5 = f(x + C5 * hs, y + hs * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))?;
                let k6 = f(
                    x + hs,
                    y + hs * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5),
                )?;
                let y_new = y + hs * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
                let x_new = if last { target } else { x + hs };
                let k7 = f(x_new, y_new)?;
                let err_abs =
                    (hs * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)).abs();
                let scale = self.atol + self.rtol * y.abs().max(y_new.abs());
                let err = err_abs / scale;
                if !err.is_finite() {
                    if hs.abs() < 1e-15 * x.abs().max(1e-300) {
                        return Err(Error::Integration {
                            x,
                            reason: "non-finite derivative".into(),
                        });
                    }
                    h = hs * 0.1;
                    continue;
                }
                if err <= 1.0 {
                    x = x_new;
                    y = y_new;
                    k1 = k7;
                    let grow = if err == 0.0 {
                        5.0
                    } else {
                        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    // keep the free-running step when the last step was clipped short
                    if !last {
                        h = hs * grow;
                    } else if hs.abs() * grow > h.abs() {
                        h = dir * hs.abs() * grow;
                    }
                } else {
                    h = hs * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                    if h.abs() < 1e-15 * x.abs().max(1e-300) {
                        return Err(Error::Integration {
                            x,
                            reason: "step size underflow".into(),
                        });
                    }
                }
            }
            out.push(y);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let xs: Vec<f64> = (1..=10).map(|i| i as f64 * 0.3).collect();
        let ys = Dopri5::default().solve(|_, y| Ok(y), 0.0, 1.0, &xs).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((y / x.exp() - 1.0).abs() < 1e-10, "x={x} y={y}");
        }
    }

    #[test]
    fn integrates_backwards() {
        let ys = Dopri5::default()
            .solve(|x, _| Ok(x.cos()), 2.0, 2f64.sin(), &[1.0, 0.0])
            .unwrap();
        assert!((ys[0] - 1f64.sin()).abs() < 1e-12);
        assert!(ys[1].abs() < 1e-12);
    }
}
