//! Embedded Dormand–Prince 5(4) integrator with step-level dense output.

use crate::error::{Error, Result};

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

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// One accepted integration step, with endpoint values and derivatives.
#[derive(Debug, Clone, Copy)]
pub struct StepSpan<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    pub f0: [f64; N],
    pub f1: [f64; N],
    /// Fourth-order correction to the Hermite interpolant.
    pub correction: [f64; N],
}

impl<const N: usize> StepSpan<N> {
    /// Fourth-order continuous extension inside the step.
    pub fn interpolate(&self, t: f64) -> [f64; N] {
        let h = self.t1 - self.t0;
        if h == 0.0 {
            return self.y0;
        }
        let th = ((t - self.t0) / h).clamp(0.0, 1.0);
        let th1 = 1.0 - th;
        let mut out = [0.0; N];
        for i in 0..N {
            let dy = self.y1[i] - self.y0[i];
            let b = h * self.f0[i] - dy;
            let c = dy - h * self.f1[i] - b;
            out[i] = self.y0[i] + th * (dy + th1 * (b + th * (c + th1 * self.correction[i])));
        }
        out
    }
}

/// Adaptive Dormand–Prince 5(4) settings.
#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_steps: usize,
    pub initial_step: f64,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            abs_tol: 1e-8,
            rel_tol: 1e-8,
            max_steps: 200_000,
            initial_step: 1e-4,
        }
    }
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

impl Dopri5 {
    /// Integrates `dy/dt = rhs(t, y)` from `t0` to `t1` (requires `t1 ≥ t0`),
    /// reporting each accepted step to `on_step`. Returns `y(t1)`.
    pub fn integrate<const N: usize, F, S>(
        &self,
        mut rhs: F,
        t0: f64,
        y0: [f64; N],
        t1: f64,
        mut on_step: S,
    ) -> Result<[f64; N]>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
        S: FnMut(&StepSpan<N>),
    {
        if !(t1 >= t0) {
            return Err(Error::domain(format!("integration interval [{t0}, {t1}] is reversed")));
        }
        if t1 == t0 {
            return Ok(y0);
        }
        let span = t1 - t0;
        let mut t = t0;
        let mut y = y0;
        let mut k1 = rhs(t, &y);
        let mut h = self.initial_step.min(span);
        let mut steps = 0usize;
        let mut rejected = 0usize;
        while t < t1 {
            if steps >= self.max_steps {
                return Err(Error::numerical(format!(
                    "integrator exceeded {} steps at t = {t} (target {t1}, step {h:e}, {rejected} rejections)",
                    self.max_steps
                )));
            }
            let last = t + h >= t1 || (t1 - (t + h)) < 1e-12 * span;
            if last {
                h = t1 - t;
            }
            let k2 = rhs(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
            let k3 = rhs(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
            let k4 = rhs(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = rhs(
                t + C5 * h,
                &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = rhs(
                t + h,
                &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let t_new = if last { t1 } else { t + h };
            let k7 = rhs(t_new, &y_new);

            let mut err_sq = 0.0;
            for i in 0..N {
                let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let scale = self.abs_tol + self.rel_tol * y[i].abs().max(y_new[i].abs());
                err_sq += (e / scale).powi(2);
            }
            let err = (err_sq / N as f64).sqrt();
            if !err.is_finite() {
                h *= 0.25;
                rejected += 1;
                steps += 1;
                if h < 1e-14 * span {
                    return Err(Error::numerical(format!("non-finite derivative near t = {t}")));
                }
                continue;
            }
            if err <= 1.0 {
                let mut correction = [0.0; N];
                for i in 0..N {
                    correction[i] = h
                        * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                }
                on_step(&StepSpan {
                    t0: t,
                    t1: t_new,
                    y0: y,
                    y1: y_new,
                    f0: k1,
                    f1: k7,
                    correction,
                });
                t = t_new;
                y = y_new;
                k1 = k7;
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                h *= factor;
            } else {
                rejected += 1;
                h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if h < 1e-14 * span {
                    return Err(Error::numerical(format!(
                        "step size underflow at t = {t} (error norm {err:e})"
                    )));
                }
            }
            steps += 1;
        }
        Ok(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let solver = Dopri5::default();
        let y = solver
            .integrate(|_, y: &[f64; 1]| [-0.7 * y[0]], 0.0, [3.0], 5.0, |_| {})
            .unwrap();
        let exact = 3.0 * (-3.5f64).exp();
        assert!((y[0] - exact).abs() < 1e-8, "{}", y[0] - exact);
    }

    #[test]
    fn harmonic_oscillator_dense_output() {
        let solver = Dopri5::default();
        let mut max_err: f64 = 0.0;
        solver
            .integrate(
                |_, y: &[f64; 2]| [y[1], -y[0]],
                0.0,
                [0.0, 1.0],
                10.0,
                |s| {
                    let tm = 0.5 * (s.t0 + s.t1);
                    let mid = s.interpolate(tm);
                    max_err = max_err.max((mid[0] - tm.sin()).abs());
                },
            )
            .unwrap();
        assert!(max_err < 1e-6, "{max_err}");
    }

    #[test]
    fn zero_length_returns_initial_value() {
        let y = Dopri5::default()
            .integrate(|_, y: &[f64; 1]| [y[0]], 1.0, [2.0], 1.0, |_| panic!("no steps"))
            .unwrap();
        assert_eq!(y, [2.0]);
    }
}
