//! Log-likelihood of event times under an inhomogeneous Poisson process.

use crate::error::{Error, Result};
use crate::numerics::quad::{integrate, QuadOptions};

/// A log-likelihood value. When the rate vanishes at an observed event the
/// value is `-∞` and `zero_rate_events` says how many events did so.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLik {
    pub value: f64,
    pub zero_rate_events: usize,
}

impl LogLik {
    pub fn is_finite(&self) -> bool {
        self.zero_rate_events == 0 && self.value.is_finite()
    }
}

/// `−∫_a^b rate + Σ log rate(tᵢ)` for events in `window = (a, b)`. The integral
/// is split at every breakpoint inside the window, so rate discontinuities
/// should be listed there.
pub fn poisson_loglik<F: FnMut(f64) -> f64>(
    events: &[f64],
    mut rate: F,
    window: (f64, f64),
    breakpoints: &[f64],
) -> Result<LogLik> {
    let (a, b) = window;
    if !(b >= a) {
        return Err(Error::domain(format!("likelihood window ({a}, {b}) is reversed")));
    }
    if let Some(t) = events.iter().find(|&&t| !(t >= a && t <= b)) {
        return Err(Error::domain(format!("event at {t} lies outside the window ({a}, {b})")));
    }
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&t| t > a && t < b).collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let opts = QuadOptions {
        abs_tol: 1e-10,
        rel_tol: 1e-10,
        max_intervals: 4000,
    };
    let mut integral = 0.0;
    for w in cuts.windows(2) {
        integral += integrate(&mut rate, w[0], w[1], opts)?.value;
    }
    if !integral.is_finite() || integral < 0.0 {
        return Err(Error::domain(format!("rate integral {integral} is not a valid intensity")));
    }
    let mut zero = 0;
    let mut sum = 0.0;
    for &t in events {
        let r = rate(t);
        if r < 0.0 || !r.is_finite() {
            return Err(Error::domain(format!("rate {r} at t = {t} is not a valid intensity")));
        }
        if r == 0.0 {
            zero += 1;
        } else {
            sum += r.ln();
        }
    }
    Ok(LogLik {
        value: if zero > 0 { f64::NEG_INFINITY } else { sum - integral },
        zero_rate_events: zero,
    })
}

/// Maximum-likelihood rate for `n` events observed over a span `duration`.
pub fn constant_rate_mle(n: usize, duration: f64) -> Result<f64> {
    if !(duration > 0.0) {
        return Err(Error::domain(format!("observation span must be positive, got {duration}")));
    }
    Ok(n as f64 / duration)
}
