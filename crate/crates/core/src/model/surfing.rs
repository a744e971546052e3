//! Fraction of visitors who browse at least `m` pages deep.
//!
//! Page views per visit follow an inverse-Gaussian law with mean `mu` and
//! shape `lambda`. A story at page position `m` (fractional within a page) is
//! seen by the fraction of users whose browsing depth exceeds `m − 1`:
//!
//! ```text
//! F(m) = ½ (erfc(α (m−1−μ)/μ) − e^{2λ/μ} erfc(α (m−1+μ)/μ)),  α = √(λ / 2(m−1))
//! ```
//!
//! with `F(1) = 1`.

use statrs::function::erf::erfc;

use super::params::SurfingParams;
use crate::error::{Error, Result};
use crate::numerics::special::exp_mul_erfc;

/// Visibility of a story at page position `m ≥ 1`.
pub fn fraction_to_page(m: f64, sp: SurfingParams) -> Result<f64> {
    sp.validate()?;
    if !(m >= 1.0) {
        return Err(Error::domain(format!("page position must be at least 1, got {m}")));
    }
    Ok(surf_tail(m, sp.mu, sp.lambda))
}

/// Unchecked form of [`fraction_to_page`] for inner loops.
#[inline]
pub(crate) fn surf_tail(m: f64, mu: f64, lambda: f64) -> f64 {
    let depth = m - 1.0;
    if depth <= 0.0 {
        return 1.0;
    }
    if depth.is_infinite() {
        return 0.0;
    }
    let alpha = (lambda / (2.0 * depth)).sqrt();
    let first = erfc(alpha * (depth - mu) / mu);
    let second = exp_mul_erfc(2.0 * lambda / mu, alpha * (depth + mu) / mu);
    (0.5 * (first - second)).clamp(0.0, 1.0)
}
