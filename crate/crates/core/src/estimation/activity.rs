//! User activity: each user votes as a Poisson process whose expected count
//! over the sample is lognormally distributed across users. Users with no
//! votes are invisible, so the fit is zero-truncated.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dist::poisson_lognormal::{ln_pmf, pmf};
use crate::error::{Error, Result};
use crate::numerics::optim::{nelder_mead, NelderMead};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActivityFit {
    /// Mean of the log expected vote count.
    pub mu: f64,
    /// Standard deviation of the log expected vote count.
    pub sigma: f64,
    /// Probability that an active user casts no vote in the sample.
    pub p_zero: f64,
    /// Maximized zero-truncated log-likelihood.
    pub log_likelihood: f64,
}

/// Zero-truncated log-likelihood of a histogram `k → n_k` (k ≥ 1).
pub fn truncated_loglik(hist: &BTreeMap<u64, u64>, mu: f64, sigma: f64) -> Result<f64> {
    let p0 = pmf(mu, sigma, 0)?;
    if !(p0 < 1.0) {
        return Ok(f64::NEG_INFINITY);
    }
    let mut total_users = 0u64;
    let mut ll = 0.0;
    for (&k, &n) in hist {
        if n == 0 {
            continue;
        }
        ll += n as f64 * ln_pmf(mu, sigma, k)?;
        total_users += n;
    }
    Ok(ll - total_users as f64 * (-p0).ln_1p())
}

/// Maximum-likelihood fit of the zero-truncated Poisson-lognormal mixture.
pub fn fit_activity_mixture(hist: &BTreeMap<u64, u64>) -> Result<ActivityFit> {
    if hist.contains_key(&0) {
        return Err(Error::domain("activity histogram must only count users with at least one vote"));
    }
    let users: u64 = hist.values().sum();
    if users == 0 {
        return Err(Error::domain("activity histogram is empty"));
    }
    // Start from the moments of log counts.
    let (mut m, mut s2) = (0.0, 0.0);
    for (&k, &n) in hist {
        m += n as f64 * (k as f64).ln();
    }
    m /= users as f64;
    for (&k, &n) in hist {
        s2 += n as f64 * ((k as f64).ln() - m).powi(2);
    }
    let s = (s2 / users as f64).sqrt().max(0.3);

    let mut failure = None;
    let objective = |x: &[f64]| match truncated_loglik(hist, x[0], x[1].exp()) {
        Ok(v) => -v,
        Err(e) => {
            failure.get_or_insert(e);
            f64::INFINITY
        }
    };
    let opts = NelderMead::new(vec![0.5, 0.2])
        .with_bounds(vec![(-20.0, 20.0), ((1e-3f64).ln(), 10f64.ln())])
        .with_tolerances(1e-9, 1e-7)
        .with_max_iter(1000);
    let best = nelder_mead(objective, &[m - s, (1.5 * s).ln()], &opts);
    if !best.value.is_finite() {
        return Err(match failure {
            Some(e) => e,
            None => Error::estimation("activity likelihood is not finite anywhere on the search path"),
        });
    }
    let (mu, sigma) = (best.x[0], best.x[1].exp());
    if !best.converged {
        return Err(Error::Estimation {
            message: format!("activity fit did not converge in {} iterations", best.iterations),
            best: Some(vec![mu, sigma]),
        });
    }
    Ok(ActivityFit {
        mu,
        sigma,
        p_zero: pmf(mu, sigma, 0)?,
        log_likelihood: -best.value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal, Poisson};

    #[test]
    fn recovers_generating_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let normal = Normal::new(1.0, 1.0).unwrap();
        let mut hist = BTreeMap::new();
        for _ in 0..5000 {
            let rate: f64 = normal.sample(&mut rng);
            let k = Poisson::new(rate.exp()).unwrap().sample(&mut rng) as u64;
            if k > 0 {
                *hist.entry(k).or_insert(0) += 1;
            }
        }
        let fit = fit_activity_mixture(&hist).unwrap();
        assert!((fit.mu - 1.0).abs() < 0.15, "{fit:?}");
        assert!((fit.sigma - 1.0).abs() < 0.15, "{fit:?}");
    }

    #[test]
    fn rejects_empty_or_zero_bins() {
        assert!(fit_activity_mixture(&BTreeMap::new()).is_err());
        assert!(fit_activity_mixture(&BTreeMap::from([(0, 3)])).is_err());
    }
}
