//! Kolmogorov–Smirnov goodness of fit with a parametric bootstrap that refits
//! the family on every replicate, so the null distribution accounts for the
//! parameters having been estimated from the data.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dist::{DoubleParetoLognormal, LogNormal};
use crate::error::{Error, Result};
use crate::numerics::optim::{nelder_mead, NelderMead};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    LogNormal,
    DoubleParetoLognormal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fitted {
    LogNormal(LogNormal),
    DoubleParetoLognormal(DoubleParetoLognormal),
}

impl Fitted {
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Fitted::LogNormal(d) => d.cdf(x),
            Fitted::DoubleParetoLognormal(d) => d.cdf(x),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Fitted::LogNormal(d) => d.sample(rng),
            Fitted::DoubleParetoLognormal(d) => d.sample(rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub replicates_used: usize,
    pub discarded: usize,
}

/// `sup |F_n − F|` for the empirical distribution of `samples`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Maximum-likelihood double-Pareto lognormal fit.
pub fn fit_dpln(samples: &[f64]) -> Result<DoubleParetoLognormal> {
    if samples.len() < 5 || samples.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::estimation("double-Pareto lognormal fit needs at least 5 positive samples"));
    }
    let n = samples.len() as f64;
    let m = samples.iter().map(|x| x.ln()).sum::<f64>() / n;
    let sd = (samples.iter().map(|x| (x.ln() - m).powi(2)).sum::<f64>() / n).sqrt();
    if !(sd > 0.0) {
        return Err(Error::estimation("double-Pareto lognormal fit on identical samples"));
    }
    let build = |x: &[f64]| DoubleParetoLognormal::new(x[0].exp(), x[1].exp(), x[2], x[3].exp());
    let nll = |x: &[f64]| match build(x) {
        Ok(d) => -samples.iter().map(|&s| d.ln_pdf(s)).sum::<f64>(),
        Err(_) => f64::INFINITY,
    };
    let start = [(2.0 / sd).ln(), (2.0 / sd).ln(), m, (0.7 * sd).ln()];
    let opts = NelderMead::new(vec![0.5, 0.5, 0.5 * sd, 0.5])
        .with_bounds(vec![(-5.0, 8.0), (-5.0, 8.0), (m - 20.0 * sd, m + 20.0 * sd), ((1e-4 * sd).ln(), (10.0 * sd).ln())])
        .with_tolerances(1e-10, 1e-8)
        .with_max_iter(4000);
    let mut best = nelder_mead(nll, &start, &opts);
    let again = nelder_mead(nll, &best.x, &opts);
    if again.value < best.value {
        best = again;
    }
    if !best.value.is_finite() || !best.converged {
        return Err(Error::Estimation {
            message: "double-Pareto lognormal fit did not converge".into(),
            best: Some(best.x),
        });
    }
    build(&best.x)
}

pub fn fit_family(samples: &[f64], family: Family) -> Result<Fitted> {
    match family {
        Family::LogNormal => LogNormal::fit(samples).map(Fitted::LogNormal),
        Family::DoubleParetoLognormal => fit_dpln(samples).map(Fitted::DoubleParetoLognormal),
    }
}

/// Bootstrap p-value of the KS statistic for `family`. Replicates whose refit
/// fails are discarded with a warning; more than 10% discarded is an error.
pub fn ks_bootstrap(samples: &[f64], family: Family, replicates: usize, seed: u64) -> Result<KsResult> {
    if samples.len() < 20 {
        return Err(Error::domain(format!("KS bootstrap needs at least 20 samples, got {}", samples.len())));
    }
    if replicates < 100 {
        return Err(Error::domain(format!("KS bootstrap needs at least 100 replicates, got {replicates}")));
    }
    let fitted = fit_family(samples, family)?;
    let observed = ks_statistic(samples, |x| fitted.cdf(x));
    let n = samples.len();
    let stats: Vec<Option<f64>> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let sim: Vec<f64> = (0..n).map(|_| fitted.sample(&mut rng)).collect();
            match fit_family(&sim, family) {
                Ok(refit) => Some(ks_statistic(&sim, |x| refit.cdf(x))),
                Err(e) => {
                    warn!("bootstrap replicate {i} discarded: {e}");
                    None
                }
            }
        })
        .collect();
    let used: Vec<f64> = stats.into_iter().flatten().collect();
    let discarded = replicates - used.len();
    if discarded * 10 > replicates {
        return Err(Error::estimation(format!(
            "{discarded} of {replicates} bootstrap replicates failed to refit"
        )));
    }
    let exceed = used.iter().filter(|&&d| d >= observed).count();
    Ok(KsResult {
        statistic: observed,
        p_value: exceed as f64 / used.len() as f64,
        replicates_used: used.len(),
        discarded,
    })
}
