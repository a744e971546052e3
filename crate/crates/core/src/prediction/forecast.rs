//! Point forecasts and Laplace-approximation confidence intervals.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::state::{reconstruct_with, PoolSource, Reconstruction};
use crate::data::{StoryId, StoryRecord};
use crate::error::{Error, Result};
use crate::estimation::site::R_MAX;
use crate::estimation::story::{fit_story_interest, log_posterior, ClassPriors};
use crate::model::{solve_trajectory, SiteModel, StateVector, StoryParams};
use crate::numerics::ode::Dopri5;

/// Tighter than the default solver so that finite differences of the
/// objective are not dominated by step-size noise.
const HESSIAN_SOLVER: Dopri5 = Dopri5 {
    abs_tol: 1e-11,
    rel_tol: 1e-11,
    max_steps: 400_000,
    initial_step: 1e-5,
};
const HESSIAN_STEP: f64 = 1e-3;
const HESSIAN_FALLBACK_STEP: f64 = 1e-2;

/// Choices that go beyond the basic procedure. The defaults reproduce it:
/// pools from recent vote rates, and intervals reflecting only the
/// uncertainty in `r`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PredictOptions {
    pub pools: PoolSource,
    /// Add Poisson noise on the future vote increment of every sample, so
    /// intervals describe realized counts rather than expected ones.
    pub vote_noise: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub level: f64,
    /// Per-class `(lower, upper)` vote counts.
    pub bounds: [(f64, f64); 3],
}

#[derive(Debug, Clone, Serialize)]
pub struct Forecast {
    pub story: StoryId,
    pub t_promotion: Option<f64>,
    pub made_at: f64,
    pub horizon: f64,
    /// Expected votes per class at the horizon along the estimated trajectory.
    pub predicted: [f64; 3],
    pub interval: Option<Interval>,
    pub r_hat: StoryParams,
    pub at_boundary: [bool; 3],
    /// Covariance of `ln r`, when an interval was computed.
    pub covariance: Option<[[f64; 3]; 3]>,
    pub reconstruction: Reconstruction,
}

fn check_times(story: &StoryRecord, made_at: f64, horizon: f64) -> Result<()> {
    if !(made_at > 0.0 && made_at.is_finite()) {
        return Err(Error::domain(format!("prediction time must be positive, got {made_at}")));
    }
    if !(horizon >= made_at && horizon.is_finite()) {
        return Err(Error::domain(format!("horizon {horizon} precedes prediction time {made_at}")));
    }
    match story.t_promotion {
        Some(tp) if tp <= 24.0 => Ok(()),
        _ => Err(Error::domain(format!(
            "story {} was not promoted within 24 Digg hours of submission",
            story.id
        ))),
    }
}

fn votes_at(state: &StateVector) -> [f64; 3] {
    [state.v_s, state.v_f, state.v_n]
}

fn solve_votes(state: &StateVector, from: f64, horizons: &[f64], sp: &StoryParams, site: &SiteModel) -> Result<Vec<[f64; 3]>> {
    let end = horizons.iter().copied().fold(from, f64::max);
    if end == from {
        return Ok(horizons.iter().map(|_| votes_at(state)).collect());
    }
    let traj = solve_trajectory(state, from, end, horizons, sp, site)?;
    Ok(traj.points.iter().map(|(_, s)| votes_at(s)).collect())
}

/// Fits `r` to the votes before `made_at`, rebuilds the state there and
/// solves the model to `horizon`.
pub fn predict(
    story: &StoryRecord,
    made_at: f64,
    horizon: f64,
    site: &SiteModel,
    priors: Option<&ClassPriors>,
) -> Result<Forecast> {
    predict_with(story, made_at, horizon, site, priors, &PredictOptions::default())
}

pub fn predict_with(
    story: &StoryRecord,
    made_at: f64,
    horizon: f64,
    site: &SiteModel,
    priors: Option<&ClassPriors>,
    opts: &PredictOptions,
) -> Result<Forecast> {
    check_times(story, made_at, horizon)?;
    let fit = fit_story_interest(story, site, priors, made_at)?;
    let reconstruction = reconstruct_with(story, made_at, &fit.params, site, opts.pools)?;
    let predicted = solve_votes(&reconstruction.state, made_at, &[horizon], &fit.params, site)?[0];
    Ok(Forecast {
        story: story.id,
        t_promotion: story.t_promotion,
        made_at,
        horizon,
        predicted,
        interval: None,
        r_hat: fit.params,
        at_boundary: fit.at_boundary,
        covariance: None,
        reconstruction,
    })
}

/// Central-difference Hessian of `f` at `x`.
pub fn hessian3<F: Fn([f64; 3]) -> f64>(f: &F, x: [f64; 3], h: f64) -> Matrix3<f64> {
    let at = |d: [f64; 3]| f([x[0] + d[0], x[1] + d[1], x[2] + d[2]]);
    let f0 = f(x);
    let mut m = Matrix3::zeros();
    for i in 0..3 {
        let mut e = [0.0; 3];
        e[i] = h;
        let up = at(e);
        e[i] = -h;
        let down = at(e);
        m[(i, i)] = (up - 2.0 * f0 + down) / (h * h);
        for j in 0..i {
            let mut pp = [0.0; 3];
            pp[i] = h;
            pp[j] = h;
            let mut pm = pp;
            pm[j] = -h;
            let mut mp = pp;
            mp[i] = -h;
            let mm = [-pp[0], -pp[1], -pp[2]];
            let v = (at(pp) - at(pm) - at(mp) + at(mm)) / (4.0 * h * h);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

fn negative_definite(d: &Matrix3<f64>) -> (bool, Vector3<f64>) {
    let eig = SymmetricEigen::new(*d).eigenvalues;
    (eig.iter().all(|&e| e < 0.0 && e.is_finite()), eig)
}

/// Second-derivative matrix of the log posterior in `ln r` at `r_hat`. Falls
/// back to a Richardson-extrapolated estimate with a larger step when the
/// small-step matrix is not negative definite.
pub fn log_posterior_hessian(
    story: &StoryRecord,
    r_hat: [f64; 3],
    site: &SiteModel,
    priors: Option<&ClassPriors>,
    upto: f64,
) -> Result<Matrix3<f64>> {
    let f = |x: [f64; 3]| log_posterior(&HESSIAN_SOLVER, story, x.map(f64::exp), site, priors, upto);
    let x = r_hat.map(f64::ln);
    let d = hessian3(&f, x, HESSIAN_STEP);
    let (ok, eig) = negative_definite(&d);
    if ok {
        return Ok(d);
    }
    let coarse = hessian3(&f, x, HESSIAN_FALLBACK_STEP);
    let fine = hessian3(&f, x, 0.5 * HESSIAN_FALLBACK_STEP);
    let rich = (fine * 4.0 - coarse) / 3.0;
    let (ok2, eig2) = negative_definite(&rich);
    if ok2 {
        return Ok(rich);
    }
    Err(Error::Numerical(format!(
        "log-posterior Hessian is not negative definite for story {} (eigenvalues {:?}; with wider steps {:?})",
        story.id,
        eig.as_slice(),
        eig2.as_slice()
    )))
}

/// `q`-quantile of sorted data with linear interpolation between order
/// statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per-class quantile intervals at each horizon from `n_samples` draws of
/// `ln r ~ N(ln r_hat, cov)`, each solved forward from `state`. Sample `i`
/// uses its own random stream, so results do not depend on thread count.
#[allow(clippy::too_many_arguments)]
pub fn sample_intervals(
    state: &StateVector,
    made_at: f64,
    horizons: &[f64],
    r_hat: &StoryParams,
    cov: &Matrix3<f64>,
    level: f64,
    n_samples: usize,
    seed: u64,
    vote_noise: bool,
    site: &SiteModel,
) -> Result<Vec<Interval>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!("interval level must lie in (0, 1), got {level}")));
    }
    if n_samples < 100 {
        return Err(Error::domain(format!("need at least 100 samples, got {n_samples}")));
    }
    let eig = SymmetricEigen::new(*cov);
    let scale = eig.eigenvectors * Matrix3::from_diagonal(&eig.eigenvalues.map(|e| e.max(0.0).sqrt()));
    let mean = Vector3::from(r_hat.r_triple().map(f64::ln));
    let draws: Vec<Vec<[f64; 3]>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let z = Vector3::from_fn(|_, _| StandardNormal.sample(&mut rng));
            let x = mean + scale * z;
            let r = [x[0], x[1], x[2]].map(|v| v.exp().min(R_MAX));
            let sp = with_r_params(r_hat, r);
            let mut votes = solve_votes(state, made_at, horizons, &sp, site)?;
            if vote_noise {
                let now = votes_at(state);
                // Independent increments between consecutive horizons keep each
                // sample path non-decreasing.
                let mut order: Vec<usize> = (0..horizons.len()).collect();
                order.sort_by(|&a, &b| horizons[a].total_cmp(&horizons[b]));
                let mut last_mean = now;
                let mut last_draw = now;
                for &h in &order {
                    for c in 0..3 {
                        let inc = (votes[h][c] - last_mean[c]).max(0.0);
                        last_mean[c] = votes[h][c];
                        let draw = if inc > 0.0 {
                            Poisson::new(inc).map_err(|e| Error::numerical(e.to_string()))?.sample(&mut rng)
                        } else {
                            0.0
                        };
                        last_draw[c] += draw;
                        votes[h][c] = last_draw[c];
                    }
                }
            }
            Ok(votes)
        })
        .collect::<Result<_>>()?;
    let lo_q = 0.5 * (1.0 - level);
    let hi_q = 0.5 * (1.0 + level);
    Ok((0..horizons.len())
        .map(|h| {
            let bounds = std::array::from_fn(|c| {
                let mut xs: Vec<f64> = draws.iter().map(|d| d[h][c]).collect();
                xs.sort_by(f64::total_cmp);
                (quantile(&xs, lo_q), quantile(&xs, hi_q))
            });
            Interval { level, bounds }
        })
        .collect())
}

fn with_r_params(base: &StoryParams, r: [f64; 3]) -> StoryParams {
    StoryParams {
        r_submitter_fan: r[0],
        r_other_fan: r[1],
        r_nonfan: r[2],
        ..*base
    }
}

/// A forecast with per-class intervals at several horizons.
#[derive(Debug, Clone, Serialize)]
pub struct ForecastBand {
    pub forecast: Forecast,
    pub horizons: Vec<f64>,
    pub predicted: Vec<[f64; 3]>,
    pub intervals: Vec<Interval>,
}

/// Point forecast plus Laplace intervals at every horizon in `horizons`.
#[allow(clippy::too_many_arguments)]
pub fn confidence_band(
    story: &StoryRecord,
    made_at: f64,
    horizons: &[f64],
    level: f64,
    n_samples: usize,
    seed: u64,
    site: &SiteModel,
    priors: Option<&ClassPriors>,
) -> Result<ForecastBand> {
    confidence_band_with(story, made_at, horizons, level, n_samples, seed, site, priors, &PredictOptions::default())
}

#[allow(clippy::too_many_arguments)]
pub fn confidence_band_with(
    story: &StoryRecord,
    made_at: f64,
    horizons: &[f64],
    level: f64,
    n_samples: usize,
    seed: u64,
    site: &SiteModel,
    priors: Option<&ClassPriors>,
    opts: &PredictOptions,
) -> Result<ForecastBand> {
    let Some(&last) = horizons.iter().max_by(|a, b| a.total_cmp(b)) else {
        return Err(Error::domain("no horizons requested"));
    };
    let mut forecast = predict_with(story, made_at, last, site, priors, opts)?;
    for &h in horizons {
        check_times(story, made_at, h)?;
    }
    let d = log_posterior_hessian(story, forecast.r_hat.r_triple(), site, priors, made_at)?;
    let inv = d
        .try_inverse()
        .ok_or_else(|| Error::numerical(format!("log-posterior Hessian of story {} is singular", story.id)))?;
    let mut cov = -inv;
    cov = (cov + cov.transpose()) * 0.5;
    let state = forecast.reconstruction.state;
    let intervals = sample_intervals(
        &state,
        made_at,
        horizons,
        &forecast.r_hat,
        &cov,
        level,
        n_samples,
        seed,
        opts.vote_noise,
        site,
    )?;
    let predicted = solve_votes(&state, made_at, horizons, &forecast.r_hat, site)?;
    forecast.covariance = Some(std::array::from_fn(|i| std::array::from_fn(|j| cov[(i, j)])));
    forecast.interval = intervals.last().copied();
    Ok(ForecastBand {
        forecast,
        horizons: horizons.to_vec(),
        predicted,
        intervals,
    })
}

/// Point forecast with a per-class interval at `horizon`.
#[allow(clippy::too_many_arguments)]
pub fn confidence_interval(
    story: &StoryRecord,
    made_at: f64,
    horizon: f64,
    level: f64,
    n_samples: usize,
    seed: u64,
    site: &SiteModel,
    priors: Option<&ClassPriors>,
) -> Result<Forecast> {
    confidence_interval_with(story, made_at, horizon, level, n_samples, seed, site, priors, &PredictOptions::default())
}

#[allow(clippy::too_many_arguments)]
pub fn confidence_interval_with(
    story: &StoryRecord,
    made_at: f64,
    horizon: f64,
    level: f64,
    n_samples: usize,
    seed: u64,
    site: &SiteModel,
    priors: Option<&ClassPriors>,
    opts: &PredictOptions,
) -> Result<Forecast> {
    let band = confidence_band_with(story, made_at, &[horizon], level, n_samples, seed, site, priors, opts)?;
    let mut f = band.forecast;
    f.interval = Some(band.intervals[0]);
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hessian_of_quadratic() {
        let f = |x: [f64; 3]| -(2.0 * x[0] * x[0] + x[1] * x[1] + 0.5 * x[0] * x[1] + 3.0 * x[2] * x[2]);
        let d = hessian3(&f, [0.3, -0.2, 1.0], 1e-3);
        let want = Matrix3::new(-4.0, -0.5, 0.0, -0.5, -2.0, 0.0, 0.0, 0.0, -6.0);
        assert!((d - want).abs().max() < 1e-5, "{d}");
    }

    #[test]
    fn quantile_interpolates() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 5.0);
        assert_eq!(quantile(&xs, 0.5), 3.0);
        assert!((quantile(&xs, 0.1) - 1.4).abs() < 1e-12);
    }
}
