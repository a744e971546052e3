//! Rank-versus-votes curves for the two popularity lists, fitted by least
//! squares on log rank. Samples with rank 0 (the list leader) carry no
//! information on the log scale and are skipped.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::position::front_rank;
use crate::model::{PopularityFitFront, PopularityFitUpcoming};
use crate::numerics::optim::{nelder_mead, NelderMead};

/// Upcoming-list samples at or below this vote count are left out of the fit.
pub const UPCOMING_MIN_VOTES: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PopularityFitReport {
    pub front: PopularityFitFront,
    pub upcoming: PopularityFitUpcoming,
    /// Root-mean-square log-rank residuals.
    pub front_rms: f64,
    pub upcoming_rms: f64,
    pub front_samples_used: usize,
    pub upcoming_samples_used: usize,
}

fn usable(samples: &[(f64, f64)], min_votes: f64) -> Vec<(f64, f64)> {
    samples
        .iter()
        .copied()
        .filter(|&(v, r)| v >= 1.0 && v > min_votes && r > 0.0 && v.is_finite() && r.is_finite())
        .collect()
}

fn distinct_votes(samples: &[(f64, f64)]) -> bool {
    samples.iter().any(|s| s.0 != samples[0].0)
}

fn front_from(x: &[f64]) -> PopularityFitFront {
    PopularityFitFront {
        s_daily: x[0].exp(),
        a: 1.0 + x[1].exp(),
        b: x[2].exp(),
        nu: x[3],
        sigma: x[4].exp(),
    }
}

fn front_sse(samples: &[(f64, f64)], fit: &PopularityFitFront) -> f64 {
    samples
        .iter()
        .map(|&(v, r)| {
            let model = front_rank(v, fit);
            if model > 0.0 {
                (r.ln() - model.ln()).powi(2)
            } else {
                f64::INFINITY
            }
        })
        .sum()
}

/// Fits `rank = S·(1 − Λ(a, b, ν, σ; v))` to front-page samples.
pub fn fit_front_curve(samples: &[(f64, f64)]) -> Result<(PopularityFitFront, f64, usize)> {
    if samples.len() < 10 {
        return Err(Error::domain(format!("front popularity fit needs at least 10 samples, got {}", samples.len())));
    }
    let data = usable(samples, 0.0);
    if data.len() < 5 || !distinct_votes(&data) {
        return Err(Error::estimation("front popularity samples are degenerate (need varied vote counts)"));
    }
    let mut logs: Vec<f64> = data.iter().map(|s| s.0.ln()).collect();
    logs.sort_by(f64::total_cmp);
    let median = logs[logs.len() / 2];
    let max_rank = data.iter().map(|s| s.1).fold(0.0, f64::max);
    let start = [(2.0 * max_rank).ln(), 0.0, 0.7, median, (0.3f64).ln()];
    let opts = NelderMead::new(vec![0.3, 0.5, 0.5, 0.3, 0.5])
        .with_bounds(vec![
            (0.0, 20.0),
            (-8.0, 4.0),
            (-6.0, 4.0),
            (-5.0, 20.0),
            (-8.0, 2.0),
        ])
        .with_tolerances(1e-13, 1e-9)
        .with_max_iter(20_000);
    let mut best = nelder_mead(|x| front_sse(&data, &front_from(x)), &start, &opts);
    // Restart from the optimum until the simplex stops finding improvements.
    for _ in 0..20 {
        let next = nelder_mead(|x| front_sse(&data, &front_from(x)), &best.x, &opts);
        let gain = best.value - next.value;
        best = if next.value < best.value { next } else { best };
        if gain <= 1e-12 * (1.0 + best.value) {
            break;
        }
    }
    if !best.value.is_finite() {
        return Err(Error::estimation("front popularity fit diverged"));
    }
    let fit = front_from(&best.x);
    Ok((fit, (best.value / data.len() as f64).sqrt(), data.len()))
}

/// Fits `rank = e^{c − d·v}` by ordinary least squares on `ln rank`, using
/// samples with more than `min_votes` votes.
pub fn fit_upcoming_curve(samples: &[(f64, f64)], min_votes: f64) -> Result<(PopularityFitUpcoming, f64, usize)> {
    if samples.len() < 10 {
        return Err(Error::domain(format!(
            "upcoming popularity fit needs at least 10 samples, got {}",
            samples.len()
        )));
    }
    let data = usable(samples, min_votes);
    if data.len() < 2 || !distinct_votes(&data) {
        return Err(Error::estimation(format!(
            "upcoming popularity samples above {min_votes} votes are degenerate"
        )));
    }
    let n = data.len() as f64;
    let mv = data.iter().map(|s| s.0).sum::<f64>() / n;
    let my = data.iter().map(|s| s.1.ln()).sum::<f64>() / n;
    let sxy: f64 = data.iter().map(|s| (s.0 - mv) * (s.1.ln() - my)).sum();
    let sxx: f64 = data.iter().map(|s| (s.0 - mv).powi(2)).sum();
    let d = -sxy / sxx;
    let c = my + d * mv;
    let rss: f64 = data.iter().map(|s| (s.1.ln() - (c - d * s.0)).powi(2)).sum();
    Ok((PopularityFitUpcoming { c_exp: c, d_exp: d }, (rss / n).sqrt(), data.len()))
}

/// Fits both popularity curves.
pub fn fit_popularity_curves(front: &[(f64, f64)], upcoming: &[(f64, f64)]) -> Result<PopularityFitReport> {
    let (f, front_rms, nf) = fit_front_curve(front)?;
    let (u, upcoming_rms, nu) = fit_upcoming_curve(upcoming, UPCOMING_MIN_VOTES)?;
    if u.d_exp < 0.0 {
        return Err(Error::estimation(format!(
            "upcoming rank grows with votes (d = {}); samples do not follow a decaying curve",
            u.d_exp
        )));
    }
    Ok(PopularityFitReport {
        front: f,
        upcoming: u,
        front_rms,
        upcoming_rms,
        front_samples_used: nf,
        upcoming_samples_used: nu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::position::upcoming_rank;

    #[test]
    fn exact_upcoming_samples_are_recovered() {
        let fit = PopularityFitUpcoming::reference();
        let s: Vec<(f64, f64)> = (0..40).map(|i| {
            let v = 90.0 + 5.0 * i as f64;
            (v, upcoming_rank(v, &fit))
        }).collect();
        let (got, rms, used) = fit_upcoming_curve(&s, UPCOMING_MIN_VOTES).unwrap();
        assert!((got.c_exp - 5.3).abs() < 1e-10 && (got.d_exp - 0.029).abs() < 1e-12);
        assert!(rms < 1e-10);
        assert_eq!(used, 37);
    }

    #[test]
    fn equal_votes_are_degenerate() {
        let s = vec![(300.0, 5.0); 20];
        assert!(matches!(fit_upcoming_curve(&s, 100.0), Err(Error::Estimation { .. })));
        assert!(matches!(fit_front_curve(&s), Err(Error::Estimation { .. })));
    }
}
