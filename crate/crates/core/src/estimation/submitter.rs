//! Visit rate `ω` and the upcoming discount `c_S` from submitter-fan votes.
//!
//! Submitter fans see the story with probability `c_S` per visit before
//! promotion and 1 after, so the unseen pool is `S(t) = S0·e^{−ω A(t)}` with
//! `A(t) = c_S·min(t, T_p) + max(0, t − T_p)`. Each story's `r_S` has the
//! closed-form profile `n / (S0·(1 − e^{−ω A(T)}))`.

use serde::Serialize;

use super::site::{profile_rate, RateEstimate};
use crate::data::StoryRecord;
use crate::error::{Error, Result};
use crate::model::VoterClass;
use crate::numerics::optim::{nelder_mead, NelderMead};

#[derive(Debug, Clone, Serialize)]
pub struct SubmitterFit {
    pub omega: f64,
    pub c_submitter_fan: f64,
    pub r_submitter_fan: Vec<RateEstimate>,
    pub log_likelihood: f64,
    pub iterations: usize,
}

struct Prepared {
    id: u64,
    s0: f64,
    tp: f64,
    end: f64,
    times: Vec<f64>,
}

fn exposure_time(t: f64, tp: f64, c: f64) -> f64 {
    c * t.min(tp) + (t - tp).max(0.0)
}

fn story_loglik(p: &Prepared, omega: f64, c: f64) -> (f64, f64, f64) {
    let g = p.s0 * (1.0 - (-omega * exposure_time(p.end, p.tp, c)).exp());
    let mut log_sum = 0.0;
    for &t in &p.times {
        let vis = if t >= p.tp { 1.0 } else { c };
        log_sum += (omega * vis * p.s0).ln() - omega * exposure_time(t, p.tp, c);
    }
    let n = p.times.len();
    let (r, _) = profile_rate(n, g);
    (n as f64 * r.ln() + log_sum - r * g, g, log_sum)
}

/// Joint maximum likelihood of `(ω, c_S)` over promoted stories observed up to
/// `window` hours after promotion.
pub fn fit_submitter(stories: &[StoryRecord], window: f64) -> Result<SubmitterFit> {
    if !(window > 0.0) {
        return Err(Error::domain(format!("fit window must be positive, got {window}")));
    }
    let prepared: Vec<Prepared> = stories
        .iter()
        .filter(|s| s.s0 > 0)
        .filter_map(|s| {
            let tp = s.t_promotion?;
            let end = tp + window;
            let times = s
                .votes
                .iter()
                .skip(1)
                .filter(|e| e.class == VoterClass::SubmitterFan && e.time <= end)
                .map(|e| e.time)
                .collect();
            Some(Prepared {
                id: s.id,
                s0: s.s0 as f64,
                tp,
                end,
                times,
            })
        })
        .collect();
    let votes: usize = prepared.iter().map(|p| p.times.len()).sum();
    if prepared.len() < 2 || votes == 0 {
        return Err(Error::domain(format!(
            "submitter-fan fit needs promoted stories with fans and votes ({} stories, {votes} votes)",
            prepared.len()
        )));
    }
    let objective = |x: &[f64]| {
        let omega = x[0].exp();
        let c = 1.0 / (1.0 + (-x[1]).exp());
        -prepared.iter().map(|p| story_loglik(p, omega, c).0).sum::<f64>()
    };
    let nm = NelderMead::new(vec![0.5, 1.0])
        .with_bounds(vec![(-10.0, 5.0), (-12.0, 12.0)])
        .with_tolerances(1e-10, 1e-8)
        .with_max_iter(2000);
    let mut best = nelder_mead(objective, &[(0.2f64).ln(), 0.0], &nm);
    let mut iterations = best.iterations;
    let again = nelder_mead(objective, &best.x, &nm);
    iterations += again.iterations;
    if again.value < best.value {
        best = again;
    }
    let omega = best.x[0].exp();
    let c = 1.0 / (1.0 + (-best.x[1]).exp());
    if !best.value.is_finite() || !best.converged {
        return Err(Error::Estimation {
            message: format!("submitter-fan fit did not converge in {iterations} iterations"),
            best: Some(vec![omega, c]),
        });
    }
    let r_submitter_fan = prepared
        .iter()
        .map(|p| {
            let (_, g, _) = story_loglik(p, omega, c);
            let (r, clamped) = profile_rate(p.times.len(), g);
            RateEstimate { story: p.id, r, clamped }
        })
        .collect();
    Ok(SubmitterFit {
        omega,
        c_submitter_fan: c,
        r_submitter_fan,
        log_likelihood: -best.value,
        iterations,
    })
}
