//! Per-story interestingness `(r_S, r_F, r_N)` by maximum likelihood or, with
//! lognormal priors, maximum a posteriori. The coupled rate equations are
//! re-solved for every trial point because the visibility of the story and
//! the pool of other fans depend on the votes accumulated so far.

use serde::Serialize;

use super::likelihood::LogLik;
use super::site::{R_MAX, R_MIN};
use crate::data::StoryRecord;
use crate::dist::LogNormal;
use crate::error::{Error, Result};
use crate::model::dynamics::{solve_dense, solve_dense_with, SOLVER};
use crate::numerics::ode::Dopri5;
use crate::model::{SiteModel, StateVector, StoryParams, VoterClass};
use crate::numerics::optim::{nelder_mead, NelderMead};

/// Per-class priors on `r`, in class order (submitter fans, other fans,
/// non-fans).
pub type ClassPriors = [LogNormal; 3];

#[derive(Debug, Clone, Serialize)]
pub struct StoryFit {
    pub params: StoryParams,
    /// Classes whose estimate sits on the `[R_MIN, R_MAX]` boundary.
    pub at_boundary: [bool; 3],
    /// Class log-likelihoods at the estimate.
    pub log_likelihood: [f64; 3],
    /// Objective at the estimate: log-likelihood plus log prior density of
    /// `ln r`, when priors are used.
    pub objective: f64,
    pub evaluations: usize,
}

/// Class-wise Poisson log-likelihoods of the votes in `(0, upto]` under the
/// mean-field model with parameters `sp`.
pub fn class_logliks(story: &StoryRecord, sp: &StoryParams, site: &SiteModel, upto: f64) -> Result<[LogLik; 3]> {
    class_logliks_with(&SOLVER, story, sp, site, upto)
}

pub(crate) fn class_logliks_with(
    solver: &Dopri5,
    story: &StoryRecord,
    sp: &StoryParams,
    site: &SiteModel,
    upto: f64,
) -> Result<[LogLik; 3]> {
    let init = StateVector::initial(sp.s0, site.global.users);
    let dense = solve_dense_with(solver, &init, 0.0, upto, &[], sp, site)?;
    let end = dense.end();
    let mut out = [LogLik {
        value: 0.0,
        zero_rate_events: 0,
    }; 3];
    for class in VoterClass::ALL {
        out[class.index()].value = -(end.votes(class) - init.votes(class));
    }
    for (t, class) in story.stream(upto).events {
        let rate = dense.rates(t, sp, site).votes(class);
        let slot = &mut out[class.index()];
        if rate > 0.0 && rate.is_finite() {
            slot.value += rate.ln();
        } else {
            slot.zero_rate_events += 1;
        }
    }
    for slot in &mut out {
        if slot.zero_rate_events > 0 {
            slot.value = f64::NEG_INFINITY;
        }
    }
    Ok(out)
}

/// Log-likelihood plus, with priors, the log prior density of each `ln r`.
/// A failed solve counts as `−∞`.
pub(crate) fn log_posterior(
    solver: &Dopri5,
    story: &StoryRecord,
    r: [f64; 3],
    site: &SiteModel,
    priors: Option<&ClassPriors>,
    upto: f64,
) -> f64 {
    let Ok(ll) = class_logliks_with(solver, story, &with_r(story, r), site, upto) else {
        return f64::NEG_INFINITY;
    };
    let mut total: f64 = ll.iter().map(|l| l.value).sum();
    if let Some(p) = priors {
        for i in 0..3 {
            total += p[i].ln_pdf_of_log(r[i].ln());
        }
    }
    total
}

pub(crate) fn with_r(story: &StoryRecord, r: [f64; 3]) -> StoryParams {
    StoryParams {
        r_submitter_fan: r[0],
        r_other_fan: r[1],
        r_nonfan: r[2],
        s0: story.s0,
        t_promotion: story.t_promotion,
    }
}

/// Estimates the story's interestingness from votes up to `upto` Digg hours
/// after submission.
pub fn fit_story_interest(
    story: &StoryRecord,
    site: &SiteModel,
    priors: Option<&ClassPriors>,
    upto: f64,
) -> Result<StoryFit> {
    site.validate()?;
    if story.votes.is_empty() {
        return Err(Error::domain(format!("story {} has no votes", story.id)));
    }
    if !(upto > 0.0 && upto.is_finite()) {
        return Err(Error::domain(format!("fit horizon must be positive, got {upto}")));
    }
    let stream = story.stream(upto);
    let counts = VoterClass::ALL.map(|c| stream.count(c));
    let lo = R_MIN.ln();
    let hi = R_MAX.ln();

    // Without a prior, a class with no votes has its likelihood maximized at
    // the lower boundary; fix it there and search the rest.
    let fixed: [bool; 3] = std::array::from_fn(|i| priors.is_none() && counts[i] == 0);
    let free: Vec<usize> = (0..3).filter(|&i| !fixed[i]).collect();

    let mut start = match priors {
        Some(p) => p.map(|d| d.mu_log.exp()),
        None => [0.03, 0.1, 0.002],
    };
    for i in 0..3 {
        if fixed[i] {
            start[i] = R_MIN;
        }
    }
    // Rescale the start so the model reproduces the observed counts once.
    let init = StateVector::initial(story.s0, site.global.users);
    if let Ok(dense) = solve_dense(&init, 0.0, upto, &with_r(story, start), site) {
        let end = dense.end();
        for &i in &free {
            let class = VoterClass::ALL[i];
            let expected = end.votes(class) - init.votes(class);
            if counts[i] > 0 && expected > 0.0 {
                start[i] = (start[i] * counts[i] as f64 / expected).clamp(1e-6, R_MAX);
            }
        }
    }

    let mut evaluations = 0usize;
    let mut objective = |x: &[f64]| -> f64 {
        evaluations += 1;
        let mut r = [0.0; 3];
        let mut k = 0;
        for i in 0..3 {
            r[i] = if fixed[i] {
                R_MIN
            } else {
                k += 1;
                x[k - 1].exp()
            };
        }
        -log_posterior(&SOLVER, story, r, site, priors, upto)
    };

    let (x, value) = if free.is_empty() {
        (Vec::new(), objective(&[]))
    } else {
        let x0: Vec<f64> = free.iter().map(|&i| start[i].ln().clamp(lo, hi)).collect();
        let nm = NelderMead::new(vec![0.7; free.len()])
            .with_bounds(vec![(lo, hi); free.len()])
            .with_tolerances(1e-9, 1e-6)
            .with_max_iter(1500);
        let mut best = nelder_mead(&mut objective, &x0, &nm);
        let again = nelder_mead(&mut objective, &best.x, &nm);
        if again.value < best.value {
            best = again;
        }
        if !best.value.is_finite() {
            return Err(Error::Estimation {
                message: format!("likelihood of story {} is not finite anywhere on the search path", story.id),
                best: Some(best.x.iter().map(|v| v.exp()).collect()),
            });
        }
        (best.x, best.value)
    };

    let mut r = [R_MIN; 3];
    let mut at_boundary = fixed;
    for (k, &i) in free.iter().enumerate() {
        r[i] = x[k].exp().clamp(R_MIN, R_MAX);
        at_boundary[i] = x[k] <= lo + 1e-6 || x[k] >= hi - 1e-6;
    }
    let params = with_r(story, r);
    let ll = class_logliks(story, &params, site, upto)?;
    Ok(StoryFit {
        params,
        at_boundary,
        log_likelihood: ll.map(|l| l.value),
        objective: -value,
        evaluations,
    })
}
