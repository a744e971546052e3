//! Probability that a visiting user sees the story, per voter class.

use super::params::{GlobalParams, Phase, SiteModel, VoterClass};
use super::position::{front_rank, rank_to_page, upcoming_rank};
use super::surfing::surf_tail;
use crate::error::{Error, Result};

/// Visibility to users who are not fans of any prior voter: the story is found
/// through the recency list, the popularity list, or some other route, chosen
/// independently. Upcoming stories are further discounted by `c_nonfan`.
pub fn visibility_nonfan(t: f64, v: f64, t_promotion: Option<f64>, site: &SiteModel) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("story age must be non-negative, got {t}")));
    }
    if !(v >= 1.0) {
        return Err(Error::domain(format!("vote count must be at least 1, got {v}")));
    }
    site.validate()?;
    if let Some(tp) = t_promotion {
        if !(tp >= 0.0) {
            return Err(Error::domain(format!("promotion time must be non-negative, got {tp}")));
        }
    }
    Ok(nonfan_in_phase(t, v, t_promotion, Phase::at(t, t_promotion), site))
}

/// Non-fan visibility with the phase forced, so a caller integrating the
/// upcoming segment can evaluate the left limit at the promotion instant.
#[inline]
pub(crate) fn nonfan_in_phase(t: f64, v: f64, t_promotion: Option<f64>, phase: Phase, site: &SiteModel) -> f64 {
    let gp = &site.global;
    let v = v.max(1.0);
    let (recency, popularity) = match phase {
        Phase::Upcoming => (gp.k_upcoming * t + 1.0, rank_to_page(upcoming_rank(v, &site.popularity.upcoming))),
        Phase::Front => {
            let since = (t - t_promotion.unwrap_or(0.0)).max(0.0);
            (gp.k_front * since + 1.0, rank_to_page(front_rank(v, &site.popularity.front)))
        }
    };
    let mu = gp.surfing.mu;
    let lambda = gp.surfing.lambda;
    let miss = (1.0 - surf_tail(recency, mu, lambda)) * (1.0 - surf_tail(popularity, mu, lambda)) * (1.0 - gp.p_other);
    let seen = 1.0 - miss;
    match phase {
        Phase::Upcoming => gp.c_nonfan * seen,
        Phase::Front => seen,
    }
}

/// Visibility to fans via the friends interface: certain on the front page,
/// discounted by the class's upcoming factor before promotion.
pub fn visibility_fan(class: VoterClass, phase: Phase, gp: &GlobalParams) -> Result<f64> {
    match (class, phase) {
        (VoterClass::NonFan, _) => Err(Error::domain("non-fan visibility depends on list position")),
        (_, Phase::Front) => Ok(1.0),
        (VoterClass::SubmitterFan, Phase::Upcoming) => Ok(gp.c_submitter_fan),
        (VoterClass::OtherFan, Phase::Upcoming) => Ok(gp.c_other_fan),
    }
}

#[inline]
pub(crate) fn fan_in_phase(class: VoterClass, phase: Phase, gp: &GlobalParams) -> f64 {
    match (class, phase) {
        (_, Phase::Front) => 1.0,
        (VoterClass::SubmitterFan, Phase::Upcoming) => gp.c_submitter_fan,
        (VoterClass::OtherFan, Phase::Upcoming) => gp.c_other_fan,
        (VoterClass::NonFan, Phase::Upcoming) => gp.c_nonfan,
    }
}

/// Visibility for any class at `(t, v)`.
pub(crate) fn class_visibility(
    class: VoterClass,
    t: f64,
    v: f64,
    t_promotion: Option<f64>,
    phase: Phase,
    site: &SiteModel,
) -> f64 {
    match class {
        VoterClass::NonFan => nonfan_in_phase(t, v, t_promotion, phase, site),
        c => fan_in_phase(c, phase, &site.global),
    }
}
