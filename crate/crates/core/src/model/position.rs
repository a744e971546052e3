//! Approximate list positions: recency position from story age, popularity
//! position from vote count. Positions are fractional page numbers starting
//! at 1.

use super::params::{GlobalParams, PopularityFitFront, PopularityFitUpcoming, STORIES_PER_PAGE};
use crate::dist::DoubleParetoLognormal;
use crate::error::{Error, Result};

/// Page position on the upcoming or front recency list `t` Digg hours after
/// submission. The position resets to the top at promotion.
pub fn recency_page(t: f64, t_promotion: Option<f64>, gp: &GlobalParams) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("story age must be non-negative, got {t}")));
    }
    Ok(recency_page_unchecked(t, t_promotion, gp.k_upcoming, gp.k_front))
}

#[inline]
pub(crate) fn recency_page_unchecked(t: f64, t_promotion: Option<f64>, k_upcoming: f64, k_front: f64) -> f64 {
    match t_promotion {
        Some(tp) if t >= tp => k_front * (t - tp) + 1.0,
        _ => k_upcoming * t + 1.0,
    }
}

/// Converts a 0-based list rank to a page position.
#[inline]
pub fn rank_to_page(rank: f64) -> f64 {
    1.0 + rank / STORIES_PER_PAGE
}

/// Number of front-page stories from the last 24 hours with more votes.
pub fn front_rank(v: f64, fit: &PopularityFitFront) -> f64 {
    let d = DoubleParetoLognormal {
        alpha: fit.a,
        beta: fit.b,
        nu: fit.nu,
        tau: fit.sigma,
    };
    fit.s_daily * d.sf(v)
}

/// Rank on the upcoming popularity list, `e^{c − d·v}`. Calibrated on stories
/// with more than about 100 votes; it underestimates the rank of stories with
/// few votes, which are then far too deep to matter.
pub fn upcoming_rank(v: f64, fit: &PopularityFitUpcoming) -> f64 {
    (fit.c_exp - fit.d_exp * v).exp()
}

pub fn popularity_page_front(v: f64, fit: &PopularityFitFront) -> Result<f64> {
    if !(v >= 1.0) {
        return Err(Error::domain(format!("vote count must be at least 1, got {v}")));
    }
    fit.validate()?;
    Ok(rank_to_page(front_rank(v, fit)))
}

pub fn popularity_page_upcoming(v: f64, fit: &PopularityFitUpcoming) -> Result<f64> {
    if !(v >= 1.0) {
        return Err(Error::domain(format!("vote count must be at least 1, got {v}")));
    }
    fit.validate()?;
    Ok(rank_to_page(upcoming_rank(v, fit)))
}
