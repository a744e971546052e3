//! The model state at prediction time. Vote counts come from the data; the
//! unseen pools are not observed and are recovered from recent vote rates by
//! inverting `dv/dt = ω·r·P·pool`.

use serde::Serialize;

use crate::data::StoryRecord;
use crate::error::{Error, Result};
use crate::model::dynamics::solve_dense;
use crate::model::visibility::{fan_in_phase, nonfan_in_phase};
use crate::model::{Phase, SiteModel, StateVector, StoryParams, VoterClass};

/// Rates are measured over this many Digg hours before the prediction time...
pub const RATE_WINDOW: f64 = 0.25;
/// ...widened back to the fifth most recent vote when the window holds fewer.
pub const RATE_MIN_VOTES: usize = 5;

/// Where the unseen pools at prediction time come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum PoolSource {
    /// Invert the rate equations at the recent vote rates.
    #[default]
    VoteRates,
    /// Take the pools from the model solved from submission with the fitted
    /// `r`. Vote counts still come from the data.
    ModelTrajectory,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Reconstruction {
    pub state: StateVector,
    /// Per class: the pool came from the solved model trajectory because the
    /// vote rate (or `r·P`) was zero.
    pub fallback: [bool; 3],
    /// Per class vote rate used for the inversion.
    pub rates: [f64; 3],
}

/// Vote rate of one class just before `at` from votes in `[lower, at]`: the
/// smallest window ending at `at` that spans at least 15 minutes and holds at
/// least five votes, or everything since `lower` if there are fewer.
pub fn recent_rate(times: &[f64], lower: f64, at: f64) -> f64 {
    let inside: Vec<f64> = times.iter().copied().filter(|&t| t >= lower && t <= at).collect();
    let span = at - lower;
    if !(span > 0.0) {
        return 0.0;
    }
    let mut start = (at - RATE_WINDOW).max(lower);
    let in_window = inside.iter().filter(|&&t| t >= start).count();
    if in_window < RATE_MIN_VOTES {
        start = if inside.len() >= RATE_MIN_VOTES {
            inside[inside.len() - RATE_MIN_VOTES].min(start)
        } else {
            lower
        };
    }
    let width = at - start;
    if !(width > 0.0) {
        return 0.0;
    }
    inside.iter().filter(|&&t| t >= start).count() as f64 / width
}

/// Reconstructs the state at `at` Digg hours after submission. After
/// promotion only front-page votes are used for the rates, so the visibility
/// jump at promotion never falls inside the rate window.
pub fn reconstruct_state(story: &StoryRecord, at: f64, sp: &StoryParams, site: &SiteModel) -> Result<Reconstruction> {
    reconstruct_with(story, at, sp, site, PoolSource::VoteRates)
}

pub fn reconstruct_with(
    story: &StoryRecord,
    at: f64,
    sp: &StoryParams,
    site: &SiteModel,
    source: PoolSource,
) -> Result<Reconstruction> {
    site.validate()?;
    if story.votes.is_empty() {
        return Err(Error::domain(format!("story {} has no votes", story.id)));
    }
    if !(at >= 0.0 && at.is_finite()) {
        return Err(Error::domain(format!("reconstruction time must be non-negative, got {at}")));
    }
    let counts = story.counts_at(at);
    let gp = &site.global;
    let (phase, lower) = match story.t_promotion {
        Some(tp) if at > tp => (Phase::Front, tp),
        _ => (Phase::Upcoming, 0.0),
    };
    let v_total = counts.iter().sum::<u64>() as f64;

    let mut pools = [0.0; 3];
    let mut rates = [0.0; 3];
    let mut fallback = [false; 3];
    let mut from_model = [false; 3];
    for class in VoterClass::ALL {
        let i = class.index();
        let times: Vec<f64> = story
            .votes
            .iter()
            .skip(1)
            .filter(|e| e.class == class)
            .map(|e| e.time)
            .collect();
        rates[i] = recent_rate(&times, lower, at);
        let vis = match class {
            VoterClass::NonFan => nonfan_in_phase(at, v_total, story.t_promotion, phase, site),
            c => fan_in_phase(c, phase, gp),
        };
        let denom = gp.omega * sp.r(class) * vis;
        match source {
            PoolSource::VoteRates if rates[i] > 0.0 && denom > 0.0 => pools[i] = rates[i] / denom,
            PoolSource::VoteRates => {
                fallback[i] = true;
                from_model[i] = true;
            }
            PoolSource::ModelTrajectory => from_model[i] = true,
        }
    }
    if from_model.iter().any(|&f| f) {
        let init = StateVector::initial(sp.s0, gp.users);
        let solved = solve_dense(&init, 0.0, at, sp, site)?.eval(at);
        for class in VoterClass::ALL {
            if from_model[class.index()] {
                pools[class.index()] = solved.pool(class);
            }
        }
    }
    let state = StateVector {
        v_s: counts[0] as f64,
        v_f: counts[1] as f64,
        v_n: counts[2] as f64,
        s: pools[0].clamp(0.0, sp.s0 as f64),
        f: pools[1].clamp(0.0, gp.users),
        n: pools[2].clamp(0.0, gp.users),
    };
    Ok(Reconstruction { state, fallback, rates })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_window_rules() {
        // Plenty of votes in the last quarter hour.
        let dense: Vec<f64> = (0..20).map(|i| 0.8 + 0.01 * i as f64).collect();
        assert!((recent_rate(&dense, 0.0, 1.0) - 20.0 / 0.25).abs() < 1e-12);
        // Too few: widen back to the fifth most recent vote.
        let sparse = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        assert!((recent_rate(&sparse, 0.0, 1.0) - 5.0 / 0.8).abs() < 1e-12);
        // Fewer than five in total: everything since the lower bound.
        assert!((recent_rate(&[0.5, 0.9], 0.0, 1.0) - 2.0).abs() < 1e-12);
        assert_eq!(recent_rate(&[], 0.0, 1.0), 0.0);
        // Votes before the lower bound are ignored.
        assert!((recent_rate(&[0.1, 0.2, 1.5], 1.0, 2.0) - 1.0).abs() < 1e-12);
    }
}
