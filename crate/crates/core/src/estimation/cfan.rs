//! Upcoming discount for fans of voters other than the submitter, from the
//! change in their vote rate across promotion.

use serde::Serialize;

use crate::data::StoryRecord;
use crate::error::{Error, Result};
use crate::model::{GlobalParams, VoterClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CfanMethod {
    /// Votes per hour in the hour before promotion over votes per hour in the
    /// hour after.
    RawRates,
    /// Same windows, with each vote count divided by the time-integrated pool
    /// of other fans rebuilt along the observed votes. Corrects for the pool
    /// growing quickly once non-fans start voting on the front page.
    PoolAdjusted,
}

/// Aggregate counts and exposures in the two windows.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PromotionWindows {
    pub votes_before: u64,
    pub votes_after: u64,
    pub exposure_before: f64,
    pub exposure_after: f64,
}

impl PromotionWindows {
    pub fn ratio(&self) -> Result<f64> {
        if self.votes_after == 0 {
            return Err(Error::estimation("no other-fan votes in the hour after promotion"));
        }
        if self.votes_before == 0 {
            return Ok(0.0);
        }
        let before = self.votes_before as f64 / self.exposure_before;
        let after = self.votes_after as f64 / self.exposure_after;
        Ok((before / after).clamp(0.0, 1.0))
    }
}

/// Integral of `F` over the hour on each side of promotion, with `F` gaining
/// `ρ·N` at every vote and draining at `ω·c` (upcoming) or `ω` (front page).
fn pool_exposure(story: &StoryRecord, tp: f64, c: f64, gp: &GlobalParams) -> (f64, f64) {
    let (lo, hi) = ((tp - 1.0).max(0.0), tp + 1.0);
    let mut f = 0.0;
    let mut n = (gp.users - story.s0 as f64 - 1.0).max(0.0);
    let mut cur = 0.0;
    let (mut before, mut after) = (0.0, 0.0);
    // Integrates F from `cur` to `t`, splitting at the window edges.
    let mut advance = |f: &mut f64, cur: &mut f64, t: f64| {
        let cuts = [lo, tp, hi];
        while *cur < t {
            let next = cuts.iter().copied().find(|&x| x > *cur).unwrap_or(f64::INFINITY).min(t);
            let k = gp.omega * if *cur >= tp { 1.0 } else { c };
            let dt = next - *cur;
            let area = if k > 0.0 { *f * (-(-k * dt).exp_m1()) / k } else { *f * dt };
            if *cur >= lo && next <= tp {
                before += area;
            } else if *cur >= tp && next <= hi {
                after += area;
            }
            *f *= (-k * dt).exp();
            *cur = next;
        }
    };
    for e in story.votes.iter().skip(1).take_while(|e| e.time <= hi) {
        advance(&mut f, &mut cur, e.time);
        let recruited = gp.rho * n;
        f += recruited;
        n -= recruited;
    }
    advance(&mut f, &mut cur, hi);
    (before, after)
}

fn tally(stories: &[StoryRecord], method: CfanMethod, c: f64, gp: &GlobalParams) -> PromotionWindows {
    let mut w = PromotionWindows::default();
    for s in stories {
        let Some(tp) = s.t_promotion else { continue };
        let lo = (tp - 1.0).max(0.0);
        for e in s.votes.iter().skip(1).filter(|e| e.class == VoterClass::OtherFan) {
            if e.time >= lo && e.time < tp {
                w.votes_before += 1;
            } else if e.time >= tp && e.time < tp + 1.0 {
                w.votes_after += 1;
            }
        }
        let (eb, ea) = match method {
            CfanMethod::RawRates => (tp - lo, 1.0),
            CfanMethod::PoolAdjusted => pool_exposure(s, tp, c, gp),
        };
        w.exposure_before += eb;
        w.exposure_after += ea;
    }
    w
}

/// Estimates `c_F` over promoted stories. The pool-adjusted method depends on
/// `c_F` itself through the upcoming drain of the pool, so it is iterated to a
/// fixed point.
pub fn estimate_cfan(stories: &[StoryRecord], method: CfanMethod, gp: &GlobalParams) -> Result<f64> {
    if !stories.iter().any(|s| s.is_promoted()) {
        return Err(Error::domain("other-fan discount needs promoted stories"));
    }
    let mut c = tally(stories, method, gp.c_other_fan, gp).ratio()?;
    if method == CfanMethod::PoolAdjusted {
        for _ in 0..50 {
            let next = tally(stories, method, c, gp).ratio()?;
            let done = (next - c).abs() < 1e-10;
            c = next;
            if done {
                break;
            }
        }
    }
    Ok(c)
}

pub fn promotion_windows(stories: &[StoryRecord], method: CfanMethod, gp: &GlobalParams) -> PromotionWindows {
    tally(stories, method, gp.c_other_fan, gp)
}
