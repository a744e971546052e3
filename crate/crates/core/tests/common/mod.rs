//! Oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use storyvotes::dist::LogNormal;
use storyvotes::model::StoryParams;

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    assert!(n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Inverse-Gaussian density with mean `mu` and shape `lambda`.
pub fn ig_density(x: f64, mu: f64, lambda: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    (lambda / (2.0 * PI * x.powi(3))).sqrt() * (-lambda * (x - mu).powi(2) / (2.0 * mu * mu * x)).exp()
}

/// `P(X > depth)` for the inverse-Gaussian law, by quadrature of the density.
/// The mass beyond `depth` is obtained as one minus the mass below it, which
/// keeps the integration range finite.
pub fn ig_tail(depth: f64, mu: f64, lambda: f64) -> f64 {
    if depth <= 0.0 {
        return 1.0;
    }
    // The density is flat near zero, so a fine uniform grid converges fast.
    1.0 - simpson(|x| ig_density(x, mu, lambda), 0.0, depth, 200_000)
}

pub fn table_priors() -> [LogNormal; 3] {
    [
        LogNormal::new(-3.5, 0.8).unwrap(),
        LogNormal::new(-2.3, 0.3).unwrap(),
        LogNormal::new(-6.3, 0.6).unwrap(),
    ]
}

pub fn story(r: [f64; 3], s0: u32, t_promotion: Option<f64>) -> StoryParams {
    StoryParams {
        r_submitter_fan: r[0],
        r_other_fan: r[1],
        r_nonfan: r[2],
        s0,
        t_promotion,
    }
}

pub fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// A story whose first vote is the submitter's at time 0, followed by
/// `votes` from distinct users. Wall time is one second per Digg second.
pub fn record(
    id: storyvotes::data::StoryId,
    s0: u32,
    t_promotion: Option<f64>,
    votes: &[(f64, storyvotes::model::VoterClass)],
) -> storyvotes::data::StoryRecord {
    use storyvotes::data::{StoryRecord, VoteEvent};
    use storyvotes::model::VoterClass;
    let submitter = id * 1_000_000;
    let mut events = vec![VoteEvent {
        voter: submitter,
        wall_time: 0.0,
        time: 0.0,
        class: VoterClass::NonFan,
    }];
    for (i, &(time, class)) in votes.iter().enumerate() {
        events.push(VoteEvent {
            voter: submitter + 1 + i as u64,
            wall_time: time * 3600.0,
            time,
            class,
        });
    }
    StoryRecord {
        id,
        submitter,
        submitted_wall: 0.0,
        origin: 0.0,
        promotion_wall: t_promotion.map(|t| t * 3600.0),
        t_promotion,
        s0,
        votes: events,
    }
}

/// Evenly spaced vote times in `(a, b)`.
pub fn spaced(a: f64, b: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| a + (b - a) * i as f64 / (n + 1) as f64).collect()
}
