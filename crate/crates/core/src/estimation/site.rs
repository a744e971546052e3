//! Joint fit of the page-browsing law and the "other means" probability from
//! front-page non-fan votes, with each story's non-fan interestingness
//! profiled out in closed form.
//!
//! Between two consecutive votes the vote count `v` is fixed, so the non-fan
//! visibility integrates to
//!
//! ```text
//! ∫ P_N dt = (b − a) − (1 − P_o)·(1 − F(p_pop(v)))·(Φ(b) − Φ(a)),   Φ(s) = ∫_0^s 1 − F(k_f u + 1) du
//! ```
//!
//! and Φ is tabulated once per parameter value.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{StoryId, StoryRecord};
use crate::error::{Error, Result};
use crate::model::position::{front_rank, rank_to_page, upcoming_rank};
use crate::model::surfing::surf_tail;
use crate::model::{SiteModel, SurfingParams, VoterClass};
use crate::numerics::optim::{nelder_mead, NelderMead};
use crate::numerics::quad::{integrate, QuadOptions};

/// Smallest and largest interestingness an estimator reports.
pub const R_MIN: f64 = 1e-8;
pub const R_MAX: f64 = 1.0;

/// How the pool of non-fans who have not yet seen the story is approximated
/// during the front-page window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PoolApproximation {
    /// `N(t) ≈ U`.
    ConstantUsers,
    /// `N` is carried along the observed vote path: it shrinks as users see
    /// the story and as voters' fans are drawn out of it.
    ObservedPath,
}

#[derive(Debug, Clone)]
pub struct SiteFitOptions {
    /// Length of the fit window after promotion, Digg hours.
    pub window: f64,
    pub pool: PoolApproximation,
    /// Starting `(μ, λ, P_other)`.
    pub start: (f64, f64, f64),
    pub max_iter: usize,
}

impl Default for SiteFitOptions {
    fn default() -> Self {
        Self {
            window: 24.0,
            pool: PoolApproximation::ObservedPath,
            start: (1.0, 1.0, 0.1),
            max_iter: 3000,
        }
    }
}

/// An interestingness estimate; `clamped` marks one pinned to `[R_MIN, R_MAX]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateEstimate {
    pub story: StoryId,
    pub r: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SiteFit {
    pub surfing: SurfingParams,
    pub p_other: f64,
    pub r_nonfan: Vec<RateEstimate>,
    pub log_likelihood: f64,
    /// Best log-likelihood after each optimizer iteration.
    pub trace: Vec<f64>,
    pub iterations: usize,
}

/// A stretch of constant vote count inside the fit window, in time since
/// promotion. A non-fan vote at the end of the piece is an event.
#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    v: u32,
    event: bool,
}

#[derive(Debug, Clone)]
struct Prepared {
    id: StoryId,
    pieces: Vec<Piece>,
    events: usize,
    /// Unseen non-fans at promotion.
    pool0: f64,
}

fn prepare(story: &StoryRecord, window: f64, site: &SiteModel, pool: PoolApproximation) -> Option<Prepared> {
    let tp = story.t_promotion?;
    let end = tp + window;
    let mut v = story.votes.iter().filter(|e| e.time < tp).count() as u32;
    let gp = &site.global;
    let pool0 = match pool {
        PoolApproximation::ConstantUsers => gp.users,
        PoolApproximation::ObservedPath => {
            let fans = story.s0 as f64;
            ((gp.users - fans - 1.0) * (-gp.rho * (v as f64 - 1.0)).exp()).max(0.0)
        }
    };
    let mut pieces = Vec::new();
    let mut cur = 0.0;
    let mut events = 0;
    for e in story.votes.iter().filter(|e| e.time >= tp && e.time <= end) {
        let s = e.time - tp;
        let event = e.class == VoterClass::NonFan;
        events += event as usize;
        pieces.push(Piece { a: cur, b: s, v: v.max(1), event });
        v += 1;
        cur = s;
    }
    pieces.push(Piece {
        a: cur,
        b: window,
        v: v.max(1),
        event: false,
    });
    Some(Prepared {
        id: story.id,
        pieces,
        events,
        pool0,
    })
}

/// `Φ(s) = ∫_0^s (1 − F(k u + 1)) du` on a uniform grid, with cubic Hermite
/// interpolation between nodes.
struct PhiTable {
    h: f64,
    phi: Vec<f64>,
    miss: Vec<f64>,
    k: f64,
    mu: f64,
    lambda: f64,
}

impl PhiTable {
    fn new(k: f64, mu: f64, lambda: f64, span: f64, cells: usize) -> Self {
        let h = span / cells as f64;
        let miss_at = |s: f64| 1.0 - surf_tail(k * s + 1.0, mu, lambda);
        let g = (0.6f64).sqrt();
        let mut phi = Vec::with_capacity(cells + 1);
        let mut miss = Vec::with_capacity(cells + 1);
        let mut acc = 0.0;
        phi.push(0.0);
        miss.push(miss_at(0.0));
        for i in 0..cells {
            let m = (i as f64 + 0.5) * h;
            let half = 0.5 * h;
            acc += half * (5.0 / 9.0 * miss_at(m - g * half) + 8.0 / 9.0 * miss_at(m) + 5.0 / 9.0 * miss_at(m + g * half));
            phi.push(acc);
            miss.push(miss_at((i + 1) as f64 * h));
        }
        Self { h, phi, miss, k, mu, lambda }
    }

    fn miss_at(&self, s: f64) -> f64 {
        1.0 - surf_tail(self.k * s + 1.0, self.mu, self.lambda)
    }

    fn eval(&self, s: f64) -> f64 {
        let last = self.phi.len() - 1;
        let x = (s / self.h).max(0.0);
        let i = (x.floor() as usize).min(last - 1);
        let u = (x - i as f64).min(1.0);
        let (p0, p1) = (self.phi[i], self.phi[i + 1]);
        let (m0, m1) = (self.miss[i] * self.h, self.miss[i + 1] * self.h);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * p0 + (u3 - 2.0 * u2 + u) * m0 + (-2.0 * u3 + 3.0 * u2) * p1 + (u3 - u2) * m1
    }
}

/// Per-story profile term: the exposure `G` (expected votes at `r = 1`) and the
/// sum of log intensities at events, both without `r`.
fn story_terms(p: &Prepared, table: &PhiTable, popular_miss: &[f64], p_other: f64, site: &SiteModel, pool: PoolApproximation) -> (f64, f64) {
    let gp = &site.global;
    let omega = gp.omega;
    let shrink = (-gp.rho).exp();
    let mut n = p.pool0;
    let mut exposure = 0.0;
    let mut log_sum = 0.0;
    for piece in p.pieces.iter() {
        let b_miss = popular_miss[piece.v as usize];
        let seen_integral = (piece.b - piece.a) - (1.0 - p_other) * b_miss * (table.eval(piece.b) - table.eval(piece.a));
        let seen_integral = seen_integral.max(0.0);
        let n_end = match pool {
            PoolApproximation::ConstantUsers => {
                exposure += omega * n * seen_integral;
                n
            }
            PoolApproximation::ObservedPath => {
                let decay = (-omega * seen_integral).exp();
                exposure += n * (1.0 - decay);
                n * decay
            }
        };
        if piece.event {
            let p_n = 1.0 - table.miss_at(piece.b) * b_miss * (1.0 - p_other);
            log_sum += (omega * p_n * n_end).ln();
        }
        n = match pool {
            PoolApproximation::ConstantUsers => n,
            PoolApproximation::ObservedPath => n_end * shrink,
        };
    }
    (exposure, log_sum)
}

/// Profile maximum of `n ln r − r G` over `r ∈ [R_MIN, R_MAX]`.
pub(crate) fn profile_rate(n: usize, exposure: f64) -> (f64, bool) {
    if !(exposure > 0.0) {
        return (if n == 0 { R_MIN } else { R_MAX }, true);
    }
    let raw = n as f64 / exposure;
    let r = raw.clamp(R_MIN, R_MAX);
    (r, r != raw)
}

fn profiled(n: usize, exposure: f64, log_sum: f64) -> f64 {
    let (r, _) = profile_rate(n, exposure);
    n as f64 * r.ln() + log_sum - r * exposure
}

struct SiteObjective<'a> {
    stories: Vec<Prepared>,
    site: &'a SiteModel,
    pool: PoolApproximation,
    window: f64,
    front_pages: Vec<f64>,
}

impl SiteObjective<'_> {
    fn tables(&self, mu: f64, lambda: f64) -> (PhiTable, Vec<f64>) {
        let cells = ((self.window / 0.01).ceil() as usize).max(16);
        let table = PhiTable::new(self.site.global.k_front, mu, lambda, self.window, cells);
        let popular_miss = self.front_pages.iter().map(|&m| 1.0 - surf_tail(m, mu, lambda)).collect();
        (table, popular_miss)
    }

    fn terms(&self, mu: f64, lambda: f64, p_other: f64) -> Vec<(f64, f64)> {
        let (table, popular_miss) = self.tables(mu, lambda);
        self.stories
            .par_iter()
            .map(|p| story_terms(p, &table, &popular_miss, p_other, self.site, self.pool))
            .collect()
    }

    fn loglik(&self, mu: f64, lambda: f64, p_other: f64) -> f64 {
        let terms = self.terms(mu, lambda, p_other);
        self.stories
            .iter()
            .zip(&terms)
            .map(|(p, &(g, l))| profiled(p.events, g, l))
            .sum()
    }
}

fn decode(x: &[f64]) -> (f64, f64, f64) {
    (x[0].exp(), x[1].exp(), 1.0 / (1.0 + (-x[2]).exp()))
}

/// Maximum-likelihood `(μ, λ, P_other)` and per-story `r_N` from the non-fan
/// votes of promoted stories in the window after promotion.
pub fn fit_site_visibility(stories: &[StoryRecord], site: &SiteModel, opts: &SiteFitOptions) -> Result<SiteFit> {
    site.validate()?;
    if !(opts.window > 0.0) {
        return Err(Error::domain(format!("fit window must be positive, got {}", opts.window)));
    }
    let objective = objective_for(stories, site, opts);
    if objective.stories.len() < 2 {
        return Err(Error::domain(format!(
            "site visibility fit needs at least 2 promoted stories, got {}",
            objective.stories.len()
        )));
    }
    if objective.stories.iter().all(|p| p.events == 0) {
        return Err(Error::domain("no non-fan votes after promotion in any story"));
    }

    let (mu0, l0, p0) = opts.start;
    if !(mu0 > 0.0 && l0 > 0.0 && p0 > 0.0 && p0 < 1.0) {
        return Err(Error::domain(format!("invalid starting point ({mu0}, {l0}, {p0})")));
    }
    let x0 = [mu0.ln(), l0.ln(), (p0 / (1.0 - p0)).ln()];
    let nm = NelderMead::new(vec![0.4, 0.4, 0.8])
        .with_bounds(vec![(-5.0, 5.0), (-6.0, 6.0), (-12.0, 6.0)])
        .with_tolerances(1e-9, 1e-7)
        .with_max_iter(opts.max_iter);
    let f = |x: &[f64]| {
        let (mu, lambda, po) = decode(x);
        -objective.loglik(mu, lambda, po)
    };
    let mut best = nelder_mead(f, &x0, &nm);
    let mut trace: Vec<f64> = best.trace.iter().map(|v| -v).collect();
    let mut iterations = best.iterations;
    // Restart from the optimum to escape a collapsed simplex.
    for _ in 0..3 {
        let next = nelder_mead(f, &best.x, &nm);
        iterations += next.iterations;
        let floor = -best.value;
        trace.extend(next.trace.iter().map(|v| (-v).max(floor)));
        let gain = best.value - next.value;
        if next.value < best.value {
            best = next;
        }
        if gain <= 1e-9 * (1.0 + best.value.abs()) {
            break;
        }
    }
    let (mu, lambda, p_other) = decode(&best.x);
    if !best.value.is_finite() || !best.converged {
        return Err(Error::Estimation {
            message: format!("site visibility fit did not converge in {iterations} iterations"),
            best: Some(vec![mu, lambda, p_other]),
        });
    }
    let terms = objective.terms(mu, lambda, p_other);
    let r_nonfan = objective
        .stories
        .iter()
        .zip(&terms)
        .map(|(p, &(g, _))| {
            let (r, clamped) = profile_rate(p.events, g);
            RateEstimate { story: p.id, r, clamped }
        })
        .collect();
    Ok(SiteFit {
        surfing: SurfingParams { mu, lambda },
        p_other,
        r_nonfan,
        log_likelihood: -best.value,
        trace,
        iterations,
    })
}

fn objective_for<'a>(stories: &[StoryRecord], site: &'a SiteModel, opts: &SiteFitOptions) -> SiteObjective<'a> {
    let prepared: Vec<Prepared> = stories
        .iter()
        .filter_map(|s| prepare(s, opts.window, site, opts.pool))
        .collect();
    let max_v = prepared
        .iter()
        .flat_map(|p| p.pieces.iter().map(|x| x.v as usize))
        .max()
        .unwrap_or(1);
    let front_pages = (0..=max_v)
        .map(|v| rank_to_page(front_rank((v as f64).max(1.0), &site.popularity.front)))
        .collect();
    SiteObjective {
        stories: prepared,
        site,
        pool: opts.pool,
        window: opts.window,
        front_pages,
    }
}

/// Log-likelihood of the site fit at a given point, with every `r_N` profiled.
pub fn site_loglik(
    stories: &[StoryRecord],
    site: &SiteModel,
    surfing: SurfingParams,
    p_other: f64,
    opts: &SiteFitOptions,
) -> Result<f64> {
    surfing.validate()?;
    Ok(objective_for(stories, site, opts).loglik(surfing.mu, surfing.lambda, p_other))
}

/// Profile estimates of each story's `r_N` at the visibility already in `site`.
pub fn profile_nonfan_rates(stories: &[StoryRecord], site: &SiteModel, opts: &SiteFitOptions) -> Result<Vec<RateEstimate>> {
    site.validate()?;
    let g = &site.global;
    let objective = objective_for(stories, site, opts);
    let terms = objective.terms(g.surfing.mu, g.surfing.lambda, g.p_other);
    Ok(objective
        .stories
        .iter()
        .zip(&terms)
        .map(|(p, &(g, _))| {
            let (r, clamped) = profile_rate(p.events, g);
            RateEstimate { story: p.id, r, clamped }
        })
        .collect())
}

/// Upcoming-phase non-fan discount: the ratio of non-fan votes before
/// promotion to the votes expected with full visibility, given each story's
/// `r_N` and the fitted site visibility.
pub fn estimate_cnonfan(stories: &[StoryRecord], site: &SiteModel, r_nonfan: &[RateEstimate]) -> Result<f64> {
    site.validate()?;
    let gp = &site.global;
    let (mu, lambda) = (gp.surfing.mu, gp.surfing.lambda);
    let quad = QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-9,
        max_intervals: 2000,
    };
    let mut votes = 0usize;
    let mut expected = 0.0;
    for est in r_nonfan {
        let Some(story) = stories.iter().find(|s| s.id == est.story) else {
            return Err(Error::domain(format!("no story with id {}", est.story)));
        };
        let Some(tp) = story.t_promotion else { continue };
        let fans = story.s0 as f64;
        let mut n = (gp.users - fans - 1.0).max(0.0);
        let mut cur = 0.0;
        let mut v = 1u32;
        let piece = |a: f64, b: f64, v: u32, n: f64| -> Result<f64> {
            if b <= a {
                return Ok(0.0);
            }
            let page_pop = rank_to_page(upcoming_rank(v as f64, &site.popularity.upcoming));
            let pop_miss = 1.0 - surf_tail(page_pop, mu, lambda);
            let seen = integrate(
                |t| 1.0 - (1.0 - surf_tail(gp.k_upcoming * t + 1.0, mu, lambda)) * pop_miss * (1.0 - gp.p_other),
                a,
                b,
                quad,
            )?
            .value;
            Ok(gp.omega * est.r * n * seen)
        };
        for e in story.votes.iter().skip(1).take_while(|e| e.time < tp) {
            expected += piece(cur, e.time, v, n)?;
            votes += (e.class == VoterClass::NonFan) as usize;
            v += 1;
            n *= (-gp.rho).exp();
            cur = e.time;
        }
        expected += piece(cur, tp, v, n)?;
    }
    if !(expected > 0.0) {
        return Err(Error::estimation("no upcoming exposure to estimate the non-fan discount"));
    }
    Ok((votes as f64 / expected).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quad::{integrate, QuadOptions};

    #[test]
    fn phi_table_matches_quadrature() {
        let t = PhiTable::new(0.31, 0.92, 0.9, 24.0, 2400);
        for s in [0.0f64, 0.005, 0.37, 3.0, 11.111, 23.99, 24.0] {
            let want = integrate(
                |u| 1.0 - surf_tail(0.31 * u + 1.0, 0.92, 0.9),
                0.0,
                s.max(1e-300),
                QuadOptions::default(),
            )
            .unwrap()
            .value;
            assert!((t.eval(s) - want).abs() < 1e-9, "{s}: {} vs {want}", t.eval(s));
        }
    }

    #[test]
    fn profile_rate_clamps() {
        assert_eq!(profile_rate(3, 6.0), (0.5, false));
        assert_eq!(profile_rate(0, 6.0), (R_MIN, true));
        assert_eq!(profile_rate(10, 2.0), (1.0, true));
    }
}
