//! The whole estimation chain: activity mixture, active users, fan-link
//! density, popularity curves, the submitter-fan fit, site visibility, the two
//! upcoming discounts and finally the interestingness priors.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use super::activity::fit_activity_mixture;
use super::cfan::{estimate_cfan, promotion_windows, CfanMethod};
use super::links::{estimate_active_users, estimate_rho};
use super::popularity::fit_popularity_curves;
use super::site::{fit_site_visibility, profile_nonfan_rates, site_loglik, SiteFitOptions};
use super::story::{fit_story_interest, ClassPriors, StoryFit};
use super::submitter::fit_submitter;
use super::{estimate_cnonfan, RateEstimate};
use crate::data::{corpus_stats, FanGraph, StatsOptions, StoryId, StoryRecord};
use crate::dist::LogNormal;
use crate::error::{Error, Result};
use crate::model::{SiteModel, SurfingParams, VoterClass};
use crate::prediction::hessian3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Stage {
    Activity,
    Rho,
    Popularity,
    Submitter,
    Site,
    NonfanFactor,
    OtherFanFactor,
    Priors,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Activity,
        Stage::Rho,
        Stage::Popularity,
        Stage::Submitter,
        Stage::Site,
        Stage::NonfanFactor,
        Stage::OtherFanFactor,
        Stage::Priors,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Activity => "activity",
            Stage::Rho => "rho",
            Stage::Popularity => "popularity",
            Stage::Submitter => "submitter",
            Stage::Site => "site",
            Stage::NonfanFactor => "c_nonfan",
            Stage::OtherFanFactor => "c_other_fan",
            Stage::Priors => "priors",
        }
    }

    pub fn parse(s: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|st| st.name() == s)
    }
}

#[derive(Debug, Clone)]
pub struct CalibrateOptions {
    /// Starting values, and the values used for kept stages.
    pub base: SiteModel,
    /// Stages whose outputs are taken from `base` instead of estimated.
    /// Useful for synthetic corpora, whose fan graph and story population do
    /// not describe a whole site.
    pub keep: BTreeSet<Stage>,
    /// Use only the first `n` promoted stories (in submission order) for the
    /// story-level fits.
    pub max_stories: Option<usize>,
    /// Digg hours after promotion covered by the story-level fits.
    pub window: f64,
    pub site: SiteFitOptions,
    pub cfan: CfanMethod,
    pub stats: StatsOptions,
}

impl Default for CalibrateOptions {
    fn default() -> Self {
        Self {
            base: SiteModel::reference(),
            keep: BTreeSet::new(),
            max_stories: None,
            window: 24.0,
            site: SiteFitOptions::default(),
            cfan: CfanMethod::PoolAdjusted,
            stats: StatsOptions::default(),
        }
    }
}

/// One reported number from a stage.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostic {
    pub stage: Stage,
    pub quantity: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Calibration {
    pub site: SiteModel,
    pub priors: Option<ClassPriors>,
    /// Standard errors keyed by parameter name, where available.
    pub std_errors: BTreeMap<String, f64>,
    pub diagnostics: Vec<Diagnostic>,
    pub calibration_stories: Vec<StoryId>,
    pub story_fits: Vec<(StoryId, StoryFit)>,
}

fn staged<T>(stage: Stage, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage: stage.name(),
        source: Box::new(e),
    })
}

/// Runs every stage not listed in `opts.keep`, in dependency order.
pub fn calibrate(stories: &[StoryRecord], graph: &FanGraph, opts: &CalibrateOptions) -> Result<Calibration> {
    let mut cal_set: Vec<&StoryRecord> = stories.iter().filter(|s| s.is_promoted()).collect();
    cal_set.sort_by(|a, b| a.origin.total_cmp(&b.origin).then(a.id.cmp(&b.id)));
    if let Some(n) = opts.max_stories {
        cal_set.truncate(n);
    }
    if cal_set.len() < 2 {
        return Err(Error::domain(format!(
            "calibration needs at least 2 promoted stories, found {}",
            cal_set.len()
        )));
    }
    let cal: Vec<StoryRecord> = cal_set.into_iter().cloned().collect();
    let run = |s: Stage| !opts.keep.contains(&s);

    let mut site = opts.base;
    let mut out = Calibration {
        site,
        priors: None,
        std_errors: BTreeMap::new(),
        diagnostics: Vec::new(),
        calibration_stories: cal.iter().map(|s| s.id).collect(),
        story_fits: Vec::new(),
    };
    let mut diags: Vec<Diagnostic> = Vec::new();
    let mut diag = |stage: Stage, q: &str, v: f64| {
        diags.push(Diagnostic {
            stage,
            quantity: q.to_string(),
            value: v,
        })
    };

    let needs_stats = run(Stage::Activity) || run(Stage::Rho) || run(Stage::Popularity);
    let stats = needs_stats.then(|| corpus_stats(stories, &opts.stats));
    let voters: HashSet<u64> = stories.iter().flat_map(|s| s.votes.iter().map(|v| v.voter)).collect();

    if run(Stage::Activity) {
        let hist = &stats.as_ref().expect("stats computed").activity;
        let fit = staged(Stage::Activity, fit_activity_mixture(hist))?;
        site.global.users = staged(Stage::Activity, estimate_active_users(voters.len() as u64, &fit))?;
        diag(Stage::Activity, "mu", fit.mu);
        diag(Stage::Activity, "sigma", fit.sigma);
        diag(Stage::Activity, "p_zero", fit.p_zero);
        diag(Stage::Activity, "voters", voters.len() as f64);
        diag(Stage::Activity, "users", site.global.users);
    }

    if run(Stage::Rho) {
        if voters.is_empty() {
            return Err(Error::Stage {
                stage: Stage::Rho.name(),
                source: Box::new(Error::domain("no voters")),
            });
        }
        let without = voters.iter().filter(|&&u| graph.fan_count(u) == 0).count();
        let z = without as f64 / voters.len() as f64;
        site.global.rho = staged(
            Stage::Rho,
            estimate_rho(graph.edge_count(), graph.users_with_fans(), z, site.global.users),
        )?;
        diag(Stage::Rho, "fraction_without_fans", z);
        diag(Stage::Rho, "fan_links", graph.edge_count() as f64);
        diag(Stage::Rho, "users_with_fans", graph.users_with_fans() as f64);
        diag(Stage::Rho, "rho", site.global.rho);
    }

    if run(Stage::Popularity) {
        let st = stats.as_ref().expect("stats computed");
        let rep = staged(Stage::Popularity, fit_popularity_curves(&st.front_samples, &st.upcoming_samples))?;
        site.popularity.front = rep.front;
        site.popularity.upcoming = rep.upcoming;
        diag(Stage::Popularity, "front_rms", rep.front_rms);
        diag(Stage::Popularity, "upcoming_rms", rep.upcoming_rms);
        diag(Stage::Popularity, "front_samples", rep.front_samples_used as f64);
        diag(Stage::Popularity, "upcoming_samples", rep.upcoming_samples_used as f64);
        if let Some(p) = st.promoted_per_day {
            diag(Stage::Popularity, "promoted_per_day", p);
        }
    }

    if run(Stage::Submitter) {
        let fit = staged(Stage::Submitter, fit_submitter(&cal, opts.window))?;
        site.global.omega = fit.omega;
        site.global.c_submitter_fan = fit.c_submitter_fan;
        diag(Stage::Submitter, "log_likelihood", fit.log_likelihood);
        diag(Stage::Submitter, "stories", fit.r_submitter_fan.len() as f64);
    }

    let site_opts = SiteFitOptions {
        window: opts.window,
        ..opts.site.clone()
    };
    let mut r_nonfan: Option<Vec<RateEstimate>> = None;
    if run(Stage::Site) {
        let fit = staged(Stage::Site, fit_site_visibility(&cal, &site, &site_opts))?;
        site.global.surfing = fit.surfing;
        site.global.p_other = fit.p_other;
        diag(Stage::Site, "log_likelihood", fit.log_likelihood);
        diag(Stage::Site, "iterations", fit.iterations as f64);
        diag(
            Stage::Site,
            "clamped_r_nonfan",
            fit.r_nonfan.iter().filter(|r| r.clamped).count() as f64,
        );
        for (k, se) in site_std_errors(&cal, &site, &site_opts) {
            out.std_errors.insert(k.to_string(), se);
        }
        r_nonfan = Some(fit.r_nonfan);
    }

    if run(Stage::NonfanFactor) {
        let rates = match r_nonfan {
            Some(r) => r,
            None => staged(Stage::NonfanFactor, profile_nonfan_rates(&cal, &site, &site_opts))?,
        };
        site.global.c_nonfan = staged(Stage::NonfanFactor, estimate_cnonfan(&cal, &site, &rates))?;
        diag(Stage::NonfanFactor, "c_nonfan", site.global.c_nonfan);
    }

    if run(Stage::OtherFanFactor) {
        let c = staged(Stage::OtherFanFactor, estimate_cfan(&cal, opts.cfan, &site.global))?;
        site.global.c_other_fan = c;
        let w = promotion_windows(&cal, opts.cfan, &site.global);
        diag(Stage::OtherFanFactor, "votes_before", w.votes_before as f64);
        diag(Stage::OtherFanFactor, "votes_after", w.votes_after as f64);
        if w.votes_before > 0 {
            let rel = (1.0 / w.votes_before as f64 + 1.0 / w.votes_after as f64).sqrt();
            out.std_errors.insert("c_other_fan".into(), c * rel);
        }
    }

    staged(Stage::Site, site.validate())?;
    out.site = site;

    if run(Stage::Priors) {
        let fits: Vec<(StoryId, StoryFit)> = cal
            .par_iter()
            .map(|s| {
                let upto = s.t_promotion.expect("calibration stories are promoted") + opts.window;
                fit_story_interest(s, &site, None, upto).map(|f| (s.id, f))
            })
            .collect::<Result<_>>()
            .map_err(|e| Error::Stage {
                stage: Stage::Priors.name(),
                source: Box::new(e),
            })?;
        let mut priors = Vec::with_capacity(3);
        for c in 0..3 {
            let rs: Vec<f64> = fits
                .iter()
                .filter(|(_, f)| !f.at_boundary[c])
                .map(|(_, f)| f.params.r_triple()[c])
                .collect();
            let ln = staged(Stage::Priors, LogNormal::fit(&rs))?;
            diag(Stage::Priors, &format!("interior_stories_{}", VoterClass::ALL[c].label()), rs.len() as f64);
            priors.push(ln);
        }
        out.priors = Some([priors[0], priors[1], priors[2]]);
        out.story_fits = fits;
    }
    out.diagnostics = diags;
    Ok(out)
}

/// Standard errors of `(μ, λ, P_other)` from the curvature of the profile
/// log-likelihood in log parameters. Empty when the curvature is unusable.
fn site_std_errors(cal: &[StoryRecord], site: &SiteModel, opts: &SiteFitOptions) -> Vec<(&'static str, f64)> {
    let g = &site.global;
    if !(g.p_other > 1e-6) {
        return Vec::new();
    }
    let x0 = [g.surfing.mu.ln(), g.surfing.lambda.ln(), g.p_other.ln()];
    let f = |x: [f64; 3]| {
        site_loglik(cal, site, SurfingParams { mu: x[0].exp(), lambda: x[1].exp() }, x[2].exp(), opts)
            .unwrap_or(f64::NEG_INFINITY)
    };
    let d = hessian3(&f, x0, 1e-3);
    let Some(inv) = d.try_inverse() else {
        return Vec::new();
    };
    let cov = -inv;
    let names = ["mu", "lambda", "p_other"];
    let mut out = Vec::new();
    for i in 0..3 {
        let v = cov[(i, i)];
        if v > 0.0 && v.is_finite() {
            out.push((names[i], x0[i].exp() * v.sqrt()));
        }
    }
    out
}
