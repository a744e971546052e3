use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of stories shown on one list page.
pub const STORIES_PER_PAGE: f64 = 15.0;

/// The three user groups that can vote on a story.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VoterClass {
    SubmitterFan,
    OtherFan,
    NonFan,
}

impl VoterClass {
    pub const ALL: [VoterClass; 3] = [VoterClass::SubmitterFan, VoterClass::OtherFan, VoterClass::NonFan];

    pub fn index(self) -> usize {
        match self {
            VoterClass::SubmitterFan => 0,
            VoterClass::OtherFan => 1,
            VoterClass::NonFan => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            VoterClass::SubmitterFan => "submitter_fan",
            VoterClass::OtherFan => "other_fan",
            VoterClass::NonFan => "non_fan",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "submitter_fan" => Some(VoterClass::SubmitterFan),
            "other_fan" => Some(VoterClass::OtherFan),
            "non_fan" => Some(VoterClass::NonFan),
            _ => None,
        }
    }
}

/// Which recency list the story sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Upcoming,
    Front,
}

impl Phase {
    /// Phase at Digg time `t`; a story is on the front page from its promotion
    /// instant onward.
    pub fn at(t: f64, t_promotion: Option<f64>) -> Phase {
        match t_promotion {
            Some(tp) if t >= tp => Phase::Front,
            _ => Phase::Upcoming,
        }
    }
}

/// Inverse-Gaussian page-view distribution ("law of surfing").
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfingParams {
    /// Mean number of pages viewed per visit.
    pub mu: f64,
    /// Shape parameter; the variance is `mu³/lambda`.
    pub lambda: f64,
}

impl SurfingParams {
    pub fn new(mu: f64, lambda: f64) -> Result<Self> {
        let sp = Self { mu, lambda };
        sp.validate()?;
        Ok(sp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite() && self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::domain(format!(
                "surfing parameters must be positive (mu = {}, lambda = {})",
                self.mu, self.lambda
            )));
        }
        Ok(())
    }
}

/// Site-wide constants shared by all stories. Times are in Digg hours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalParams {
    /// Rate at which each user visits the site.
    pub omega: f64,
    /// Active users `U`.
    pub users: f64,
    pub surfing: SurfingParams,
    /// Probability of finding a story by means other than the two lists.
    pub p_other: f64,
    /// Probability that a random user is a fan of a given voter.
    pub rho: f64,
    /// Upcoming recency-list growth, pages per Digg hour.
    pub k_upcoming: f64,
    /// Front-page recency-list growth, pages per Digg hour.
    pub k_front: f64,
    /// Upcoming-phase visibility factors.
    pub c_submitter_fan: f64,
    pub c_other_fan: f64,
    pub c_nonfan: f64,
}

impl GlobalParams {
    /// The calibrated values reported for the June 2009 Digg data.
    pub fn reference() -> Self {
        Self {
            omega: 0.16,
            users: 248_000.0,
            surfing: SurfingParams { mu: 0.92, lambda: 0.9 },
            p_other: 0.05,
            rho: 1.7e-5,
            k_upcoming: 59.8,
            k_front: 0.31,
            c_submitter_fan: 0.57,
            c_other_fan: 0.10,
            c_nonfan: 0.11,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.surfing.validate()?;
        let positive = [
            ("omega", self.omega),
            ("users", self.users),
            ("k_upcoming", self.k_upcoming),
            ("k_front", self.k_front),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        let unit = [
            ("p_other", self.p_other),
            ("rho", self.rho),
            ("c_submitter_fan", self.c_submitter_fan),
            ("c_other_fan", self.c_other_fan),
            ("c_nonfan", self.c_nonfan),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

/// Front-page popularity rank as a double-Pareto lognormal upper tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopularityFitFront {
    /// Mean stories promoted per 24 hours.
    pub s_daily: f64,
    /// Upper-tail power-law exponent.
    pub a: f64,
    /// Lower-tail power-law exponent.
    pub b: f64,
    /// Lognormal centre (log votes).
    pub nu: f64,
    /// Lognormal spread.
    pub sigma: f64,
}

impl PopularityFitFront {
    pub fn reference() -> Self {
        Self {
            s_daily: 129.0,
            a: 1.90,
            b: 2.50,
            nu: 5.88,
            sigma: 0.16,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 1.0 && self.b > 0.0 && self.sigma > 0.0 && self.s_daily > 0.0 && self.nu.is_finite()) {
            return Err(Error::domain(format!("invalid front popularity fit {self:?}")));
        }
        Ok(())
    }
}

/// Upcoming popularity rank `e^{c − d·v}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopularityFitUpcoming {
    pub c_exp: f64,
    pub d_exp: f64,
}

impl PopularityFitUpcoming {
    pub fn reference() -> Self {
        Self { c_exp: 5.3, d_exp: 0.029 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d_exp >= 0.0 && self.c_exp.is_finite()) {
            return Err(Error::domain(format!("invalid upcoming popularity fit {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopularityFits {
    pub front: PopularityFitFront,
    pub upcoming: PopularityFitUpcoming,
}

impl PopularityFits {
    pub fn reference() -> Self {
        Self {
            front: PopularityFitFront::reference(),
            upcoming: PopularityFitUpcoming::reference(),
        }
    }
}

/// Everything site-wide the rate equations need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteModel {
    pub global: GlobalParams,
    pub popularity: PopularityFits,
}

impl SiteModel {
    pub fn reference() -> Self {
        Self {
            global: GlobalParams::reference(),
            popularity: PopularityFits::reference(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.global.validate()?;
        self.popularity.front.validate()?;
        self.popularity.upcoming.validate()
    }
}

/// Per-story parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoryParams {
    /// Interestingness (probability of a vote once seen) per class.
    pub r_submitter_fan: f64,
    pub r_other_fan: f64,
    pub r_nonfan: f64,
    /// Fans of the submitter.
    pub s0: u32,
    /// Promotion time in Digg hours since submission.
    pub t_promotion: Option<f64>,
}

impl StoryParams {
    pub fn r(&self, class: VoterClass) -> f64 {
        match class {
            VoterClass::SubmitterFan => self.r_submitter_fan,
            VoterClass::OtherFan => self.r_other_fan,
            VoterClass::NonFan => self.r_nonfan,
        }
    }

    pub fn set_r(&mut self, class: VoterClass, value: f64) {
        match class {
            VoterClass::SubmitterFan => self.r_submitter_fan = value,
            VoterClass::OtherFan => self.r_other_fan = value,
            VoterClass::NonFan => self.r_nonfan = value,
        }
    }

    pub fn r_triple(&self) -> [f64; 3] {
        [self.r_submitter_fan, self.r_other_fan, self.r_nonfan]
    }

    /// Checks `r ∈ [0, 1]`; a zero `r` is allowed for simulation.
    pub fn validate(&self) -> Result<()> {
        for r in self.r_triple() {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::domain(format!("interestingness must lie in [0, 1], got {r}")));
            }
        }
        if let Some(tp) = self.t_promotion {
            if !(tp >= 0.0 && tp.is_finite()) {
                return Err(Error::domain(format!("promotion time must be non-negative, got {tp}")));
            }
        }
        Ok(())
    }
}

/// The six dynamic quantities of the rate equations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateVector {
    pub v_s: f64,
    pub v_f: f64,
    pub v_n: f64,
    pub s: f64,
    pub f: f64,
    pub n: f64,
}

impl StateVector {
    /// State at submission: the submitter's own vote counts as a non-fan vote.
    pub fn initial(s0: u32, users: f64) -> Self {
        Self {
            v_s: 0.0,
            v_f: 0.0,
            v_n: 1.0,
            s: s0 as f64,
            f: 0.0,
            n: (users - s0 as f64 - 1.0).max(0.0),
        }
    }

    pub fn total_votes(&self) -> f64 {
        self.v_s + self.v_f + self.v_n
    }

    pub fn votes(&self, class: VoterClass) -> f64 {
        match class {
            VoterClass::SubmitterFan => self.v_s,
            VoterClass::OtherFan => self.v_f,
            VoterClass::NonFan => self.v_n,
        }
    }

    pub fn pool(&self, class: VoterClass) -> f64 {
        match class {
            VoterClass::SubmitterFan => self.s,
            VoterClass::OtherFan => self.f,
            VoterClass::NonFan => self.n,
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.v_s, self.v_f, self.v_n, self.s, self.f, self.n]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self {
            v_s: a[0],
            v_f: a[1],
            v_n: a[2],
            s: a[3],
            f: a[4],
            n: a[5],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.to_array().iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::domain(format!("state components must be finite and non-negative: {self:?}")));
        }
        Ok(())
    }
}
