//! Calibration: Poisson likelihoods of vote streams, site-wide fits, per-story
//! interestingness, the user-activity mixture, link density, list-position
//! curves and goodness of fit.

pub mod activity;
pub mod calibrate;
pub mod cfan;
pub mod ks;
pub mod likelihood;
pub mod links;
pub mod popularity;
pub mod site;
pub mod story;
pub mod submitter;

pub use activity::{fit_activity_mixture, ActivityFit};
pub use calibrate::{calibrate, CalibrateOptions, Calibration, Diagnostic, Stage};
pub use cfan::{estimate_cfan, CfanMethod, PromotionWindows};
pub use ks::{ks_bootstrap, Family, KsResult};
pub use likelihood::{poisson_loglik, LogLik};
pub use links::{estimate_active_users, estimate_rho};
pub use popularity::{fit_popularity_curves, PopularityFitReport};
pub use site::{
    estimate_cnonfan, fit_site_visibility, profile_nonfan_rates, site_loglik, PoolApproximation, RateEstimate, SiteFit,
    SiteFitOptions,
};
pub use story::{fit_story_interest, ClassPriors, StoryFit};
pub use submitter::{fit_submitter, SubmitterFit};
