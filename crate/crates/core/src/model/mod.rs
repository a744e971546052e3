//! The mean-field user/story model: parameters, visibility, list positions and
//! the rate equations for votes and unseen-user pools.

pub mod dynamics;
pub mod params;
pub mod position;
pub mod surfing;
pub mod visibility;

pub use dynamics::{ode_rhs, solve_trajectory, DenseTrajectory, Trajectory};
pub use params::{
    GlobalParams, Phase, PopularityFitFront, PopularityFitUpcoming, PopularityFits, SiteModel, StateVector,
    StoryParams, SurfingParams, VoterClass,
};
pub use position::{popularity_page_front, popularity_page_upcoming, recency_page};
pub use surfing::fraction_to_page;
pub use visibility::{visibility_fan, visibility_nonfan};
