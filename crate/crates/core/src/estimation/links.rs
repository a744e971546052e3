//! Population size and fan-link density.

use super::activity::ActivityFit;
use crate::error::{Error, Result};

/// Active users implied by `u_plus` observed voters when a fraction `p_zero`
/// of active users cast no vote in the sample.
pub fn estimate_active_users(u_plus: u64, fit: &ActivityFit) -> Result<f64> {
    active_users(u_plus, fit.p_zero)
}

pub fn active_users(u_plus: u64, p_zero: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p_zero) {
        return Err(Error::domain(format!("zero-activity probability must lie in [0, 1), got {p_zero}")));
    }
    Ok(u_plus as f64 / (1.0 - p_zero))
}

/// Probability that a random active user is a fan of a given user.
///
/// Users with fans are a fraction `1 − z` of the users in the graph, where `z`
/// is the fraction with none. Following the published estimate, the mean fan
/// count over all users is `links / ((1 + z)·users_with_fans)`, and ρ is that
/// mean divided by the number of active users.
pub fn estimate_rho(total_fan_links: u64, users_with_fans: u64, fraction_zero_fans: f64, active_users: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&fraction_zero_fans) {
        return Err(Error::domain(format!(
            "fraction of users without fans must lie in [0, 1), got {fraction_zero_fans}"
        )));
    }
    if !(active_users > 0.0) {
        return Err(Error::domain(format!("active users must be positive, got {active_users}")));
    }
    if total_fan_links == 0 {
        return Ok(0.0);
    }
    if users_with_fans == 0 {
        return Err(Error::domain("fan links present but no user has fans"));
    }
    let mean_fans = total_fan_links as f64 / ((1.0 + fraction_zero_fans) * users_with_fans as f64);
    Ok(mean_fans / active_users)
}
