use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maps wall-clock seconds to Digg hours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DiggClock {
    /// One Digg hour per `seconds_per_hour` wall seconds, counted from `origin`.
    Linear { origin: f64, seconds_per_hour: f64 },
    /// Cumulative site-wide vote count, scaled by the mean hourly count.
    /// `walls` is strictly increasing and `hours[i]` is the Digg time at
    /// `walls[i]`.
    Activity { walls: Vec<f64>, hours: Vec<f64>, mean_hourly: f64 },
}

impl DiggClock {
    /// A clock that runs at wall speed.
    pub fn linear(origin: f64) -> Self {
        DiggClock::Linear {
            origin,
            seconds_per_hour: 3600.0,
        }
    }

    /// Builds the activity clock from the wall times of the votes that define
    /// site activity (votes on promoted stories).
    pub fn from_activity(vote_walls: &[f64]) -> Result<Self> {
        let mut times: Vec<f64> = vote_walls.to_vec();
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::domain("vote times must be finite"));
        }
        times.sort_by(f64::total_cmp);
        let (first, last) = match (times.first(), times.last()) {
            (Some(&a), Some(&b)) if b > a => (a, b),
            _ => return Err(Error::domain("activity clock needs votes spanning a positive interval")),
        };
        let mean_hourly = (times.len() - 1) as f64 / ((last - first) / 3600.0);
        // Knot i sits at the i-th vote; tied timestamps collapse into one knot
        // carrying the later count.
        let mut walls = Vec::with_capacity(times.len());
        let mut counts = Vec::with_capacity(times.len());
        for (i, &t) in times.iter().enumerate() {
            if walls.last() == Some(&t) {
                *counts.last_mut().unwrap() = i as f64;
            } else {
                walls.push(t);
                counts.push(i as f64);
            }
        }
        let hours = counts.into_iter().map(|c| c / mean_hourly).collect();
        Ok(DiggClock::Activity {
            walls,
            hours,
            mean_hourly,
        })
    }

    /// Wall-time range on which the clock is defined.
    pub fn range(&self) -> (f64, f64) {
        match self {
            DiggClock::Linear { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            DiggClock::Activity { walls, .. } => (walls[0], *walls.last().unwrap()),
        }
    }

    /// Digg hours elapsed since the clock's origin at wall time `wall`.
    pub fn digg_time(&self, wall: f64) -> Result<f64> {
        match self {
            DiggClock::Linear {
                origin,
                seconds_per_hour,
            } => {
                if !wall.is_finite() {
                    return Err(Error::domain(format!("wall time {wall} is not finite")));
                }
                Ok((wall - origin) / seconds_per_hour)
            }
            DiggClock::Activity { walls, hours, .. } => {
                let (lo, hi) = (walls[0], *walls.last().unwrap());
                if !(wall >= lo && wall <= hi) {
                    return Err(Error::domain(format!("wall time {wall} outside clock range [{lo}, {hi}]")));
                }
                let j = walls.partition_point(|&w| w <= wall);
                if j == walls.len() {
                    return Ok(*hours.last().unwrap());
                }
                let i = j - 1;
                let frac = (wall - walls[i]) / (walls[j] - walls[i]);
                Ok(hours[i] + frac * (hours[j] - hours[i]))
            }
        }
    }

    /// Inverse of [`DiggClock::digg_time`].
    pub fn wall_time(&self, digg: f64) -> Result<f64> {
        match self {
            DiggClock::Linear {
                origin,
                seconds_per_hour,
            } => Ok(origin + digg * seconds_per_hour),
            DiggClock::Activity { walls, hours, .. } => {
                let (lo, hi) = (hours[0], *hours.last().unwrap());
                if !(digg >= lo && digg <= hi) {
                    return Err(Error::domain(format!("Digg time {digg} outside clock range [{lo}, {hi}]")));
                }
                let j = hours.partition_point(|&h| h <= digg);
                if j == hours.len() {
                    return Ok(*walls.last().unwrap());
                }
                let i = j - 1;
                let frac = (digg - hours[i]) / (hours[j] - hours[i]);
                Ok(walls[i] + frac * (walls[j] - walls[i]))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_hourly_count_is_one_digg_hour() {
        // 4000 votes per hour for three hours.
        let walls: Vec<f64> = (0..=12_000).map(|i| i as f64 * 0.9).collect();
        let clock = DiggClock::from_activity(&walls).unwrap();
        let d = clock.digg_time(3600.0 + 1800.0).unwrap() - clock.digg_time(1800.0).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quiet_hour_is_shorter_than_one_digg_hour() {
        // Busy first hour (3000 votes), quiet second hour (1000 votes).
        let mut walls: Vec<f64> = (0..3000).map(|i| i as f64 * 1.2).collect();
        walls.extend((0..=1000).map(|i| 3600.0 + i as f64 * 3.6));
        let clock = DiggClock::from_activity(&walls).unwrap();
        let quiet = clock.digg_time(7200.0).unwrap() - clock.digg_time(3600.0).unwrap();
        let busy = clock.digg_time(3600.0).unwrap() - clock.digg_time(0.0).unwrap();
        assert!(quiet < 1.0 && busy > 1.0);
        assert!((quiet + busy - 2.0).abs() < 1e-9);
    }

    #[test]
    fn out_of_range_is_an_error() {
        let clock = DiggClock::from_activity(&[10.0, 20.0, 30.0]).unwrap();
        assert!(clock.digg_time(9.0).is_err());
        assert!(clock.digg_time(31.0).is_err());
        assert!(clock.digg_time(30.0).is_ok());
    }

    #[test]
    fn inverse_round_trips() {
        let clock = DiggClock::from_activity(&[0.0, 5.0, 5.0, 40.0, 41.0, 100.0]).unwrap();
        for w in [0.0, 2.5, 5.0, 17.0, 40.5, 100.0] {
            let d = clock.digg_time(w).unwrap();
            assert!((clock.wall_time(d).unwrap() - w).abs() < 1e-9, "{w}");
        }
    }

    #[test]
    fn linear_clock_runs_at_wall_speed() {
        let clock = DiggClock::linear(1000.0);
        assert_eq!(clock.digg_time(1000.0 + 7200.0).unwrap(), 2.0);
    }
}
