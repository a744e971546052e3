//! Rate equations for the expected vote counts and unseen-user pools:
//!
//! ```text
//! dv_S/dt = ω r_S P_S S        dS/dt = −ω P_S S
//! dv_F/dt = ω r_F P_F F        dF/dt = −ω P_F F + ρ N dv/dt
//! dv_N/dt = ω r_N P_N N        dN/dt = −ω P_N N − ρ N dv/dt
//! ```
//!
//! with `v = v_S + v_F + v_N`. Visibilities jump at promotion, so every solve
//! is split at `t_promotion`.

use super::params::{Phase, SiteModel, StateVector, StoryParams, VoterClass};
use super::visibility::{fan_in_phase, nonfan_in_phase};
use crate::error::{Error, Result};
use crate::numerics::ode::{Dopri5, StepSpan};

/// Integrator used for all model solves.
pub const SOLVER: Dopri5 = Dopri5 {
    abs_tol: 1e-8,
    rel_tol: 1e-8,
    max_steps: 200_000,
    initial_step: 1e-4,
};

#[inline]
pub(crate) fn rhs_in_phase(y: &[f64; 6], t: f64, phase: Phase, sp: &StoryParams, site: &SiteModel) -> [f64; 6] {
    let gp = &site.global;
    let s = y[3].max(0.0);
    let f = y[4].max(0.0);
    let n = y[5].max(0.0);
    let v = y[0] + y[1] + y[2];
    let ps = fan_in_phase(VoterClass::SubmitterFan, phase, gp);
    let pf = fan_in_phase(VoterClass::OtherFan, phase, gp);
    let pn = nonfan_in_phase(t, v, sp.t_promotion, phase, site);
    let w = gp.omega;
    let dvs = w * sp.r_submitter_fan * ps * s;
    let dvf = w * sp.r_other_fan * pf * f;
    let dvn = w * sp.r_nonfan * pn * n;
    let dv = dvs + dvf + dvn;
    let transfer = gp.rho * n * dv;
    [dvs, dvf, dvn, -w * ps * s, -w * pf * f + transfer, -w * pn * n - transfer]
}

/// Time derivative of the state at `t`.
pub fn ode_rhs(state: &StateVector, t: f64, sp: &StoryParams, site: &SiteModel) -> Result<StateVector> {
    state.validate()?;
    sp.validate()?;
    site.validate()?;
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time must be non-negative, got {t}")));
    }
    let phase = Phase::at(t, sp.t_promotion);
    Ok(StateVector::from_array(rhs_in_phase(&state.to_array(), t, phase, sp, site)))
}

/// A solved trajectory that can be evaluated anywhere inside its span.
#[derive(Debug, Clone)]
pub struct DenseTrajectory {
    pub t0: f64,
    pub t1: f64,
    init: [f64; 6],
    end: [f64; 6],
    steps: Vec<StepSpan<6>>,
}

impl DenseTrajectory {
    pub fn start(&self) -> StateVector {
        StateVector::from_array(self.init)
    }

    pub fn end(&self) -> StateVector {
        StateVector::from_array(self.end)
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    /// Step boundaries, in time order.
    pub fn step_times(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.t0).chain(self.steps.iter().map(|s| s.t1))
    }

    fn raw(&self, t: f64) -> [f64; 6] {
        if self.steps.is_empty() || t <= self.t0 {
            return self.init;
        }
        if t >= self.t1 {
            return self.end;
        }
        let idx = self.steps.partition_point(|s| s.t1 < t);
        self.steps[idx.min(self.steps.len() - 1)].interpolate(t)
    }

    /// State at `t`, clamped to the solved span, with round-off negatives
    /// removed.
    pub fn eval(&self, t: f64) -> StateVector {
        let mut y = self.raw(t);
        for x in &mut y {
            *x = x.max(0.0);
        }
        StateVector::from_array(y)
    }

    /// Derivative at `t` recomputed from the interpolated state.
    pub fn rates(&self, t: f64, sp: &StoryParams, site: &SiteModel) -> StateVector {
        let phase = Phase::at(t, sp.t_promotion);
        StateVector::from_array(rhs_in_phase(&self.raw(t), t, phase, sp, site))
    }
}

/// Solves from `(t0, init)` to `t1` and keeps every step for interpolation.
pub fn solve_dense(
    init: &StateVector,
    t0: f64,
    t1: f64,
    sp: &StoryParams,
    site: &SiteModel,
) -> Result<DenseTrajectory> {
    solve_dense_with(&SOLVER, init, t0, t1, &[], sp, site)
}

/// Like [`solve_dense`], but every time in `stops` is also a step boundary.
pub(crate) fn solve_dense_with(
    solver: &Dopri5,
    init: &StateVector,
    t0: f64,
    t1: f64,
    stops: &[f64],
    sp: &StoryParams,
    site: &SiteModel,
) -> Result<DenseTrajectory> {
    if !(t1 >= t0 && t0 >= 0.0) {
        return Err(Error::domain(format!("invalid solve interval [{t0}, {t1}]")));
    }
    let mut steps = Vec::new();
    let mut y = init.to_array();
    let mut cuts: Vec<f64> = stops.iter().copied().chain(sp.t_promotion).filter(|&t| t > t0 && t < t1).collect();
    cuts.push(t0);
    cuts.push(t1);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let segments = cuts.windows(2).map(|w| {
        let phase = Phase::at(w[0], sp.t_promotion);
        (w[0], w[1], phase)
    });
    for (a, b, phase) in segments {
        y = solver
            .integrate(|t, y| rhs_in_phase(y, t, phase, sp, site), a, y, b, |s| steps.push(*s))
            .map_err(|e| match e {
                Error::Numerical(msg) => Error::Numerical(format!(
                    "{msg}; story r = {:?}, s0 = {}, t_promotion = {:?}, phase {phase:?}",
                    sp.r_triple(),
                    sp.s0,
                    sp.t_promotion
                )),
                other => other,
            })?;
    }
    Ok(DenseTrajectory {
        t0,
        t1,
        init: init.to_array(),
        end: y,
        steps,
    })
}

/// A trajectory sampled at caller-chosen times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<(f64, StateVector)>,
}

impl Trajectory {
    pub fn last(&self) -> &StateVector {
        &self.points.last().expect("trajectories are never empty").1
    }
}

/// Integrates from `t0` to `t1` and samples the solution at every grid time.
/// Grid times must lie in `[t0, t1]`; an empty grid samples only `t1`.
pub fn solve_trajectory(
    init: &StateVector,
    t0: f64,
    t1: f64,
    grid: &[f64],
    sp: &StoryParams,
    site: &SiteModel,
) -> Result<Trajectory> {
    init.validate()?;
    sp.validate()?;
    site.validate()?;
    if let Some(&bad) = grid.iter().find(|&&t| !(t >= t0 && t <= t1)) {
        return Err(Error::domain(format!("grid time {bad} outside [{t0}, {t1}]")));
    }
    if t1 == t0 {
        return Ok(Trajectory {
            points: vec![(t0, *init)],
        });
    }
    if !(t1 > t0) {
        return Err(Error::domain(format!("solve interval [{t0}, {t1}] is reversed")));
    }
    let dense = solve_dense_with(&SOLVER, init, t0, t1, grid, sp, site)?;
    let points = if grid.is_empty() {
        vec![(t1, dense.end())]
    } else {
        grid.iter().map(|&t| (t, dense.eval(t))).collect()
    };
    Ok(Trajectory { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::params::GlobalParams;

    fn story() -> StoryParams {
        StoryParams {
            r_submitter_fan: (-3.5f64).exp(),
            r_other_fan: (-2.3f64).exp(),
            r_nonfan: (-6.3f64).exp(),
            s0: 400,
            t_promotion: Some(4.0),
        }
    }

    /// With every visibility and interestingness at 1 and no fan links, pools
    /// decay as `e^{−ωt}`.
    fn saturated() -> (StoryParams, SiteModel) {
        let mut site = SiteModel::reference();
        site.global.p_other = 1.0;
        site.global.rho = 0.0;
        let sp = StoryParams {
            r_submitter_fan: 1.0,
            r_other_fan: 1.0,
            r_nonfan: 1.0,
            s0: 100,
            t_promotion: Some(0.0),
        };
        (sp, site)
    }

    #[test]
    fn empty_pools_are_stationary() {
        let state = StateVector { v_s: 3.0, v_f: 2.0, v_n: 10.0, s: 0.0, f: 0.0, n: 0.0 };
        let d = ode_rhs(&state, 2.0, &story(), &SiteModel::reference()).unwrap();
        assert_eq!(d.to_array(), [0.0; 6]);
    }

    #[test]
    fn no_fan_links_means_no_inflow() {
        let mut site = SiteModel::reference();
        site.global.rho = 0.0;
        let state = StateVector { v_s: 3.0, v_f: 2.0, v_n: 10.0, s: 50.0, f: 20.0, n: 1e5 };
        let sp = story();
        let d = ode_rhs(&state, 6.0, &sp, &site).unwrap();
        assert!((d.f - (-site.global.omega * 20.0)).abs() < 1e-12);
    }

    #[test]
    fn saturated_system_decays_exponentially() {
        let (sp, site) = saturated();
        let init = StateVector::initial(sp.s0, site.global.users);
        let grid: Vec<f64> = (0..=24).map(|i| i as f64).collect();
        let traj = solve_trajectory(&init, 0.0, 24.0, &grid, &sp, &site).unwrap();
        let w = site.global.omega;
        for (t, st) in &traj.points {
            let decay = (-w * t).exp();
            let s_exact = 100.0 * decay;
            let vs_exact = 100.0 * (1.0 - decay);
            let n_exact = init.n * decay;
            assert!(((st.s - s_exact) / s_exact).abs() < 1e-8, "t = {t}: {}", st.s - s_exact);
            assert!((st.v_s - vs_exact).abs() < 1e-8 * 100.0, "t = {t}: {}", st.v_s - vs_exact);
            assert!(((st.n - n_exact) / n_exact).abs() < 1e-8, "t = {t}: {}", (st.n - n_exact) / n_exact);
        }
    }

    #[test]
    fn zero_length_solve_returns_init() {
        let init = StateVector::initial(10, 1000.0);
        let t = solve_trajectory(&init, 2.0, 2.0, &[], &story(), &SiteModel::reference()).unwrap();
        assert_eq!(t.points, vec![(2.0, init)]);
    }

    #[test]
    fn default_initial_condition() {
        let init = StateVector::initial(400, GlobalParams::reference().users);
        assert_eq!(init.v_n, 1.0);
        assert_eq!(init.v_s + init.v_f, 0.0);
        assert_eq!(init.s, 400.0);
        assert_eq!(init.f, 0.0);
        assert_eq!(init.n, 248_000.0 - 401.0);
    }

    #[test]
    fn rejects_out_of_span_grid() {
        let init = StateVector::initial(10, 1000.0);
        assert!(solve_trajectory(&init, 0.0, 1.0, &[2.0], &story(), &SiteModel::reference()).is_err());
    }
}
