//! Single-integrator motion update shared by every agent.

use crate::config::EngagementConfig;
use crate::error::{Error, Result};
use crate::geom::{wrap_angle, Vec2};
use crate::sim::agent::AgentState;

/// Commanded motion for one step: a speed in `[0, v_max]` and an absolute
/// heading in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LowerAction {
    pub speed: f64,
    pub heading: f64,
}

impl LowerAction {
    pub const HOLD: LowerAction = LowerAction {
        speed: 0.0,
        heading: 0.0,
    };

    pub fn new(speed: f64, heading: f64) -> Self {
        LowerAction { speed, heading }
    }

    pub fn is_finite(&self) -> bool {
        self.speed.is_finite() && self.heading.is_finite()
    }

    /// Clamps the speed into `[0, v_max]` and wraps the heading. Policies
    /// already emit bounded actions; this keeps scripted callers honest.
    pub fn bounded(self, v_max: f64) -> LowerAction {
        LowerAction {
            speed: self.speed.clamp(0.0, v_max),
            heading: wrap_angle(self.heading),
        }
    }
}

/// Result of one kinematic update.
pub struct MoveOutcome {
    pub agent: AgentState,
    /// True when the arena boundary clipped the position; treated as a
    /// collision event for reward purposes.
    pub clamped: bool,
}

/// Advances one live agent by a commanded (speed, heading) over `dt`:
/// `p' = p + dt * speed * (cos heading, sin heading)`, clipped to the arena.
///
/// The commanded velocity becomes the agent's velocity for the step, and a
/// nonzero speed refreshes the stored heading. Non-finite commands are
/// rejected.
pub fn step_kinematics(
    agent: &AgentState,
    action: LowerAction,
    cfg: &EngagementConfig,
) -> Result<MoveOutcome> {
    debug_assert!(agent.alive, "dead agents take no actions");
    if !action.is_finite() {
        return Err(Error::NonFinite("lower action"));
    }
    let action = action.bounded(cfg.v_max);
    let dir = Vec2::from_heading(action.heading);
    let velocity = dir * action.speed;
    let raw = agent.position + velocity * cfg.dt;
    let clipped = cfg.arena.clamp(raw);
    let mut next = agent.clone();
    next.position = clipped;
    next.velocity = velocity;
    if action.speed > 0.0 {
        next.heading = action.heading;
    }
    Ok(MoveOutcome {
        agent: next,
        clamped: clipped != raw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::agent::Team;
    use approx::assert_relative_eq;

    fn agent_at(p: Vec2) -> AgentState {
        AgentState::new(0, Team::Blue, p, 0.0)
    }

    #[test]
    fn displacement_matches_closed_form() {
        let cfg = EngagementConfig::default();
        let a = agent_at(Vec2::new(1.0, 2.0));
        let act = LowerAction::new(2.0, std::f64::consts::FRAC_PI_3);
        let out = step_kinematics(&a, act, &cfg).unwrap();
        // p' = p + 0.1 * 2 * (cos 60deg, sin 60deg), evaluated in f64.
        assert_relative_eq!(
            out.agent.position.x,
            1.0 + 0.2 * std::f64::consts::FRAC_PI_3.cos(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            out.agent.position.y,
            2.0 + 0.2 * std::f64::consts::FRAC_PI_3.sin(),
            max_relative = 1e-15
        );
        assert!(!out.clamped);
        assert_relative_eq!(out.agent.speed(), 2.0, max_relative = 1e-15);
        assert_relative_eq!(out.agent.heading, std::f64::consts::FRAC_PI_3);
    }

    #[test]
    fn zero_speed_keeps_position_and_heading() {
        let cfg = EngagementConfig::default();
        let mut a = agent_at(Vec2::new(5.0, 5.0));
        a.heading = 1.25;
        a.velocity = Vec2::ZERO;
        let out = step_kinematics(&a, LowerAction::new(0.0, -2.0), &cfg).unwrap();
        assert_eq!(out.agent.position, Vec2::new(5.0, 5.0));
        assert_eq!(out.agent.heading, 1.25, "zero speed must not steal the heading");
        assert_eq!(out.agent.velocity, Vec2::ZERO);
    }

    #[test]
    fn boundary_clips_and_flags() {
        let cfg = EngagementConfig::default();
        let a = agent_at(Vec2::new(29.95, 10.0));
        let out = step_kinematics(&a, LowerAction::new(2.0, 0.0), &cfg).unwrap();
        assert_eq!(out.agent.position, Vec2::new(30.0, 10.0));
        assert!(out.clamped);
    }

    #[test]
    fn non_finite_action_is_rejected() {
        let cfg = EngagementConfig::default();
        let a = agent_at(Vec2::new(1.0, 1.0));
        assert!(step_kinematics(&a, LowerAction::new(f64::NAN, 0.0), &cfg).is_err());
        assert!(step_kinematics(&a, LowerAction::new(1.0, f64::INFINITY), &cfg).is_err());
    }

    #[test]
    fn over_limit_speed_is_clamped_to_v_max() {
        let cfg = EngagementConfig::default();
        let a = agent_at(Vec2::new(10.0, 10.0));
        let out = step_kinematics(&a, LowerAction::new(99.0, 0.0), &cfg).unwrap();
        assert_relative_eq!(out.agent.position.x, 10.0 + cfg.dt * cfg.v_max);
    }
}
