//! Engagement constants and observation slot capacities.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Axis-aligned arena `[0, width] x [0, height]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arena {
    pub width: f64,
    pub height: f64,
}

impl Arena {
    pub fn center(&self) -> crate::geom::Vec2 {
        crate::geom::Vec2::new(0.5 * self.width, 0.5 * self.height)
    }

    pub fn contains(&self, p: crate::geom::Vec2) -> bool {
        p.x >= 0.0 && p.x <= self.width && p.y >= 0.0 && p.y <= self.height
    }

    pub fn clamp(&self, p: crate::geom::Vec2) -> crate::geom::Vec2 {
        crate::geom::Vec2::new(p.x.clamp(0.0, self.width), p.y.clamp(0.0, self.height))
    }
}

impl Default for Arena {
    fn default() -> Self {
        Arena {
            width: 30.0,
            height: 20.0,
        }
    }
}

/// Physical and engagement constants of the simulator.
///
/// Distances are meters, angles radians, time seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngagementConfig {
    /// Attack sector radius.
    pub attack_radius: f64,
    /// Full opening angle of the attack sector (the half-angle on each side
    /// of the heading is `attack_angle / 2`).
    pub attack_angle: f64,
    /// Per-pair hit probability for one attack.
    pub hit_prob: f64,
    /// Agent body radius used for agent-agent collision tests.
    pub avoid_radius: f64,
    /// Radius of the circles that cover obstacle rectangles.
    pub obstacle_radius: f64,
    /// Forward reach of the sensing rectangle.
    pub sense_length: f64,
    /// Total lateral width of the sensing rectangle.
    pub sense_width: f64,
    /// Speed bound for every agent.
    pub v_max: f64,
    /// Integration step.
    pub dt: f64,
    pub arena: Arena,
}

impl Default for EngagementConfig {
    fn default() -> Self {
        EngagementConfig {
            attack_radius: 1.0,
            attack_angle: std::f64::consts::FRAC_PI_2,
            hit_prob: 0.5,
            avoid_radius: 0.3,
            obstacle_radius: 0.3,
            sense_length: 5.0,
            sense_width: 5.0,
            v_max: 2.0,
            dt: 0.1,
            arena: Arena::default(),
        }
    }
}

impl EngagementConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("attack_radius", self.attack_radius),
            ("avoid_radius", self.avoid_radius),
            ("obstacle_radius", self.obstacle_radius),
            ("sense_length", self.sense_length),
            ("sense_width", self.sense_width),
            ("v_max", self.v_max),
            ("dt", self.dt),
            ("arena.width", self.arena.width),
            ("arena.height", self.arena.height),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.hit_prob >= 0.0 && self.hit_prob <= 1.0) {
            return Err(Error::Config(format!(
                "hit_prob must lie in [0, 1], got {}",
                self.hit_prob
            )));
        }
        if !(self.attack_angle > 0.0 && self.attack_angle <= std::f64::consts::TAU) {
            return Err(Error::Config(format!(
                "attack_angle must lie in (0, 2pi], got {}",
                self.attack_angle
            )));
        }
        Ok(())
    }
}

/// Fixed observation slot capacities. Observation dimensionality depends on
/// these alone, never on the swarm size, which is what lets one policy run
/// on larger teams than it was trained with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SlotCaps {
    pub allies: usize,
    pub enemies: usize,
    pub obstacles: usize,
}

impl Default for SlotCaps {
    fn default() -> Self {
        SlotCaps {
            allies: 4,
            enemies: 4,
            obstacles: 6,
        }
    }
}

impl SlotCaps {
    pub fn validate(&self) -> Result<()> {
        if self.allies == 0 || self.enemies == 0 || self.obstacles == 0 {
            return Err(Error::Config(
                "slot capacities must all be at least 1".into(),
            ));
        }
        Ok(())
    }
}
