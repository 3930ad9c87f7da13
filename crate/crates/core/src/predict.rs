//! Enemy trajectory prediction for the global planner: second-order rollouts
//! with a one-pass potential-field obstacle correction, clustering of the
//! predicted points, and search / escape subgoal selection.
//!
//! Everything downstream of [`Planner::observe`] works purely on stored
//! track history; ground-truth enemy state is read only at the observation
//! gate (or everywhere when the planner is configured omniscient).

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cluster::{cluster, ClusterSet};
use crate::config::{Arena, EngagementConfig};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::sim::agent::Team;
use crate::sim::obstacles::{line_of_sight, ObstacleSet};
use crate::sim::perception::in_sensing_rect;
use crate::sim::world::WorldState;

/// Tuning knobs for the predictor. All lengths in meters, angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictorParams {
    /// Steps predicted per rollout.
    pub horizon: usize,
    /// Independent rollouts per tracked enemy.
    pub rollouts: usize,
    /// Merge cutoff for clustering the predicted points.
    pub link_threshold: f64,
    /// Minimum distance an escape candidate keeps from every cluster center.
    pub standoff: f64,
    /// Escape candidates sampled per refresh.
    pub n_candidates: usize,
    /// Std-dev of the per-step heading jitter that diversifies rollouts.
    pub jitter_sigma: f64,
    /// Track every enemy at all times instead of gating on perception.
    pub omniscient: bool,
    /// Samples kept per enemy track.
    pub history_cap: usize,
}

impl Default for PredictorParams {
    fn default() -> Self {
        PredictorParams {
            horizon: 20,
            rollouts: 8,
            link_threshold: 2.0,
            standoff: 5.0,
            n_candidates: 10,
            jitter_sigma: 0.1,
            omniscient: false,
            history_cap: 64,
        }
    }
}

impl PredictorParams {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.rollouts == 0 || self.n_candidates == 0 {
            return Err(Error::Config(
                "predictor horizon, rollouts, and n_candidates must be at least 1".into(),
            ));
        }
        if self.history_cap < 2 {
            return Err(Error::Config("history_cap must be at least 2".into()));
        }
        for (name, v) in [
            ("link_threshold", self.link_threshold),
            ("standoff", self.standoff),
            ("jitter_sigma", self.jitter_sigma),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!("{name} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

/// Time-ordered position samples for one enemy. Samples are appended only
/// while the enemy is observed, so the series may have time gaps; velocity
/// estimates divide by the actual elapsed time.
#[derive(Debug, Clone, Default)]
pub struct TrackHistory {
    samples: VecDeque<(u64, Vec2)>,
    cap: usize,
}

impl TrackHistory {
    pub fn new(cap: usize) -> Self {
        TrackHistory {
            samples: VecDeque::with_capacity(cap),
            cap,
        }
    }

    /// Appends a sample, replacing an existing one at the same step and
    /// dropping the oldest once the cap is reached.
    pub fn push(&mut self, step: u64, position: Vec2) {
        if let Some(last) = self.samples.back_mut() {
            if last.0 == step {
                last.1 = position;
                return;
            }
            debug_assert!(last.0 < step, "history must stay time-ordered");
        }
        if self.samples.len() == self.cap {
            self.samples.pop_front();
        }
        self.samples.push_back((step, position));
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn latest(&self) -> Option<(u64, Vec2)> {
        self.samples.back().copied()
    }

    /// Last position plus the two most recent velocity estimates, capped at
    /// `v_max`. Short histories degrade gracefully: one sample means a
    /// stationary start, two mean zero estimated acceleration.
    pub fn motion_estimate(&self, dt: f64, v_max: f64) -> Option<(Vec2, Vec2, Vec2)> {
        let n = self.samples.len();
        let last = *self.samples.back()?;
        let vel = |a: (u64, Vec2), b: (u64, Vec2)| {
            let elapsed = (b.0 - a.0) as f64 * dt;
            let v = (b.1 - a.1) / elapsed;
            let speed = v.norm();
            if speed > v_max {
                v * (v_max / speed)
            } else {
                v
            }
        };
        let v_now = if n >= 2 {
            vel(self.samples[n - 2], last)
        } else {
            Vec2::ZERO
        };
        let v_prev = if n >= 3 {
            vel(self.samples[n - 3], self.samples[n - 2])
        } else {
            v_now
        };
        Some((last.1, v_now, v_prev))
    }
}

/// One predicted path for one enemy: positions for the `horizon` steps after
/// the last observed sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictedTrajectory {
    pub enemy: usize,
    pub rollout: usize,
    pub positions: Vec<Vec2>,
}

/// A sampled escape point and its distance to the nearest cluster center.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CandidatePoint {
    pub position: Vec2,
    pub nearest_center_dist: f64,
}

/// Extrapolates one step of a constant-acceleration model where acceleration
/// is estimated from the two latest velocities.
pub fn second_order_step(p: Vec2, v_now: Vec2, v_prev: Vec2, dt: f64) -> Vec2 {
    p + v_now * dt + (v_now - v_prev) * (0.5 * dt)
}

/// Pushes a predicted point away from every obstacle circle it overlaps
/// (center distance under `avoid_radius + circle radius`), one pass, each
/// push scaled by `dt` times the overlap depth. A point exactly at a circle
/// center is pushed along +x since no direction is preferred.
pub fn potential_field_correct(
    p: Vec2,
    obstacles: &ObstacleSet,
    avoid_radius: f64,
    dt: f64,
) -> Vec2 {
    let mut shift = Vec2::ZERO;
    for c in &obstacles.circles {
        let offset = p - c.center;
        let dist = offset.norm();
        let clearance = avoid_radius + c.radius;
        if dist < clearance {
            let depth = clearance - dist;
            let dir = offset.unit_or(Vec2::new(1.0, 0.0));
            shift += dir * (dt * depth);
        }
    }
    p + shift
}

/// Rolls the prediction model forward `horizon` steps from one motion
/// estimate. Each step jitters the current velocity heading, extrapolates,
/// corrects against obstacles, clamps to the arena, and re-derives the
/// velocity from realized displacement (capped at `v_max`).
pub fn rollout(
    start: Vec2,
    v_now: Vec2,
    v_prev: Vec2,
    obstacles: &ObstacleSet,
    cfg: &EngagementConfig,
    horizon: usize,
    jitter_sigma: f64,
    rng: &mut impl Rng,
) -> Vec<Vec2> {
    let jitter = Normal::new(0.0, jitter_sigma.max(0.0)).expect("sigma is validated nonnegative");
    let mut positions = Vec::with_capacity(horizon);
    let (mut p, mut vn, mut vp) = (start, v_now, v_prev);
    for _ in 0..horizon {
        let vj = if jitter_sigma > 0.0 {
            vn.rotated(jitter.sample(rng))
        } else {
            vn
        };
        let mut next = second_order_step(p, vj, vp, cfg.dt);
        next = potential_field_correct(next, obstacles, cfg.avoid_radius, cfg.dt);
        next = cfg.arena.clamp(next);
        let mut v_next = (next - p) / cfg.dt;
        let speed = v_next.norm();
        if speed > cfg.v_max {
            v_next = v_next * (cfg.v_max / speed);
        }
        vp = vj;
        vn = v_next;
        p = next;
        positions.push(p);
    }
    positions
}

/// Nearest cluster center to `p`; ties go to the lowest-index center. `None`
/// when there are no centers.
pub fn search_subgoal(centers: &[Vec2], p: Vec2) -> Option<Vec2> {
    let mut best: Option<(f64, Vec2)> = None;
    for &c in centers {
        let d = c.distance(p);
        if best.map_or(true, |(bd, _)| d < bd) {
            best = Some((d, c));
        }
    }
    best.map(|(_, c)| c)
}

/// Rejection-samples `n` arena points that keep `standoff` distance from
/// every cluster center and full body clearance from every obstacle circle.
/// Every 10^4 consecutive rejections the standoff relaxes by 20% (logged);
/// an arena too obstructed to ever accept a point is reported as infeasible.
///
/// Returns the candidates and the standoff actually enforced.
pub fn escape_candidates(
    centers: &[Vec2],
    arena: &Arena,
    obstacles: &ObstacleSet,
    avoid_radius: f64,
    standoff: f64,
    n: usize,
    rng: &mut impl Rng,
) -> Result<(Vec<CandidatePoint>, f64)> {
    const RELAX_AFTER: u32 = 10_000;
    const MAX_ATTEMPTS: u64 = 10_000_000;
    let mut effective = standoff;
    let mut rejections = 0u32;
    let mut attempts = 0u64;
    let mut points = Vec::with_capacity(n);
    while points.len() < n {
        if attempts >= MAX_ATTEMPTS {
            return Err(Error::Infeasible(
                "arena too obstructed to place escape candidates".into(),
            ));
        }
        attempts += 1;
        let p = Vec2::new(
            rng.gen_range(0.0..=arena.width),
            rng.gen_range(0.0..=arena.height),
        );
        let clear_of_obstacles = obstacles
            .circles
            .iter()
            .all(|c| p.distance(c.center) >= c.radius + avoid_radius);
        let nearest = centers
            .iter()
            .map(|c| c.distance(p))
            .fold(f64::INFINITY, f64::min);
        if clear_of_obstacles && nearest > effective {
            points.push(CandidatePoint {
                position: p,
                nearest_center_dist: nearest,
            });
            rejections = 0;
        } else {
            rejections += 1;
            if rejections >= RELAX_AFTER {
                effective *= 0.8;
                rejections = 0;
                log::warn!("escape candidate standoff relaxed to {effective:.3} m");
            }
        }
    }
    Ok((points, effective))
}

/// Nearest candidate to `p`; ties go to the lowest-index candidate.
pub fn escape_subgoal(candidates: &[CandidatePoint], p: Vec2) -> Option<Vec2> {
    let mut best: Option<(f64, Vec2)> = None;
    for c in candidates {
        let d = c.position.distance(p);
        if best.map_or(true, |(bd, _)| d < bd) {
            best = Some((d, c.position));
        }
    }
    best.map(|(_, c)| c)
}

/// Global planner for one team: tracks opposing agents, predicts where they
/// are headed, and serves search / escape subgoals from the latest refresh.
#[derive(Debug, Clone)]
pub struct Planner {
    team: Team,
    params: PredictorParams,
    histories: BTreeMap<usize, TrackHistory>,
    trajectories: Vec<PredictedTrajectory>,
    clusters: Option<ClusterSet>,
    candidates: Vec<CandidatePoint>,
    effective_standoff: f64,
    rng: ChaCha8Rng,
}

impl Planner {
    /// `team` is the side the planner serves; it tracks the other side.
    pub fn new(team: Team, params: PredictorParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let effective_standoff = params.standoff;
        Ok(Planner {
            team,
            params,
            histories: BTreeMap::new(),
            trajectories: Vec::new(),
            clusters: None,
            candidates: Vec::new(),
            effective_standoff,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn params(&self) -> &PredictorParams {
        &self.params
    }

    /// Records the current position of every opposing agent that at least one
    /// live ally perceives (rectangle containment plus line of sight), or of
    /// every live opposing agent when omniscient. Call once per sim step.
    pub fn observe(&mut self, world: &WorldState) {
        let cap = self.params.history_cap;
        for enemy in world.agents.iter().filter(|a| a.alive && a.team != self.team) {
            let seen = self.params.omniscient
                || world
                    .agents
                    .iter()
                    .filter(|a| a.alive && a.team == self.team)
                    .any(|ally| {
                        in_sensing_rect(ally, enemy.position, &world.cfg)
                            && line_of_sight(ally.position, enemy.position, &world.obstacles)
                    });
            if seen {
                self.histories
                    .entry(enemy.id)
                    .or_insert_with(|| TrackHistory::new(cap))
                    .push(world.step_index, enemy.position);
            }
        }
    }

    /// Re-predicts from the stored tracks: rolls out every tracked enemy,
    /// clusters the predicted points, and samples a fresh escape candidate
    /// set. Call at subtask boundaries, after [`Planner::observe`].
    pub fn refresh(&mut self, obstacles: &ObstacleSet, cfg: &EngagementConfig) -> Result<()> {
        self.trajectories.clear();
        let mut points = Vec::new();
        for (&enemy, track) in &self.histories {
            let Some((p, v_now, v_prev)) = track.motion_estimate(cfg.dt, cfg.v_max) else {
                continue;
            };
            for r in 0..self.params.rollouts {
                let positions = rollout(
                    p,
                    v_now,
                    v_prev,
                    obstacles,
                    cfg,
                    self.params.horizon,
                    self.params.jitter_sigma,
                    &mut self.rng,
                );
                points.extend_from_slice(&positions);
                self.trajectories.push(PredictedTrajectory {
                    enemy,
                    rollout: r,
                    positions,
                });
            }
        }
        self.clusters = if points.is_empty() {
            None
        } else {
            Some(cluster(&points, self.params.link_threshold))
        };
        let centers = self
            .clusters
            .as_ref()
            .map(|c| c.centers())
            .unwrap_or_default();
        let (candidates, effective) = escape_candidates(
            &centers,
            &cfg.arena,
            obstacles,
            cfg.avoid_radius,
            self.params.standoff,
            self.params.n_candidates,
            &mut self.rng,
        )?;
        self.candidates = candidates;
        self.effective_standoff = effective;
        Ok(())
    }

    pub fn clusters(&self) -> Option<&ClusterSet> {
        self.clusters.as_ref()
    }

    pub fn trajectories(&self) -> &[PredictedTrajectory] {
        &self.trajectories
    }

    pub fn candidates(&self) -> &[CandidatePoint] {
        &self.candidates
    }

    /// Standoff actually enforced for the current candidate set; lower than
    /// the configured one only after relaxation.
    pub fn effective_standoff(&self) -> f64 {
        self.effective_standoff
    }

    /// Search subgoal for an agent at `p`: the nearest predicted cluster
    /// center, or the arena center before any enemy has ever been tracked.
    pub fn search_subgoal(&self, p: Vec2, arena: &Arena) -> Vec2 {
        self.clusters
            .as_ref()
            .and_then(|c| search_subgoal(&c.centers(), p))
            .unwrap_or_else(|| arena.center())
    }

    /// Escape subgoal for an agent at `p`: the nearest candidate point, or
    /// the arena center if no refresh has happened yet.
    pub fn escape_subgoal(&self, p: Vec2, arena: &Arena) -> Vec2 {
        escape_subgoal(&self.candidates, p).unwrap_or_else(|| arena.center())
    }
}
