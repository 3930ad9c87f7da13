//! Local perception: sensing rectangles, neighbor sets, and the fixed-slot
//! observations both policy layers consume.

use crate::config::{EngagementConfig, SlotCaps};
use crate::geom::Vec2;
use crate::sim::agent::AgentState;
use crate::sim::obstacles::{line_of_sight, ObstacleSet};
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Indices of everything agent `i` currently perceives, relative to the
/// world's agent/circle arrays.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NeighborSets {
    pub allies: Vec<usize>,
    pub enemies: Vec<usize>,
    pub obstacles: Vec<usize>,
}

/// True when `p` lies in the sensing rectangle of `agent`: a box extending
/// `sense_length` ahead of the agent along its heading and `sense_width / 2`
/// to each side.
pub fn in_sensing_rect(agent: &AgentState, p: Vec2, cfg: &EngagementConfig) -> bool {
    let rel = p - agent.position;
    let fwd = Vec2::from_heading(agent.heading);
    let along = rel.dot(fwd);
    let across = rel.x * (-fwd.y) + rel.y * fwd.x;
    along >= 0.0 && along <= cfg.sense_length && across.abs() <= 0.5 * cfg.sense_width
}

/// Computes the neighbor sets of live agent `i`.
///
/// Allies communicate: rectangle containment is enough. Enemies must also be
/// unoccluded by obstacle circles. Obstacle circles are reported by
/// containment of their centers. Dead agents never appear.
pub fn neighbor_sets(
    agents: &[AgentState],
    obstacles: &ObstacleSet,
    i: usize,
    cfg: &EngagementConfig,
) -> NeighborSets {
    let me = &agents[i];
    debug_assert!(me.alive, "dead agents do not perceive");
    let mut out = NeighborSets::default();
    for (j, other) in agents.iter().enumerate() {
        if j == i || !other.alive {
            continue;
        }
        if !in_sensing_rect(me, other.position, cfg) {
            continue;
        }
        if other.team == me.team {
            out.allies.push(j);
        } else if line_of_sight(me.position, other.position, obstacles) {
            out.enemies.push(j);
        }
    }
    for (k, c) in obstacles.circles.iter().enumerate() {
        if in_sensing_rect(me, c.center, cfg) {
            out.obstacles.push(k);
        }
    }
    out
}

/// One neighbor slot of the motion-level observation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObsSlot {
    pub rel_pos: Vec2,
    pub rel_vel: Vec2,
    /// 1.0 when the slot is populated, 0.0 for padding.
    pub mask: f64,
}

impl ObsSlot {
    const WIDTH: usize = 5;

    fn write(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&[
            self.rel_pos.x,
            self.rel_pos.y,
            self.rel_vel.x,
            self.rel_vel.y,
            self.mask,
        ]);
    }
}

/// Motion-level observation of one agent: own kinematic state plus
/// distance-sorted, capacity-limited slots for allies, enemies and obstacle
/// circles. Its flattened dimension depends only on the slot capacities.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerObservation {
    pub self_pos: Vec2,
    pub self_vel: Vec2,
    pub allies: Vec<ObsSlot>,
    pub enemies: Vec<ObsSlot>,
    pub obstacles: Vec<ObsSlot>,
}

impl LowerObservation {
    pub fn dim(caps: &SlotCaps) -> usize {
        4 + ObsSlot::WIDTH * (caps.allies + caps.enemies + caps.obstacles)
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(
            4 + ObsSlot::WIDTH * (self.allies.len() + self.enemies.len() + self.obstacles.len()),
        );
        out.extend_from_slice(&[self.self_pos.x, self.self_pos.y, self.self_vel.x, self.self_vel.y]);
        for s in self.allies.iter().chain(&self.enemies).chain(&self.obstacles) {
            s.write(&mut out);
        }
        out
    }
}

/// One ally slot of the task-level observation; allies share their task
/// over the communication link.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpperAllySlot {
    pub rel_pos: Vec2,
    pub vel: Vec2,
    pub task_code: f64,
    pub mask: f64,
}

/// One enemy slot of the task-level observation; enemy tasks are unknown and
/// deliberately absent.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpperEnemySlot {
    pub rel_pos: Vec2,
    pub vel: Vec2,
    pub mask: f64,
}

/// Task-level observation of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct UpperObservation {
    pub self_pos: Vec2,
    pub self_vel: Vec2,
    pub self_task: f64,
    pub allies: Vec<UpperAllySlot>,
    pub enemies: Vec<UpperEnemySlot>,
}

impl UpperObservation {
    pub fn dim(caps: &SlotCaps) -> usize {
        5 + 6 * caps.allies + 5 * caps.enemies
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(5 + 6 * self.allies.len() + 5 * self.enemies.len());
        out.extend_from_slice(&[
            self.self_pos.x,
            self.self_pos.y,
            self.self_vel.x,
            self.self_vel.y,
            self.self_task,
        ]);
        for s in &self.allies {
            out.extend_from_slice(&[s.rel_pos.x, s.rel_pos.y, s.vel.x, s.vel.y, s.task_code, s.mask]);
        }
        for s in &self.enemies {
            out.extend_from_slice(&[s.rel_pos.x, s.rel_pos.y, s.vel.x, s.vel.y, s.mask]);
        }
        out
    }
}

/// Sorts neighbor indices by ascending distance to agent `i`, breaking ties
/// by id so observation construction is deterministic.
fn by_distance(agents: &[AgentState], me: &AgentState, ids: &[usize]) -> Vec<usize> {
    let mut sorted: Vec<usize> = ids.to_vec();
    sorted.sort_by(|&a, &b| {
        let da = agents[a].position.distance(me.position);
        let db = agents[b].position.distance(me.position);
        da.partial_cmp(&db).unwrap().then(a.cmp(&b))
    });
    sorted
}

/// Builds the motion-level observation for live agent `i`.
pub fn build_lower_observation(
    agents: &[AgentState],
    obstacles: &ObstacleSet,
    i: usize,
    cfg: &EngagementConfig,
    caps: &SlotCaps,
) -> LowerObservation {
    let sets = neighbor_sets(agents, obstacles, i, cfg);
    let me = &agents[i];

    let agent_slot = |j: usize| {
        let o = &agents[j];
        ObsSlot {
            rel_pos: o.position - me.position,
            rel_vel: o.velocity - me.velocity,
            mask: 1.0,
        }
    };
    let fill = |mut slots: Vec<ObsSlot>, cap: usize| {
        slots.truncate(cap);
        slots.resize(cap, ObsSlot::default());
        slots
    };

    let allies = by_distance(agents, me, &sets.allies)
        .into_iter()
        .map(agent_slot)
        .collect::<Vec<_>>();
    let enemies = by_distance(agents, me, &sets.enemies)
        .into_iter()
        .map(agent_slot)
        .collect::<Vec<_>>();
    let mut obst: Vec<usize> = sets.obstacles;
    obst.sort_by(|&a, &b| {
        let da = obstacles.circles[a].center.distance(me.position);
        let db = obstacles.circles[b].center.distance(me.position);
        da.partial_cmp(&db).unwrap().then(a.cmp(&b))
    });
    let obstacles_slots = obst
        .into_iter()
        .map(|k| ObsSlot {
            rel_pos: obstacles.circles[k].center - me.position,
            rel_vel: Vec2::ZERO,
            mask: 1.0,
        })
        .collect::<Vec<_>>();

    LowerObservation {
        self_pos: me.position,
        self_vel: me.velocity,
        allies: fill(allies, caps.allies),
        enemies: fill(enemies, caps.enemies),
        obstacles: fill(obstacles_slots, caps.obstacles),
    }
}

/// Builds the task-level observation for live agent `i`. Ally slots carry
/// task codes; enemy slots never do.
pub fn build_upper_observation(
    agents: &[AgentState],
    obstacles: &ObstacleSet,
    i: usize,
    cfg: &EngagementConfig,
    caps: &SlotCaps,
) -> UpperObservation {
    let sets = neighbor_sets(agents, obstacles, i, cfg);
    let me = &agents[i];

    let mut allies: Vec<UpperAllySlot> = by_distance(agents, me, &sets.allies)
        .into_iter()
        .map(|j| {
            let o = &agents[j];
            UpperAllySlot {
                rel_pos: o.position - me.position,
                vel: o.velocity,
                task_code: o.task.code() as f64,
                mask: 1.0,
            }
        })
        .collect();
    allies.truncate(caps.allies);
    allies.resize(caps.allies, UpperAllySlot::default());

    let mut enemies: Vec<UpperEnemySlot> = by_distance(agents, me, &sets.enemies)
        .into_iter()
        .map(|j| {
            let o = &agents[j];
            UpperEnemySlot {
                rel_pos: o.position - me.position,
                vel: o.velocity,
                mask: 1.0,
            }
        })
        .collect();
    enemies.truncate(caps.enemies);
    enemies.resize(caps.enemies, UpperEnemySlot::default());

    UpperObservation {
        self_pos: me.position,
        self_vel: me.velocity,
        self_task: me.task.code() as f64,
        allies,
        enemies,
    }
}

/// Communication and sensing degradation applied to a built observation.
///
/// Each populated ally slot drops independently with probability
/// `loss_rate` (the communication link fails outright). Every surviving
/// populated slot has its position and velocity components scaled by
/// `1 + noise_sigma * N(0, 1)`, modeling relative sensor noise. The agent's
/// own state is exempt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyModel {
    pub loss_rate: f64,
    pub noise_sigma: f64,
}

impl UncertaintyModel {
    pub const NONE: UncertaintyModel = UncertaintyModel {
        loss_rate: 0.0,
        noise_sigma: 0.0,
    };

    pub fn is_none(&self) -> bool {
        self.loss_rate == 0.0 && self.noise_sigma == 0.0
    }
}

fn noisy<R: Rng>(v: f64, sigma: f64, rng: &mut R) -> f64 {
    if sigma == 0.0 {
        return v;
    }
    let n = Normal::new(0.0, sigma).expect("sigma validated by caller");
    v * (1.0 + n.sample(rng))
}

fn perturb_slot<R: Rng>(rel_pos: &mut Vec2, vel: &mut Vec2, sigma: f64, rng: &mut R) {
    rel_pos.x = noisy(rel_pos.x, sigma, rng);
    rel_pos.y = noisy(rel_pos.y, sigma, rng);
    vel.x = noisy(vel.x, sigma, rng);
    vel.y = noisy(vel.y, sigma, rng);
}

/// Degrades a motion-level observation in place.
pub fn apply_uncertainty_lower<R: Rng>(
    obs: &mut LowerObservation,
    model: UncertaintyModel,
    rng: &mut R,
) {
    for slot in obs.allies.iter_mut() {
        if slot.mask == 1.0 && model.loss_rate > 0.0 && rng.gen_bool(model.loss_rate) {
            *slot = ObsSlot::default();
        }
    }
    for slot in obs
        .allies
        .iter_mut()
        .chain(obs.enemies.iter_mut())
        .chain(obs.obstacles.iter_mut())
    {
        if slot.mask == 1.0 {
            perturb_slot(&mut slot.rel_pos, &mut slot.rel_vel, model.noise_sigma, rng);
        }
    }
}

/// Degrades a task-level observation in place.
pub fn apply_uncertainty_upper<R: Rng>(
    obs: &mut UpperObservation,
    model: UncertaintyModel,
    rng: &mut R,
) {
    for slot in obs.allies.iter_mut() {
        if slot.mask == 1.0 && model.loss_rate > 0.0 && rng.gen_bool(model.loss_rate) {
            *slot = UpperAllySlot::default();
        }
    }
    for slot in obs.allies.iter_mut() {
        if slot.mask == 1.0 {
            perturb_slot(&mut slot.rel_pos, &mut slot.vel, model.noise_sigma, rng);
        }
    }
    for slot in obs.enemies.iter_mut() {
        if slot.mask == 1.0 {
            perturb_slot(&mut slot.rel_pos, &mut slot.vel, model.noise_sigma, rng);
        }
    }
}
