//! Scripted red-team controllers: rule-based expert play, ring-scored
//! heuristic attacks, uniform random motion, and the CLI-facing opponent
//! selector. Mirror opponents reuse [`crate::control::HrlController`] with a
//! frozen checkpoint.
//!
//! Every scripted decision is computed from a [`LocalView`], which holds
//! exactly what the deciding agent can perceive, so red plays under the same
//! sensing constraints as blue. The only state carried between steps is each
//! agent's patrol waypoint index.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Arena, EngagementConfig};
use crate::control::TeamPolicy;
use crate::error::{Error, Result};
use crate::geom::{point_segment_distance, wrap_angle, Vec2};
use crate::sim::agent::{AgentState, TaskKind, Team};
use crate::sim::combat::advantage;
use crate::sim::kinematics::LowerAction;
use crate::sim::obstacles::CircleObstacle;
use crate::sim::perception::neighbor_sets;
use crate::sim::world::WorldState;

/// Opponent selection as written on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OpponentKind {
    Expert,
    Heuristic,
    Random,
    /// Frozen checkpoint directory driving red through the trained stack.
    Mirror(PathBuf),
}

impl FromStr for OpponentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<OpponentKind> {
        match s {
            "expert" => Ok(OpponentKind::Expert),
            "heuristic" => Ok(OpponentKind::Heuristic),
            "random" => Ok(OpponentKind::Random),
            other => match other.strip_prefix("mirror:") {
                Some(path) if !path.is_empty() => Ok(OpponentKind::Mirror(PathBuf::from(path))),
                _ => Err(Error::Config(format!(
                    "unknown opponent {other:?}, expected expert|heuristic|random|mirror:PATH"
                ))),
            },
        }
    }
}

impl fmt::Display for OpponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpponentKind::Expert => write!(f, "expert"),
            OpponentKind::Heuristic => write!(f, "heuristic"),
            OpponentKind::Random => write!(f, "random"),
            OpponentKind::Mirror(p) => write!(f, "mirror:{}", p.display()),
        }
    }
}

// Configs store the command-line spelling, so serialized forms stay readable
// and round-trip through the same parser.
impl serde::Serialize for OpponentKind {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for OpponentKind {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Everything one agent may legally use to decide: its own state plus the
/// perceived portion of the world, copied out of the neighbor sets.
#[derive(Debug, Clone)]
pub struct LocalView {
    pub me: AgentState,
    /// Communicable allies, ascending id.
    pub allies: Vec<AgentState>,
    /// Visible (sensed and unoccluded) enemies, ascending id.
    pub enemies: Vec<AgentState>,
    /// Sensed obstacle circles.
    pub circles: Vec<CircleObstacle>,
}

/// Builds agent `i`'s legal view of the world.
pub fn local_view(world: &WorldState, i: usize) -> LocalView {
    let sets = neighbor_sets(&world.agents, &world.obstacles, i, &world.cfg);
    LocalView {
        me: world.agents[i].clone(),
        allies: sets.allies.iter().map(|&j| world.agents[j].clone()).collect(),
        enemies: sets.enemies.iter().map(|&j| world.agents[j].clone()).collect(),
        circles: sets.obstacles.iter().map(|&k| world.obstacles.circles[k]).collect(),
    }
}

const PATROL_MARGIN: f64 = 2.0;
const WAYPOINT_RADIUS: f64 = 1.5;
const ESCAPE_DISTANCE: f64 = 5.0;
/// Obstacles further than this from the corridor centerline are ignored.
const CORRIDOR_MARGIN: f64 = 0.3;
/// Range (beyond contact) over which an obstacle bends the course.
const AVOID_INFLUENCE: f64 = 1.5;
const AVOID_GAIN: f64 = 1.2;
/// Ring positions per enemy considered by the heuristic attacker.
pub const ATTACK_RING: usize = 8;
/// Ring radius as a fraction of the attack radius.
const RING_FRACTION: f64 = 0.8;
/// Distance penalty per meter when ranking attack positions.
const APPROACH_COST: f64 = 0.05;

fn patrol_waypoints(arena: &Arena) -> [Vec2; 4] {
    let m = PATROL_MARGIN;
    [
        Vec2::new(m, m),
        Vec2::new(arena.width - m, m),
        Vec2::new(arena.width - m, arena.height - m),
        Vec2::new(m, arena.height - m),
    ]
}

/// Per-agent patrol progress, the only inter-step state of the scripted
/// policies. Agents start on different corners (`id mod 4`) so a team fans
/// out instead of stacking.
#[derive(Debug, Clone, Default)]
pub struct PatrolRoute {
    next: BTreeMap<usize, usize>,
}

impl PatrolRoute {
    pub fn reset(&mut self) {
        self.next.clear();
    }

    /// Current waypoint for `me`, advancing the circuit on arrival.
    pub fn goal(&mut self, me: &AgentState, arena: &Arena) -> Vec2 {
        let pts = patrol_waypoints(arena);
        let k = self.next.entry(me.id).or_insert(me.id % pts.len());
        if me.position.distance(pts[*k]) < WAYPOINT_RADIUS {
            *k = (*k + 1) % pts.len();
        }
        pts[*k]
    }
}

fn clamp_inset(p: Vec2, arena: &Arena, margin: f64) -> Vec2 {
    Vec2::new(
        p.x.clamp(margin, arena.width - margin),
        p.y.clamp(margin, arena.height - margin),
    )
}

/// Greedy goal-seeking with obstacle deflection.
///
/// The desired direction is bent by every sensed circle that sits near the
/// straight corridor to the goal: a radial push plus a tangential slide
/// around the blocked side. Ties on the side choice (circle dead ahead)
/// break left. Output always satisfies the action bounds; speed tapers
/// linearly inside the last meter so arrivals do not orbit the goal.
pub fn steer(
    me: &AgentState,
    goal: Vec2,
    circles: &[CircleObstacle],
    cfg: &EngagementConfig,
) -> LowerAction {
    let to_goal = goal - me.position;
    let dist = to_goal.norm();
    if dist < 1e-9 {
        return LowerAction::new(0.0, wrap_angle(me.heading));
    }
    let dir = to_goal / dist;
    let mut v = dir;
    for c in circles {
        let clearance = cfg.avoid_radius + c.radius;
        if point_segment_distance(c.center, me.position, goal) > clearance + CORRIDOR_MARGIN {
            continue;
        }
        let off = me.position - c.center;
        let gap = off.norm() - clearance;
        if gap > AVOID_INFLUENCE {
            continue;
        }
        // already-overlapping circles push harder than touching ones
        let w = ((AVOID_INFLUENCE - gap) / AVOID_INFLUENCE).clamp(0.0, 1.5);
        let away = off.unit_or(-dir);
        let cz = dir.x * (c.center.y - me.position.y) - dir.y * (c.center.x - me.position.x);
        let side = if cz > 0.0 { -1.0 } else { 1.0 };
        let tangent = dir.rotated(side * std::f64::consts::FRAC_PI_2);
        v = v + away * (AVOID_GAIN * w) + tangent * (AVOID_GAIN * w);
    }
    let heading = if v.norm() < 1e-9 {
        dir.heading()
    } else {
        v.heading()
    };
    let speed = cfg.v_max * dist.min(1.0);
    LowerAction::new(speed, wrap_angle(heading))
}

/// Fixed-priority rule player.
///
/// In order: chase the nearest visible enemy it holds an advantage over;
/// support the nearest communicable ally that is chasing or escaping; flee
/// the nearest visible enemy holding the advantage; otherwise walk the
/// patrol circuit. Returns the chosen task, the point steered toward, and
/// the bounded action.
pub fn expert_rules(
    view: &LocalView,
    patrol: &mut PatrolRoute,
    cfg: &EngagementConfig,
) -> (TaskKind, Vec2, LowerAction) {
    let me = &view.me;
    let mut choice: Option<(TaskKind, Vec2)> = None;

    let mut best = f64::INFINITY;
    for e in &view.enemies {
        if advantage(me, e) > 0.0 {
            let d = me.position.distance(e.position);
            if d < best {
                best = d;
                choice = Some((TaskKind::Chasing, e.position));
            }
        }
    }

    if choice.is_none() {
        let mut best = f64::INFINITY;
        for a in &view.allies {
            if matches!(a.task, TaskKind::Chasing | TaskKind::Escaping) {
                let d = me.position.distance(a.position);
                if d < best {
                    best = d;
                    choice = Some((TaskKind::Supporting, a.position));
                }
            }
        }
    }

    if choice.is_none() {
        let mut best = f64::INFINITY;
        let mut threat = None;
        for e in &view.enemies {
            if advantage(me, e) < 0.0 {
                let d = me.position.distance(e.position);
                if d < best {
                    best = d;
                    threat = Some(e.position);
                }
            }
        }
        if let Some(tp) = threat {
            let dir = (me.position - tp).unit_or(Vec2::new(1.0, 0.0));
            let goal = clamp_inset(me.position + dir * ESCAPE_DISTANCE, &cfg.arena, 1.0);
            choice = Some((TaskKind::Escaping, goal));
        }
    }

    let (task, goal) =
        choice.unwrap_or_else(|| (TaskKind::Searching, patrol.goal(me, &cfg.arena)));
    let action = steer(me, goal, &view.circles, cfg);
    (task, goal, action)
}

/// Candidate attack positions: a ring around the enemy at
/// `RING_FRACTION * attack_radius`, angles measured from the enemy's own
/// heading so index `ATTACK_RING / 2` is always directly behind it.
pub fn attack_candidates(enemy: &AgentState, cfg: &EngagementConfig) -> [Vec2; ATTACK_RING] {
    let r = RING_FRACTION * cfg.attack_radius;
    std::array::from_fn(|k| {
        let ang = enemy.heading + k as f64 * std::f64::consts::TAU / ATTACK_RING as f64;
        enemy.position + Vec2::from_heading(ang) * r
    })
}

/// Value of standing at `x` to attack `target`: payoff for sitting behind
/// the target's nose, minus frontal exposure to every visible enemy
/// (discounted by distance), minus a small approach cost from `me_pos`.
pub fn score_attack_position(
    x: Vec2,
    target: &AgentState,
    me_pos: Vec2,
    enemies: &[AgentState],
    cfg: &EngagementConfig,
) -> f64 {
    let facing = Vec2::from_heading(target.heading);
    let gain = -(x - target.position).unit_or(facing).dot(facing);
    let mut exposure = 0.0;
    for e in enemies {
        let out = x - e.position;
        let f = Vec2::from_heading(e.heading);
        let frontal = out.unit_or(f).dot(f).max(0.0);
        exposure += frontal * cfg.attack_radius / (cfg.attack_radius + out.norm());
    }
    gain - exposure - APPROACH_COST * me_pos.distance(x)
}

/// Highest-scoring (enemy index, ring index, position) over all candidate
/// rings. Score ties keep the earliest candidate in enemy-major, ring-minor
/// order, so the lowest index wins.
pub fn best_attack_candidate(
    me_pos: Vec2,
    enemies: &[AgentState],
    cfg: &EngagementConfig,
) -> Option<(usize, usize, Vec2)> {
    let mut best: Option<(usize, usize, Vec2)> = None;
    let mut best_score = f64::NEG_INFINITY;
    for (ei, e) in enemies.iter().enumerate() {
        for (ki, &x) in attack_candidates(e, cfg).iter().enumerate() {
            let s = score_attack_position(x, e, me_pos, enemies, cfg);
            if s > best_score {
                best_score = s;
                best = Some((ei, ki, x));
            }
        }
    }
    best
}

/// Ring-scored attacker: moves toward the best attack position around any
/// visible enemy, falling back to the expert patrol rule when nothing is
/// visible.
pub fn heuristic_attack(
    view: &LocalView,
    patrol: &mut PatrolRoute,
    cfg: &EngagementConfig,
) -> (TaskKind, Vec2, LowerAction) {
    match best_attack_candidate(view.me.position, &view.enemies, cfg) {
        Some((_, _, x)) => {
            let action = steer(&view.me, x, &view.circles, cfg);
            (TaskKind::Chasing, x, action)
        }
        None => {
            let goal = patrol.goal(&view.me, &cfg.arena);
            let action = steer(&view.me, goal, &view.circles, cfg);
            (TaskKind::Searching, goal, action)
        }
    }
}

/// Uniform action over the full bounds: speed in `[0, v_max]`, heading in
/// `(-pi, pi]`.
pub fn random_policy<R: Rng>(rng: &mut R, cfg: &EngagementConfig) -> LowerAction {
    let speed = rng.gen_range(0.0..=cfg.v_max);
    let heading = wrap_angle(rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
    LowerAction::new(speed, heading)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScriptedKind {
    Expert,
    Heuristic,
    Random,
}

/// A whole scripted team. Each step it recomputes every live agent's rule
/// from that agent's [`LocalView`] alone, writes the chosen task flag back
/// into the world, and emits one bounded action per live agent.
///
/// Rules are evaluated in ascending id order, so an agent that switches to
/// chasing is immediately supportable by higher-id teammates within the same
/// step.
#[derive(Debug, Clone)]
pub struct ScriptedOpponent {
    pub team: Team,
    kind: ScriptedKind,
    patrol: PatrolRoute,
    seed: u64,
    episodes: u64,
    rng: ChaCha8Rng,
    last: BTreeMap<usize, (TaskKind, Vec2)>,
}

impl ScriptedOpponent {
    fn new(team: Team, kind: ScriptedKind, seed: u64) -> ScriptedOpponent {
        ScriptedOpponent {
            team,
            kind,
            patrol: PatrolRoute::default(),
            seed,
            episodes: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            last: BTreeMap::new(),
        }
    }

    pub fn expert(team: Team, seed: u64) -> ScriptedOpponent {
        ScriptedOpponent::new(team, ScriptedKind::Expert, seed)
    }

    pub fn heuristic(team: Team, seed: u64) -> ScriptedOpponent {
        ScriptedOpponent::new(team, ScriptedKind::Heuristic, seed)
    }

    pub fn random(team: Team, seed: u64) -> ScriptedOpponent {
        ScriptedOpponent::new(team, ScriptedKind::Random, seed)
    }

    /// Task and steering target chosen for each live agent on the last step.
    pub fn last_decisions(&self) -> &BTreeMap<usize, (TaskKind, Vec2)> {
        &self.last
    }
}

impl TeamPolicy for ScriptedOpponent {
    fn begin_episode(&mut self, _world: &WorldState) -> Result<()> {
        self.episodes += 1;
        self.patrol.reset();
        self.last.clear();
        let ep_seed = self.seed.wrapping_add(self.episodes.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        self.rng = ChaCha8Rng::seed_from_u64(ep_seed);
        Ok(())
    }

    fn decide(&mut self, world: &mut WorldState) -> Result<Vec<(usize, LowerAction)>> {
        let ids = world.team_ids(self.team);
        let mut out = Vec::with_capacity(ids.len());
        self.last.clear();
        for &id in &ids {
            if !world.agents[id].alive {
                continue;
            }
            let (task, goal, action) = match self.kind {
                ScriptedKind::Expert => {
                    let view = local_view(world, id);
                    expert_rules(&view, &mut self.patrol, &world.cfg)
                }
                ScriptedKind::Heuristic => {
                    let view = local_view(world, id);
                    heuristic_attack(&view, &mut self.patrol, &world.cfg)
                }
                ScriptedKind::Random => {
                    let action = random_policy(&mut self.rng, &world.cfg);
                    (TaskKind::Searching, world.agents[id].position, action)
                }
            };
            world.agents[id].task = task;
            self.last.insert(id, (task, goal));
            out.push((id, action));
        }
        Ok(out)
    }
}
