//! Scenario specification and seeded instance generation.
//!
//! A [`ScenarioSpec`] is the TOML-facing description of an engagement class
//! (team sizes, spawn bands, obstacle layout); [`generate_scenario`] turns
//! one plus a seed into a concrete collision-free [`WorldState`]. The same
//! (spec, seed) pair always yields the same world.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Arena, EngagementConfig, SlotCaps};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::sim::agent::{AgentState, Team};
use crate::sim::combat::detect_collisions;
use crate::sim::obstacles::{ObstacleSet, RectObstacle};
use crate::sim::world::WorldState;

/// Axis-aligned spawn band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpawnRegion {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl SpawnRegion {
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Vec2 {
        Vec2::new(
            rng.gen_range(self.x_min..=self.x_max),
            rng.gen_range(self.y_min..=self.y_max),
        )
    }

    fn inside(&self, arena: &Arena) -> bool {
        self.x_min < self.x_max
            && self.y_min < self.y_max
            && self.x_min >= 0.0
            && self.y_min >= 0.0
            && self.x_max <= arena.width
            && self.y_max <= arena.height
    }
}

/// Obstacle placement for generated instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObstacleLayout {
    /// No obstacles at all.
    Open,
    /// Fixed, authored rectangles.
    Explicit { rects: Vec<RectObstacle> },
    /// Seeded random rectangles in the middle of the arena, kept clear of
    /// both spawn bands.
    Random {
        count: usize,
        min_size: f64,
        max_size: f64,
    },
}

/// One engagement class. `blue`/`red` team sizes follow the V-notation
/// (`versus(5)` is five against five).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub blue: usize,
    pub red: usize,
    pub blue_region: SpawnRegion,
    pub red_region: SpawnRegion,
    /// Required distance between every blue/red spawn pair.
    pub min_team_separation: f64,
    pub obstacles: ObstacleLayout,
    /// Mirror the red team (and obstacles) through the arena center instead
    /// of sampling them; used for fair self-play matches.
    pub symmetric: bool,
    pub engagement: EngagementConfig,
    pub caps: SlotCaps,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec::versus(3)
    }
}

impl ScenarioSpec {
    /// `n` against `n` in the standard spawn bands with two random obstacle
    /// blocks between them.
    pub fn versus(n: usize) -> ScenarioSpec {
        ScenarioSpec {
            blue: n,
            red: n,
            blue_region: SpawnRegion {
                x_min: 8.0,
                x_max: 12.0,
                y_min: 4.0,
                y_max: 16.0,
            },
            red_region: SpawnRegion {
                x_min: 18.0,
                x_max: 22.0,
                y_min: 4.0,
                y_max: 16.0,
            },
            min_team_separation: 5.0,
            obstacles: ObstacleLayout::Random {
                count: 2,
                min_size: 1.5,
                max_size: 3.0,
            },
            symmetric: false,
            engagement: EngagementConfig::default(),
            caps: SlotCaps::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.engagement.validate()?;
        if self.blue == 0 || self.red == 0 {
            return Err(Error::Config("team sizes must be at least 1".into()));
        }
        let arena = &self.engagement.arena;
        if !self.blue_region.inside(arena) {
            return Err(Error::Config("blue spawn region leaves the arena".into()));
        }
        if !self.symmetric && !self.red_region.inside(arena) {
            return Err(Error::Config("red spawn region leaves the arena".into()));
        }
        if self.min_team_separation < 0.0 {
            return Err(Error::Config("team separation cannot be negative".into()));
        }
        if let ObstacleLayout::Random {
            count,
            min_size,
            max_size,
        } = &self.obstacles
        {
            if *count > 0 && !(0.0 < *min_size && min_size <= max_size) {
                return Err(Error::Config(format!(
                    "bad obstacle size range {min_size}..{max_size}"
                )));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(Error::from)
    }

    pub fn from_toml(s: &str) -> Result<ScenarioSpec> {
        let spec: ScenarioSpec = toml::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Deterministic per-instance seed stream.
pub fn instance_seed(base: u64, index: usize) -> u64 {
    // splitmix-style spacing keeps neighboring instances decorrelated
    base.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

const PLACEMENT_TRIES: usize = 20_000;
/// Extra slack over the exact contact thresholds so a freshly generated
/// world is not already on a collision boundary.
const SPAWN_SLACK: f64 = 0.05;

fn point_reflect(p: Vec2, center: Vec2) -> Vec2 {
    Vec2::new(2.0 * center.x - p.x, 2.0 * center.y - p.y)
}

fn rect_overlaps_region(rect: &RectObstacle, region: &SpawnRegion, margin: f64) -> bool {
    let lo = rect.min();
    let hi = rect.max();
    !(hi.x < region.x_min - margin
        || lo.x > region.x_max + margin
        || hi.y < region.y_min - margin
        || lo.y > region.y_max + margin)
}

fn random_rects(
    spec: &ScenarioSpec,
    count: usize,
    min_size: f64,
    max_size: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<RectObstacle>> {
    let arena = &spec.engagement.arena;
    let center = arena.center();
    let mut rects = Vec::with_capacity(count);
    // symmetric layouts place mirrored pairs, odd counts add one centered block
    let (pairs, centered) = if spec.symmetric {
        (count / 2, count % 2 == 1)
    } else {
        (0, false)
    };
    let singles = if spec.symmetric { 0 } else { count };

    let place = |rects: &mut Vec<RectObstacle>, rng: &mut ChaCha8Rng| -> Result<RectObstacle> {
        for _ in 0..PLACEMENT_TRIES {
            let width = rng.gen_range(min_size..=max_size);
            let height = rng.gen_range(min_size..=max_size);
            let rect = RectObstacle {
                center: Vec2::new(
                    rng.gen_range(0.5 * width + 1.0..=arena.width - 0.5 * width - 1.0),
                    rng.gen_range(0.5 * height + 1.0..=arena.height - 0.5 * height - 1.0),
                ),
                width,
                height,
            };
            let blocked = rect_overlaps_region(&rect, &spec.blue_region, 1.0)
                || (!spec.symmetric && rect_overlaps_region(&rect, &spec.red_region, 1.0))
                || (spec.symmetric && {
                    let mirrored = RectObstacle {
                        center: point_reflect(rect.center, center),
                        ..rect
                    };
                    rect_overlaps_region(&mirrored, &spec.blue_region, 1.0)
                })
                || rects
                    .iter()
                    .any(|r: &RectObstacle| rect_overlaps_region(&rect, &to_region(r), 0.5));
            if !blocked {
                return Ok(rect);
            }
        }
        Err(Error::Infeasible(
            "could not place obstacle rectangles clear of the spawn bands".into(),
        ))
    };

    for _ in 0..singles {
        let r = place(&mut rects, rng)?;
        rects.push(r);
    }
    for _ in 0..pairs {
        let r = place(&mut rects, rng)?;
        let mirrored = RectObstacle {
            center: point_reflect(r.center, center),
            ..r
        };
        rects.push(r);
        rects.push(mirrored);
    }
    if centered {
        let width = rng.gen_range(min_size..=max_size);
        let height = rng.gen_range(min_size..=max_size);
        rects.push(RectObstacle {
            center,
            width,
            height,
        });
    }
    Ok(rects)
}

fn to_region(rect: &RectObstacle) -> SpawnRegion {
    let lo = rect.min();
    let hi = rect.max();
    SpawnRegion {
        x_min: lo.x,
        x_max: hi.x,
        y_min: lo.y,
        y_max: hi.y,
    }
}

fn clear_of_world(p: Vec2, placed: &[Vec2], obstacles: &ObstacleSet, cfg: &EngagementConfig) -> bool {
    let agent_sep = 2.0 * cfg.avoid_radius + SPAWN_SLACK;
    if placed.iter().any(|&q| p.distance(q) < agent_sep) {
        return false;
    }
    obstacles
        .circles
        .iter()
        .all(|c| p.distance(c.center) >= cfg.avoid_radius + c.radius + SPAWN_SLACK)
}

/// Builds a concrete world from a spec and a seed.
///
/// Obstacles are placed first, then blue spawns by rejection sampling inside
/// its band, then red (sampled in its own band, or mirrored through the
/// arena center when the spec is symmetric). Placement guarantees no initial
/// collisions and at least `min_team_separation` between every cross-team
/// pair; a spec too crowded to satisfy that within the try budget is
/// reported infeasible.
pub fn generate_scenario(spec: &ScenarioSpec, seed: u64) -> Result<WorldState> {
    spec.validate()?;
    let cfg = spec.engagement;
    let arena = cfg.arena;
    let center = arena.center();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let rects = match &spec.obstacles {
        ObstacleLayout::Open => Vec::new(),
        ObstacleLayout::Explicit { rects } => {
            if spec.symmetric {
                for r in rects {
                    let mirrored = point_reflect(r.center, center);
                    if !rects.iter().any(|o| {
                        (o.center - mirrored).norm() < 1e-9
                            && (o.width - r.width).abs() < 1e-9
                            && (o.height - r.height).abs() < 1e-9
                    }) {
                        return Err(Error::Config(
                            "symmetric scenarios need a point-symmetric obstacle layout".into(),
                        ));
                    }
                }
            }
            rects.clone()
        }
        ObstacleLayout::Random {
            count,
            min_size,
            max_size,
        } => random_rects(spec, *count, *min_size, *max_size, &mut rng)?,
    };
    let obstacles = ObstacleSet::from_rects(rects, cfg.obstacle_radius)?;

    let mut blue = Vec::with_capacity(spec.blue);
    let mut red_mirror = Vec::with_capacity(spec.blue);
    for _ in 0..spec.blue {
        let mut placed = false;
        for _ in 0..PLACEMENT_TRIES {
            let p = spec.blue_region.sample(&mut rng);
            let mut all: Vec<Vec2> = blue.clone();
            all.extend_from_slice(&red_mirror);
            if !clear_of_world(p, &all, &obstacles, &cfg) {
                continue;
            }
            if spec.symmetric {
                let m = point_reflect(p, center);
                // the mirror must itself be collision-free and far enough
                // from every blue spawn (including its own source)
                if !clear_of_world(m, &all, &obstacles, &cfg) {
                    continue;
                }
                let sep_ok = blue.iter().chain(std::iter::once(&p)).all(|&b| {
                    red_mirror
                        .iter()
                        .chain(std::iter::once(&m))
                        .all(|&r| b.distance(r) >= spec.min_team_separation)
                });
                if !sep_ok {
                    continue;
                }
                red_mirror.push(m);
            }
            blue.push(p);
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::Infeasible(format!(
                "could not place {} blue agents in the spawn band",
                spec.blue
            )));
        }
    }

    let red: Vec<Vec2> = if spec.symmetric {
        if spec.red != spec.blue {
            return Err(Error::Config(
                "symmetric scenarios need equal team sizes".into(),
            ));
        }
        red_mirror
    } else {
        let mut red = Vec::with_capacity(spec.red);
        for _ in 0..spec.red {
            let mut placed = false;
            for _ in 0..PLACEMENT_TRIES {
                let p = spec.red_region.sample(&mut rng);
                let mut all = blue.clone();
                all.extend_from_slice(&red);
                if !clear_of_world(p, &all, &obstacles, &cfg) {
                    continue;
                }
                if blue.iter().any(|&b| b.distance(p) < spec.min_team_separation) {
                    continue;
                }
                red.push(p);
                placed = true;
                break;
            }
            if !placed {
                return Err(Error::Infeasible(format!(
                    "could not place {} red agents in the spawn band",
                    spec.red
                )));
            }
        }
        red
    };

    let mut agents = Vec::with_capacity(spec.blue + spec.red);
    for (k, &p) in blue.iter().enumerate() {
        agents.push(AgentState::new(k, Team::Blue, p, 0.0));
    }
    for (k, &p) in red.iter().enumerate() {
        agents.push(AgentState::new(
            spec.blue + k,
            Team::Red,
            p,
            std::f64::consts::PI,
        ));
    }

    let world = WorldState::new(agents, obstacles, cfg, spec.caps, seed)?;
    debug_assert!(detect_collisions(&world.agents, &world.obstacles, &world.cfg)
        .iter()
        .all(|&hit| !hit));
    Ok(world)
}
