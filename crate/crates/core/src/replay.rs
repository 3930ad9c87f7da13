//! Replay logging: one JSON line per world state, first line carrying the
//! static context (config, caps, obstacles) so a file is self-contained.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{EngagementConfig, SlotCaps};
use crate::error::{Error, Result};
use crate::sim::agent::{AgentState, Team};
use crate::sim::obstacles::ObstacleSet;
use crate::sim::world::WorldState;

pub const REPLAY_SCHEMA: u32 = 1;

/// Static run context, present only on the first line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayContext {
    pub schema: u32,
    pub cfg: EngagementConfig,
    pub caps: SlotCaps,
    pub obstacles: ObstacleSet,
}

/// One logged world state. `step` 0 is the initial state, so a run of `n`
/// simulated steps produces `n + 1` lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayFrame {
    pub step: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<ReplayContext>,
    pub agents: Vec<AgentState>,
}

impl ReplayFrame {
    /// Live agents per team, `(blue, red)`.
    pub fn survivors(&self) -> (usize, usize) {
        let blue = self
            .agents
            .iter()
            .filter(|a| a.alive && a.team == Team::Blue)
            .count();
        let red = self
            .agents
            .iter()
            .filter(|a| a.alive && a.team == Team::Red)
            .count();
        (blue, red)
    }
}

/// Streams frames to a JSONL sink.
pub struct ReplayWriter<W: Write> {
    out: W,
    lines: usize,
}

impl ReplayWriter<BufWriter<File>> {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(ReplayWriter::new(BufWriter::new(File::create(path)?)))
    }
}

impl<W: Write> ReplayWriter<W> {
    pub fn new(out: W) -> Self {
        ReplayWriter { out, lines: 0 }
    }

    /// Writes the current world state. The first frame written carries the
    /// context block.
    pub fn record(&mut self, world: &WorldState) -> Result<()> {
        let context = if self.lines == 0 {
            Some(ReplayContext {
                schema: REPLAY_SCHEMA,
                cfg: world.cfg,
                caps: world.caps,
                obstacles: world.obstacles.clone(),
            })
        } else {
            None
        };
        let frame = ReplayFrame {
            step: world.step_index,
            context,
            agents: world.agents.clone(),
        };
        serde_json::to_writer(&mut self.out, &frame)?;
        self.out.write_all(b"\n")?;
        self.lines += 1;
        Ok(())
    }

    /// Flushes and returns the number of lines written.
    pub fn finish(mut self) -> Result<usize> {
        self.out.flush()?;
        Ok(self.lines)
    }
}

/// Loads a whole replay, validating the leading context line.
pub fn read_replay<R: Read>(reader: R) -> Result<Vec<ReplayFrame>> {
    let mut frames = Vec::new();
    for (k, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let frame: ReplayFrame = serde_json::from_str(&line)?;
        if k == 0 {
            match &frame.context {
                Some(ctx) if ctx.schema == REPLAY_SCHEMA => {}
                Some(ctx) => {
                    return Err(Error::Config(format!(
                        "replay schema {} not supported (expected {REPLAY_SCHEMA})",
                        ctx.schema
                    )))
                }
                None => {
                    return Err(Error::Config(
                        "replay is missing its context line".into(),
                    ))
                }
            }
        }
        frames.push(frame);
    }
    if frames.is_empty() {
        return Err(Error::Config("replay holds no frames".into()));
    }
    Ok(frames)
}

pub fn read_replay_file(path: &Path) -> Result<Vec<ReplayFrame>> {
    read_replay(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::TeamPolicy;
    use crate::geom::Vec2;
    use crate::opponents::ScriptedOpponent;
    use crate::scenario::{generate_scenario, ScenarioSpec};
    use crate::sim::kinematics::LowerAction;
    use crate::sim::world::step_world;

    #[test]
    fn line_count_is_steps_plus_one() {
        let mut world = generate_scenario(&ScenarioSpec::versus(3), 5).unwrap();
        let mut buf = Vec::new();
        let mut writer = ReplayWriter::new(&mut buf);
        writer.record(&world).unwrap();
        let steps = 12;
        for _ in 0..steps {
            let actions: Vec<Option<LowerAction>> = world
                .agents
                .iter()
                .map(|a| a.alive.then_some(LowerAction::HOLD))
                .collect();
            step_world(&mut world, &actions).unwrap();
            writer.record(&world).unwrap();
        }
        let lines = writer.finish().unwrap();
        assert_eq!(lines, steps + 1);
        assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), steps + 1);
    }

    #[test]
    fn round_trip_reproduces_the_terminal_state() {
        let mut world = generate_scenario(&ScenarioSpec::versus(3), 9).unwrap();
        let mut red = ScriptedOpponent::heuristic(crate::sim::agent::Team::Red, 1);
        let mut blue = ScriptedOpponent::expert(crate::sim::agent::Team::Blue, 2);
        red.begin_episode(&world).unwrap();
        blue.begin_episode(&world).unwrap();

        let mut buf = Vec::new();
        let mut writer = ReplayWriter::new(&mut buf);
        writer.record(&world).unwrap();
        for _ in 0..60 {
            let b = blue.decide(&mut world).unwrap();
            let r = red.decide(&mut world).unwrap();
            let joint = crate::control::joint_actions(world.agents.len(), &[b, r]);
            let events = step_world(&mut world, &joint).unwrap();
            writer.record(&world).unwrap();
            if events.terminal() {
                break;
            }
        }
        writer.finish().unwrap();

        let frames = read_replay(&buf[..]).unwrap();
        let last = frames.last().unwrap();
        let live: Vec<(usize, Vec2)> = world
            .agents
            .iter()
            .filter(|a| a.alive)
            .map(|a| (a.id, a.position))
            .collect();
        let loaded: Vec<(usize, Vec2)> = last
            .agents
            .iter()
            .filter(|a| a.alive)
            .map(|a| (a.id, a.position))
            .collect();
        assert_eq!(live, loaded);
        let (blue_alive, red_alive) = last.survivors();
        assert_eq!(
            blue_alive,
            world
                .agents
                .iter()
                .filter(|a| a.alive && a.team == Team::Blue)
                .count()
        );
        assert_eq!(
            red_alive,
            world
                .agents
                .iter()
                .filter(|a| a.alive && a.team == Team::Red)
                .count()
        );
        // context restored from the first line matches the run
        let ctx = frames[0].context.as_ref().unwrap();
        assert_eq!(ctx.obstacles, world.obstacles);
        assert_eq!(ctx.cfg, world.cfg);
    }

    #[test]
    fn schemaless_or_empty_replays_are_rejected() {
        assert!(read_replay(&b""[..]).is_err());
        // a bare frame without the context line
        let frame = ReplayFrame {
            step: 0,
            context: None,
            agents: vec![],
        };
        let line = serde_json::to_string(&frame).unwrap();
        assert!(read_replay(line.as_bytes()).is_err());
        // future schema versions are refused, not misread
        let ctx = ReplayContext {
            schema: REPLAY_SCHEMA + 1,
            cfg: EngagementConfig::default(),
            caps: SlotCaps::default(),
            obstacles: ObstacleSet::empty(),
        };
        let frame = ReplayFrame {
            step: 0,
            context: Some(ctx),
            agents: vec![],
        };
        let line = serde_json::to_string(&frame).unwrap();
        assert!(read_replay(line.as_bytes()).is_err());
    }
}
