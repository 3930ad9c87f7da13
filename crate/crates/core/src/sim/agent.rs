use crate::geom::Vec2;
use serde::{Deserialize, Serialize};

/// Side an agent fights on. `Blue` is the learning team, `Red` the opponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Team {
    Blue,
    Red,
}

impl Team {
    pub fn opponent(self) -> Team {
        match self {
            Team::Blue => Team::Red,
            Team::Red => Team::Blue,
        }
    }
}

/// Behavioral task an agent is currently assigned. The numeric codes are the
/// values written into observations and logs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Searching,
    Escaping,
    Supporting,
    Chasing,
}

impl TaskKind {
    pub fn code(self) -> i8 {
        match self {
            TaskKind::Searching => -3,
            TaskKind::Escaping => -2,
            TaskKind::Supporting => -1,
            TaskKind::Chasing => 0,
        }
    }

    pub fn from_code(code: i8) -> Option<TaskKind> {
        match code {
            -3 => Some(TaskKind::Searching),
            -2 => Some(TaskKind::Escaping),
            -1 => Some(TaskKind::Supporting),
            0 => Some(TaskKind::Chasing),
            _ => None,
        }
    }
}

/// Full per-agent state carried by the world.
///
/// `heading` is the direction of the last nonzero velocity; it anchors the
/// sensing rectangle and the attack sector while the agent is stationary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: usize,
    pub team: Team,
    pub position: Vec2,
    pub velocity: Vec2,
    pub heading: f64,
    pub task: TaskKind,
    pub alive: bool,
}

impl AgentState {
    pub fn new(id: usize, team: Team, position: Vec2, heading: f64) -> Self {
        AgentState {
            id,
            team,
            position,
            velocity: Vec2::ZERO,
            heading,
            task: TaskKind::Searching,
            alive: true,
        }
    }

    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_codes_round_trip() {
        for t in [
            TaskKind::Searching,
            TaskKind::Escaping,
            TaskKind::Supporting,
            TaskKind::Chasing,
        ] {
            assert_eq!(TaskKind::from_code(t.code()), Some(t));
        }
        assert_eq!(TaskKind::from_code(3), None);
    }

    #[test]
    fn task_codes_match_contract() {
        assert_eq!(TaskKind::Searching.code(), -3);
        assert_eq!(TaskKind::Escaping.code(), -2);
        assert_eq!(TaskKind::Supporting.code(), -1);
        assert_eq!(TaskKind::Chasing.code(), 0);
    }
}
