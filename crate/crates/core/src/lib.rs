//! Swarm engagement simulator with a two-layer reinforcement learning stack.
//!
//! The crate is organized bottom-up:
//!
//! - [`sim`]: the engagement world (kinematics, perception, combat);
//! - [`nn`]: a small dense-network substrate with manual backprop and Adam;
//! - [`cluster`] and [`predict`]: opponent trajectory prediction;
//! - [`policy`]: the motion-level actor-critic layer and the task-allocation
//!   value layer;
//! - [`control`]: the frozen two-layer controller and the team-policy trait;
//! - [`opponents`]: scripted and mirrored red-team controllers;
//! - [`scenario`], [`replay`], [`metrics`], [`checkpoint`]: run plumbing;
//! - [`trainer`]: cross-training, evaluation and generalization sweeps.

pub mod checkpoint;
pub mod cluster;
pub mod config;
pub mod control;
pub mod error;
pub mod geom;
pub mod metrics;
pub mod nn;
pub mod opponents;
pub mod policy;
pub mod predict;
pub mod replay;
pub mod scenario;
pub mod sim;
pub mod trainer;

pub use config::{Arena, EngagementConfig, SlotCaps};
pub use error::{Error, Result};
pub use geom::Vec2;
