//! Minimal neural substrate: dense ReLU MLPs, manual backprop, Adam, and
//! target-network synchronization.

pub mod adam;
pub mod mlp;

pub use adam::{adam_step, sync_target, AdamState, SyncMode};
pub use mlp::{ForwardCache, Gradients, Layer, LayerGrad, Mlp, OutputHead};
