//! Adam optimizer state and target-network synchronization.

use crate::error::{Error, Result};
use crate::nn::mlp::{Gradients, Mlp};
use serde::{Deserialize, Serialize};

/// Adam moments for one network, shapes mirroring its layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    m_w: Vec<Vec<f64>>,
    m_b: Vec<Vec<f64>>,
    v_w: Vec<Vec<f64>>,
    v_b: Vec<Vec<f64>>,
    pub t: u64,
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(mlp: &Mlp, alpha: f64) -> AdamState {
        AdamState {
            m_w: mlp.layers.iter().map(|l| vec![0.0; l.w.len()]).collect(),
            m_b: mlp.layers.iter().map(|l| vec![0.0; l.b.len()]).collect(),
            v_w: mlp.layers.iter().map(|l| vec![0.0; l.w.len()]).collect(),
            v_b: mlp.layers.iter().map(|l| vec![0.0; l.b.len()]).collect(),
            t: 0,
            alpha,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    fn matches(&self, mlp: &Mlp) -> bool {
        self.m_w.len() == mlp.layers.len()
            && self
                .m_w
                .iter()
                .zip(&mlp.layers)
                .all(|(m, l)| m.len() == l.w.len())
    }
}

/// One Adam update with bias correction. Non-finite gradients leave the
/// parameters and moments untouched and surface as an error so the trainer
/// can count them toward its divergence guard.
pub fn adam_step(mlp: &mut Mlp, grads: &Gradients, opt: &mut AdamState) -> Result<()> {
    if !opt.matches(mlp) || grads.layers.len() != mlp.layers.len() {
        return Err(Error::DimensionMismatch {
            expected: mlp.layers.len(),
            got: grads.layers.len(),
            context: "adam state vs network",
        });
    }
    if !grads.is_finite() {
        return Err(Error::NonFinite("gradient"));
    }
    opt.t += 1;
    let t = opt.t as i32;
    let bc1 = 1.0 - opt.beta1.powi(t);
    let bc2 = 1.0 - opt.beta2.powi(t);
    for (k, layer) in mlp.layers.iter_mut().enumerate() {
        let lg = &grads.layers[k];
        update_block(
            &mut layer.w,
            &lg.dw,
            &mut opt.m_w[k],
            &mut opt.v_w[k],
            opt.alpha,
            opt.beta1,
            opt.beta2,
            opt.eps,
            bc1,
            bc2,
        );
        update_block(
            &mut layer.b,
            &lg.db,
            &mut opt.m_b[k],
            &mut opt.v_b[k],
            opt.alpha,
            opt.beta1,
            opt.beta2,
            opt.eps,
            bc1,
            bc2,
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn update_block(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    alpha: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    bc1: f64,
    bc2: f64,
) {
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        let mhat = m[i] / bc1;
        let vhat = v[i] / bc2;
        params[i] -= alpha * mhat / (vhat.sqrt() + eps);
    }
}

/// How target networks track their online copies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SyncMode {
    /// Wholesale parameter copy.
    Hard,
    /// `target = tau * online + (1 - tau) * target`.
    Polyak(f64),
}

/// Synchronizes `target` toward `online`.
pub fn sync_target(online: &Mlp, target: &mut Mlp, mode: SyncMode) -> Result<()> {
    if !online.same_shape(target) {
        return Err(Error::DimensionMismatch {
            expected: online.param_count(),
            got: target.param_count(),
            context: "target network shape",
        });
    }
    match mode {
        SyncMode::Hard => {
            for (t, o) in target.layers.iter_mut().zip(&online.layers) {
                t.w.copy_from_slice(&o.w);
                t.b.copy_from_slice(&o.b);
            }
        }
        SyncMode::Polyak(tau) => {
            for (t, o) in target.layers.iter_mut().zip(&online.layers) {
                for (tw, ow) in t.w.iter_mut().zip(&o.w) {
                    *tw = tau * ow + (1.0 - tau) * *tw;
                }
                for (tb, ob) in t.b.iter_mut().zip(&o.b) {
                    *tb = tau * ob + (1.0 - tau) * *tb;
                }
            }
        }
    }
    Ok(())
}
