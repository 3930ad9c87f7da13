//! Dense ReLU networks with manual backprop.
//!
//! Policy and value heads everywhere in the crate are MLPs with hidden sizes
//! 128/64/32. Everything is plain `Vec<f64>` so the hot loops vectorize and
//! checkpoints serialize trivially.

use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// One dense layer, weights stored row-major `[out x in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Layer {
    fn forward_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.out_dim {
            let row = &self.w[o * self.in_dim..(o + 1) * self.in_dim];
            let mut acc = self.b[o];
            for (wi, xi) in row.iter().zip(x) {
                acc += wi * xi;
            }
            out.push(acc);
        }
    }
}

/// Output transform applied after the last affine layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OutputHead {
    /// Raw affine outputs (value heads, action-value heads).
    Linear,
    /// Per-component `tanh` squash rescaled into `(lo, hi)` (policy heads).
    Bounded { lo: Vec<f64>, hi: Vec<f64> },
}

/// Gradient of the parameters of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub dw: Vec<f64>,
    pub db: Vec<f64>,
}

/// Parameter gradients for a whole network, same shapes as `Mlp::layers`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn zeros_like(mlp: &Mlp) -> Gradients {
        Gradients {
            layers: mlp
                .layers
                .iter()
                .map(|l| LayerGrad {
                    dw: vec![0.0; l.w.len()],
                    db: vec![0.0; l.b.len()],
                })
                .collect(),
        }
    }

    /// `self += other * scale`, used to accumulate batch averages.
    pub fn add_scaled(&mut self, other: &Gradients, scale: f64) {
        debug_assert_eq!(self.layers.len(), other.layers.len());
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.dw.iter_mut().zip(&b.dw) {
                *x += y * scale;
            }
            for (x, y) in a.db.iter_mut().zip(&b.db) {
                *x += y * scale;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.dw.iter().all(|v| v.is_finite()) && l.db.iter().all(|v| v.is_finite())
        })
    }
}

/// Activations recorded by a forward pass, consumed by `backward`.
///
/// `acts[0]` is the input, `acts[k]` the post-ReLU output of hidden layer
/// `k`, and `z_out` the pre-head output of the last layer.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    acts: Vec<Vec<f64>>,
    z_out: Vec<f64>,
}

impl ForwardCache {
    pub fn pre_head(&self) -> &[f64] {
        &self.z_out
    }
}

/// A fully-connected ReLU network with an output head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Layer>,
    pub head: OutputHead,
}

impl Mlp {
    /// He-uniform initialization: weights uniform in
    /// `[-sqrt(6 / fan_in), sqrt(6 / fan_in)]`, biases zero.
    pub fn new<R: Rng>(dims: &[usize], head: OutputHead, rng: &mut R) -> Result<Mlp> {
        if dims.len() < 2 || dims.iter().any(|&d| d == 0) {
            return Err(Error::Config(format!("bad layer dims {dims:?}")));
        }
        if let OutputHead::Bounded { lo, hi } = &head {
            let out = *dims.last().unwrap();
            if lo.len() != out || hi.len() != out {
                return Err(Error::DimensionMismatch {
                    expected: out,
                    got: lo.len().min(hi.len()),
                    context: "bounded head ranges",
                });
            }
            if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                return Err(Error::Config("bounded head needs lo < hi".into()));
            }
        }
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for win in dims.windows(2) {
            let (fan_in, fan_out) = (win[0], win[1]);
            let limit = (6.0 / fan_in as f64).sqrt();
            let w = (0..fan_in * fan_out)
                .map(|_| rng.gen_range(-limit..limit))
                .collect();
            layers.push(Layer {
                w,
                b: vec![0.0; fan_out],
                in_dim: fan_in,
                out_dim: fan_out,
            });
        }
        Ok(Mlp { layers, head })
    }

    /// Hidden sizes used by every policy and value network in the crate.
    pub const HIDDEN: [usize; 3] = [128, 64, 32];

    /// `[input, 128, 64, 32, output]`.
    pub fn policy_dims(input: usize, output: usize) -> Vec<usize> {
        let mut dims = Vec::with_capacity(Self::HIDDEN.len() + 2);
        dims.push(input);
        dims.extend_from_slice(&Self::HIDDEN);
        dims.push(output);
        dims
    }

    pub fn in_dim(&self) -> usize {
        self.layers.first().map(|l| l.in_dim).unwrap_or(0)
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map(|l| l.out_dim).unwrap_or(0)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn same_shape(&self, other: &Mlp) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.in_dim == b.in_dim && a.out_dim == b.out_dim)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.in_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim(),
                got: x.len(),
                context: "mlp input",
            });
        }
        Ok(())
    }

    /// Plain forward pass.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.apply_head(&self.forward_raw(x)?))
    }

    /// Forward pass stopping before the head. Exploration noise is injected
    /// on this pre-squash output so squashing keeps actions in range.
    pub fn forward_raw(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            layer.forward_into(&cur, &mut next);
            if k != last {
                for v in next.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Applies the output head to a pre-head vector.
    pub fn apply_head(&self, z: &[f64]) -> Vec<f64> {
        match &self.head {
            OutputHead::Linear => z.to_vec(),
            OutputHead::Bounded { lo, hi } => z
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(&zk, (&l, &h))| {
                    let y = l + (h - l) * 0.5 * (zk.tanh() + 1.0);
                    // tanh saturates to exactly 1.0 in floats for large z;
                    // nudge back so outputs stay strictly inside (lo, hi).
                    if y >= h {
                        h.next_down()
                    } else if y <= l {
                        l.next_up()
                    } else {
                        y
                    }
                })
                .collect(),
        }
    }

    /// Forward pass that records activations for a later `backward`.
    pub fn forward_cached(&self, x: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        self.check_input(x)?;
        let mut acts = Vec::with_capacity(self.layers.len());
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for (k, layer) in self.layers.iter().enumerate() {
            layer.forward_into(&cur, &mut next);
            if k != last {
                for v in next.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
                acts.push(next.clone());
            }
            std::mem::swap(&mut cur, &mut next);
        }
        let z_out = cur;
        let y = self.apply_head(&z_out);
        Ok((
            y,
            ForwardCache {
                acts,
                z_out,
            },
        ))
    }

    /// Backpropagates `dy` (gradient of a scalar loss with respect to the
    /// post-head output) through the network. Returns parameter gradients and
    /// the gradient with respect to the input, which the actor update chains
    /// through a critic.
    pub fn backward(&self, cache: &ForwardCache, dy: &[f64]) -> Result<(Gradients, Vec<f64>)> {
        if dy.len() != self.out_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.out_dim(),
                got: dy.len(),
                context: "upstream gradient",
            });
        }
        // Through the head.
        let mut delta: Vec<f64> = match &self.head {
            OutputHead::Linear => dy.to_vec(),
            OutputHead::Bounded { lo, hi } => dy
                .iter()
                .zip(cache.z_out.iter())
                .zip(lo.iter().zip(hi))
                .map(|((&g, &z), (&l, &h))| {
                    let t = z.tanh();
                    g * (h - l) * 0.5 * (1.0 - t * t)
                })
                .collect(),
        };

        let mut grads = Gradients::zeros_like(self);
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let below = &cache.acts[k];
            let lg = &mut grads.layers[k];
            for o in 0..layer.out_dim {
                let d = delta[o];
                lg.db[o] = d;
                let row = &mut lg.dw[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (slot, &a) in row.iter_mut().zip(below) {
                    *slot = d * a;
                }
            }
            // dx = W^T delta, gated by ReLU' for hidden layers.
            let mut dx = vec![0.0; layer.in_dim];
            for o in 0..layer.out_dim {
                let d = delta[o];
                let row = &layer.w[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (slot, &w) in dx.iter_mut().zip(row) {
                    *slot += w * d;
                }
            }
            if k > 0 {
                for (slot, &a) in dx.iter_mut().zip(below) {
                    if a <= 0.0 {
                        *slot = 0.0;
                    }
                }
            }
            delta = dx;
        }
        Ok((grads, delta))
    }
}
