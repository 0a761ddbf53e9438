use ndarray::{s, Array2, ArrayView2};
use rand::Rng;

use super::layer::{grad_tensors, split_cols, Activation, Dense, DenseGrad, Stack, StackCache};
use crate::error::{Error, Result};
use crate::worldsim::{Action, V_MAX, V_MIN, W_MAX, W_MIN};

pub const ACTION_DIM: usize = 2;
pub const DEFAULT_WIDTH_MIN: usize = 16;
pub const DEFAULT_WIDTH_MAX: usize = 512;

const ACTION_MID: [f64; 2] = [(V_MAX + V_MIN) / 2.0, (W_MAX + W_MIN) / 2.0];
const ACTION_HALF: [f64; 2] = [(V_MAX - V_MIN) / 2.0, (W_MAX - W_MIN) / 2.0];
const OUTPUT_INIT: f64 = 3e-3;

/// Hidden-layer widths of one network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkShape {
    pub widths: Vec<usize>,
}

impl NetworkShape {
    pub fn new(widths: Vec<usize>) -> Self {
        Self { widths }
    }

    /// Three hidden widths.
    pub fn actor(a: usize, b: usize, c: usize) -> Self {
        Self::new(vec![a, b, c])
    }

    /// Two embedding widths then two joint widths.
    pub fn critic(e1: usize, e2: usize, j1: usize, j2: usize) -> Self {
        Self::new(vec![e1, e2, j1, j2])
    }

    pub fn within(&self, min: usize, max: usize) -> bool {
        self.widths.iter().all(|w| (min..=max).contains(w))
    }
}

fn he_bound(fan_in: usize) -> f64 {
    (6.0 / fan_in as f64).sqrt()
}

fn hidden_stack<R: Rng + ?Sized>(input: usize, widths: &[usize], rng: &mut R) -> Vec<Dense> {
    let mut layers = Vec::new();
    let mut prev = input;
    for &w in widths {
        layers.push(Dense::uniform(prev, w, he_bound(prev), Activation::Relu, rng));
        prev = w;
    }
    layers
}

fn check_width(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

fn join(embedding: &Array2<f64>, action: ArrayView2<f64>) -> Array2<f64> {
    let (n, e) = embedding.dim();
    let mut x = Array2::zeros((n, e + action.ncols()));
    x.slice_mut(s![.., ..e]).assign(embedding);
    x.slice_mut(s![.., e..]).assign(&action);
    x
}

fn row(input: &[f64]) -> ArrayView2<'_, f64> {
    ArrayView2::from_shape((1, input.len()), input).expect("contiguous row")
}

/// Deterministic policy: three ReLU layers, then a tanh head affinely mapped
/// onto the action bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Actor {
    pub net: Stack,
}

/// Actor forward state retained for backprop.
pub struct ActorCache {
    inner: StackCache,
}

impl Actor {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, shape: &NetworkShape, rng: &mut R) -> Self {
        assert_eq!(shape.widths.len(), 3, "actor shape has three hidden widths");
        let mut layers = hidden_stack(obs_dim, &shape.widths, rng);
        let last = *shape.widths.last().unwrap();
        layers.push(Dense::uniform(last, ACTION_DIM, OUTPUT_INIT, Activation::Tanh, rng));
        Self { net: Stack { layers } }
    }

    pub fn input_dim(&self) -> usize {
        self.net.inputs()
    }

    pub fn shape(&self) -> NetworkShape {
        NetworkShape::new(self.net.layers[..self.net.layers.len() - 1].iter().map(Dense::outputs).collect())
    }

    fn squash(mut y: Array2<f64>) -> Array2<f64> {
        for mut r in y.rows_mut() {
            for k in 0..ACTION_DIM {
                r[k] = ACTION_MID[k] + ACTION_HALF[k] * r[k];
            }
        }
        y
    }

    /// Batch of actions, one row per observation row.
    pub fn forward_batch(&self, obs: ArrayView2<f64>) -> Array2<f64> {
        Self::squash(self.net.forward(obs))
    }

    pub fn forward(&self, obs: &[f64]) -> Result<Vec<f64>> {
        check_width(self.input_dim(), obs.len())?;
        Ok(self.forward_batch(row(obs)).into_raw_vec())
    }

    pub fn act(&self, obs: &[f64]) -> Result<Action> {
        let a = self.forward(obs)?;
        Ok(Action::new(a[0], a[1]))
    }

    pub fn forward_cached(&self, obs: Array2<f64>) -> (Array2<f64>, ActorCache) {
        let inner = self.net.forward_cached(obs);
        (Self::squash(inner.output().clone()), ActorCache { inner })
    }

    /// `upstream` is dL/d(action). Returns parameter gradients and dL/d(obs).
    pub fn backward(&self, cache: &ActorCache, mut upstream: Array2<f64>) -> (Vec<DenseGrad>, Array2<f64>) {
        for mut r in upstream.rows_mut() {
            for k in 0..ACTION_DIM {
                r[k] *= ACTION_HALF[k];
            }
        }
        self.net.backward(&cache.inner, upstream)
    }

    /// Parameter gradients only.
    pub fn param_gradients(&self, cache: &ActorCache, mut upstream: Array2<f64>) -> Vec<DenseGrad> {
        for mut r in upstream.rows_mut() {
            for k in 0..ACTION_DIM {
                r[k] *= ACTION_HALF[k];
            }
        }
        self.net.param_gradients(&cache.inner, upstream)
    }

    pub fn gradients(&self, obs: &[f64], upstream: &[f64]) -> Result<(Vec<DenseGrad>, Vec<f64>)> {
        check_width(self.input_dim(), obs.len())?;
        check_width(ACTION_DIM, upstream.len())?;
        let (_, cache) = self.forward_cached(row(obs).to_owned());
        let (g, dx) = self.backward(&cache, row(upstream).to_owned());
        Ok((g, dx.into_raw_vec()))
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        self.net.tensors()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.net.tensors_mut()
    }
}

/// Q(o, a): two-layer observation embedding, concatenated with the raw
/// action, then two joint ReLU layers and a linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct Critic {
    pub embed: Stack,
    pub joint: Stack,
}

pub struct CriticCache {
    embed: StackCache,
    joint: StackCache,
}

/// Critic gradients w.r.t. parameters and both inputs.
pub struct CriticGrads {
    pub embed: Vec<DenseGrad>,
    pub joint: Vec<DenseGrad>,
    pub d_obs: Array2<f64>,
    pub d_action: Array2<f64>,
}

impl CriticGrads {
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut t = grad_tensors(&self.embed);
        t.extend(grad_tensors(&self.joint));
        t
    }
}

impl Critic {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, shape: &NetworkShape, rng: &mut R) -> Self {
        assert_eq!(shape.widths.len(), 4, "critic shape has two embedding and two joint widths");
        let embed = Stack { layers: hidden_stack(obs_dim, &shape.widths[..2], rng) };
        let mut joint = hidden_stack(shape.widths[1] + ACTION_DIM, &shape.widths[2..], rng);
        joint.push(Dense::uniform(shape.widths[3], 1, OUTPUT_INIT, Activation::Linear, rng));
        Self { embed, joint: Stack { layers: joint } }
    }

    pub fn obs_dim(&self) -> usize {
        self.embed.inputs()
    }

    pub fn shape(&self) -> NetworkShape {
        let mut w: Vec<usize> = self.embed.layers.iter().map(Dense::outputs).collect();
        w.extend(self.joint.layers[..self.joint.layers.len() - 1].iter().map(Dense::outputs));
        NetworkShape::new(w)
    }

    pub fn forward_batch(&self, obs: ArrayView2<f64>, action: ArrayView2<f64>) -> Array2<f64> {
        let e = self.embed.forward(obs);
        self.joint.forward(join(&e, action).view())
    }

    pub fn forward(&self, obs: &[f64], action: &[f64]) -> Result<f64> {
        check_width(self.obs_dim(), obs.len())?;
        check_width(ACTION_DIM, action.len())?;
        Ok(self.forward_batch(row(obs), row(action))[[0, 0]])
    }

    pub fn forward_cached(&self, obs: Array2<f64>, action: ArrayView2<f64>) -> (Array2<f64>, CriticCache) {
        let embed = self.embed.forward_cached(obs);
        let joint = self.joint.forward_cached(join(embed.output(), action));
        (joint.output().clone(), CriticCache { embed, joint })
    }

    /// `upstream` is dL/dQ, one row per sample.
    pub fn backward(&self, cache: &CriticCache, upstream: Array2<f64>) -> CriticGrads {
        let (joint, dx) = self.joint.backward(&cache.joint, upstream);
        let (de, d_action) = split_cols(&dx, self.embed.outputs());
        let (embed, d_obs) = self.embed.backward(&cache.embed, de);
        CriticGrads { embed, joint, d_obs, d_action }
    }

    /// Parameter gradients in `tensors()` order, without input gradients.
    pub fn param_gradients(&self, cache: &CriticCache, upstream: Array2<f64>) -> Vec<DenseGrad> {
        let (mut joint, dx) = self.joint.backward(&cache.joint, upstream);
        let (de, _) = split_cols(&dx, self.embed.outputs());
        let mut grads = self.embed.param_gradients(&cache.embed, de);
        grads.append(&mut joint);
        grads
    }

    /// dL/d(action) alone; skips the embedding backward pass.
    pub fn action_gradient(&self, cache: &CriticCache, upstream: Array2<f64>) -> Array2<f64> {
        let (_, dx) = self.joint.backward(&cache.joint, upstream);
        dx.slice(s![.., self.embed.outputs()..]).to_owned()
    }

    pub fn gradients(&self, obs: &[f64], action: &[f64], upstream: f64) -> Result<CriticGrads> {
        check_width(self.obs_dim(), obs.len())?;
        check_width(ACTION_DIM, action.len())?;
        let (_, cache) = self.forward_cached(row(obs).to_owned(), row(action));
        Ok(self.backward(&cache, Array2::from_elem((1, 1), upstream)))
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut t = self.embed.tensors();
        t.extend(self.joint.tensors());
        t
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t = self.embed.tensors_mut();
        t.extend(self.joint.tensors_mut());
        t
    }

    pub fn all_finite(&self) -> bool {
        self.embed.all_finite() && self.joint.all_finite()
    }
}

/// Polyak averaging `target ← τ·online + (1 − τ)·target`.
pub fn soft_update(target: Vec<&mut [f64]>, online: Vec<&[f64]>, tau: f64) {
    for (t, o) in target.into_iter().zip(online) {
        if tau == 1.0 {
            t.copy_from_slice(o);
        } else {
            for (x, y) in t.iter_mut().zip(o) {
                *x += tau * (y - *x);
            }
        }
    }
}

pub fn zero_all(tensors: Vec<&mut [f64]>) {
    for t in tensors {
        t.fill(0.0);
    }
}
