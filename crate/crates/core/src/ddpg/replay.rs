use ndarray::{Array1, Array2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::neural::ACTION_DIM;

/// One stored step of experience.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub action: [f64; ACTION_DIM],
    pub reward: f64,
    pub next_observation: Vec<f64>,
    pub terminal: bool,
}

/// A sampled minibatch, one row per transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub observations: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Array1<f64>,
    pub next_observations: Array2<f64>,
    /// 1.0 for terminal transitions, else 0.0.
    pub terminals: Array1<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn from_transitions(items: &[Transition]) -> Self {
        let n = items.len();
        let d = items.first().map_or(0, |t| t.observation.len());
        let mut b = Batch {
            observations: Array2::zeros((n, d)),
            actions: Array2::zeros((n, ACTION_DIM)),
            rewards: Array1::zeros(n),
            next_observations: Array2::zeros((n, d)),
            terminals: Array1::zeros(n),
        };
        for (i, t) in items.iter().enumerate() {
            b.observations.row_mut(i).assign(&ndarray::aview1(&t.observation));
            b.next_observations.row_mut(i).assign(&ndarray::aview1(&t.next_observation));
            b.actions.row_mut(i).assign(&ndarray::aview1(&t.action));
            b.rewards[i] = t.reward;
            b.terminals[i] = f64::from(u8::from(t.terminal));
        }
        b
    }
}

/// Fixed-capacity ring of transitions. Observations are stored as `f32` to
/// halve memory; rewards and actions keep full precision.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    obs_dim: usize,
    obs: Vec<f32>,
    next_obs: Vec<f32>,
    actions: Vec<f64>,
    rewards: Vec<f64>,
    terminals: Vec<bool>,
    /// Slot the next push writes to.
    head: usize,
    len: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, obs_dim: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            obs_dim,
            obs: Vec::new(),
            next_obs: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            terminals: Vec::new(),
            head: 0,
            len: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    /// O(1) insertion; overwrites the oldest entry once full.
    pub fn push(&mut self, t: &Transition) -> Result<()> {
        for o in [&t.observation, &t.next_observation] {
            if o.len() != self.obs_dim {
                return Err(Error::DimensionMismatch { expected: self.obs_dim, got: o.len() });
            }
        }
        let d = self.obs_dim;
        if self.len < self.capacity && self.head == self.len {
            self.obs.extend(t.observation.iter().map(|&x| x as f32));
            self.next_obs.extend(t.next_observation.iter().map(|&x| x as f32));
            self.actions.extend_from_slice(&t.action);
            self.rewards.push(t.reward);
            self.terminals.push(t.terminal);
        } else {
            let h = self.head;
            for (dst, src) in self.obs[h * d..(h + 1) * d].iter_mut().zip(&t.observation) {
                *dst = *src as f32;
            }
            for (dst, src) in self.next_obs[h * d..(h + 1) * d].iter_mut().zip(&t.next_observation) {
                *dst = *src as f32;
            }
            self.actions[h * ACTION_DIM..(h + 1) * ACTION_DIM].copy_from_slice(&t.action);
            self.rewards[h] = t.reward;
            self.terminals[h] = t.terminal;
        }
        self.head = (self.head + 1) % self.capacity;
        self.len = (self.len + 1).min(self.capacity);
        Ok(())
    }

    /// Stored transition at ring slot `slot`, with observations widened back to f64.
    fn slot(&self, slot: usize) -> Transition {
        let d = self.obs_dim;
        let mut action = [0.0; ACTION_DIM];
        action.copy_from_slice(&self.actions[slot * ACTION_DIM..(slot + 1) * ACTION_DIM]);
        Transition {
            observation: self.obs[slot * d..(slot + 1) * d].iter().map(|&x| f64::from(x)).collect(),
            action,
            reward: self.rewards[slot],
            next_observation: self.next_obs[slot * d..(slot + 1) * d].iter().map(|&x| f64::from(x)).collect(),
            terminal: self.terminals[slot],
        }
    }

    /// Transitions from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = Transition> + '_ {
        let start = if self.len < self.capacity { 0 } else { self.head };
        (0..self.len).map(move |k| self.slot((start + k) % self.capacity))
    }

    /// Uniform indices with replacement, as positions in oldest-first order.
    pub fn sample_indices<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<usize>> {
        if self.len < batch || self.len == 0 {
            return Err(Error::InsufficientData { size: self.len, batch });
        }
        Ok((0..batch).map(|_| rng.gen_range(0..self.len)).collect())
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Batch> {
        let idx = self.sample_indices(batch, rng)?;
        let start = if self.len < self.capacity { 0 } else { self.head };
        let d = self.obs_dim;
        let mut b = Batch {
            observations: Array2::zeros((batch, d)),
            actions: Array2::zeros((batch, ACTION_DIM)),
            rewards: Array1::zeros(batch),
            next_observations: Array2::zeros((batch, d)),
            terminals: Array1::zeros(batch),
        };
        for (row, &k) in idx.iter().enumerate() {
            let s = (start + k) % self.capacity;
            for (dst, src) in b.observations.row_mut(row).iter_mut().zip(&self.obs[s * d..(s + 1) * d]) {
                *dst = f64::from(*src);
            }
            for (dst, src) in b.next_observations.row_mut(row).iter_mut().zip(&self.next_obs[s * d..(s + 1) * d]) {
                *dst = f64::from(*src);
            }
            b.actions[[row, 0]] = self.actions[s * ACTION_DIM];
            b.actions[[row, 1]] = self.actions[s * ACTION_DIM + 1];
            b.rewards[row] = self.rewards[s];
            b.terminals[row] = f64::from(u8::from(self.terminals[s]));
        }
        Ok(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;

    fn tr(k: usize) -> Transition {
        Transition {
            observation: vec![k as f64; 3],
            action: [k as f64, 0.0],
            reward: k as f64,
            next_observation: vec![k as f64 + 0.5; 3],
            terminal: k.is_multiple_of(2),
        }
    }

    #[test]
    fn ring_evicts_oldest() {
        let mut b = ReplayBuffer::new(3, 3);
        for k in 0..4 {
            b.push(&tr(k)).unwrap();
        }
        assert_eq!(b.len(), 3);
        let rewards: Vec<f64> = b.iter().map(|t| t.reward).collect();
        assert_eq!(rewards, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn fifo_order_below_capacity() {
        let mut b = ReplayBuffer::new(10, 3);
        for k in 0..7 {
            b.push(&tr(k)).unwrap();
        }
        let got: Vec<Transition> = b.iter().collect();
        assert_eq!(got, (0..7).map(tr).collect::<Vec<_>>());
    }

    #[test]
    fn insufficient_data() {
        let mut b = ReplayBuffer::new(10, 3);
        b.push(&tr(0)).unwrap();
        assert!(matches!(b.sample(2, &mut rng_from(0)), Err(Error::InsufficientData { size: 1, batch: 2 })));
    }

    #[test]
    fn wrong_width_rejected() {
        let mut b = ReplayBuffer::new(10, 4);
        assert!(b.push(&tr(0)).is_err());
    }

    #[test]
    fn sampling_is_uniform() {
        let mut b = ReplayBuffer::new(10, 3);
        for k in 0..10 {
            b.push(&tr(k)).unwrap();
        }
        let mut counts = [0usize; 10];
        let mut rng = rng_from(5);
        for _ in 0..10_000 {
            for i in b.sample_indices(10, &mut rng).unwrap() {
                counts[i] += 1;
            }
        }
        for c in counts {
            let f = c as f64 / 100_000.0;
            assert!((f - 0.1).abs() < 0.01, "frequency {f}");
        }
    }

    #[test]
    fn sample_rows_match_storage() {
        let mut b = ReplayBuffer::new(4, 3);
        for k in 0..6 {
            b.push(&tr(k)).unwrap();
        }
        let batch = b.sample(4, &mut rng_from(1)).unwrap();
        for i in 0..4 {
            let r = batch.rewards[i];
            assert!((2.0..=5.0).contains(&r));
            assert_eq!(batch.observations[[i, 0]], r);
            assert_eq!(batch.next_observations[[i, 2]], r + 0.5);
            assert_eq!(batch.actions[[i, 0]], r);
            assert_eq!(batch.terminals[i], f64::from(u8::from((r as usize).is_multiple_of(2))));
        }
    }
}
