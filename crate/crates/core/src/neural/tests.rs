use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;

use super::*;
use crate::rng::rng_from;

/// Straight-line re-implementation of a dense chain over raw tensors.
fn oracle_forward(stack: &Stack, x: &[f64]) -> Vec<f64> {
    let mut h = x.to_vec();
    for layer in &stack.layers {
        let (n_in, n_out) = (layer.inputs(), layer.outputs());
        let w = layer.weight.as_slice().unwrap();
        let b = layer.bias.as_slice().unwrap();
        let mut y = vec![0.0; n_out];
        for o in 0..n_out {
            let mut acc = 0.0;
            for i in 0..n_in {
                acc += h[i] * w[i * n_out + o];
            }
            acc += b[o];
            y[o] = match layer.activation {
                Activation::Relu => acc.max(0.0),
                Activation::Tanh => acc.tanh(),
                Activation::Linear => acc,
            };
        }
        h = y;
    }
    h
}

fn randomize(tensors: Vec<&mut [f64]>, rng: &mut impl Rng) {
    for t in tensors {
        for x in t.iter_mut() {
            *x = rng.gen_range(-0.6..0.6);
        }
    }
}

#[test]
fn zero_actor_outputs_midpoint() {
    let mut actor = Actor::new(10, &NetworkShape::actor(16, 16, 16), &mut rng_from(0));
    zero_all(actor.tensors_mut());
    let a = actor.forward(&[0.3; 10]).unwrap();
    assert_eq!(a, vec![0.4, 0.0]);
}

#[test]
fn zero_critic_outputs_zero() {
    let mut critic = Critic::new(10, &NetworkShape::critic(16, 16, 16, 16), &mut rng_from(0));
    zero_all(critic.tensors_mut());
    assert_eq!(critic.forward(&[0.7; 10], &[0.1, -0.4]).unwrap(), 0.0);
}

#[test]
fn dimension_mismatch() {
    let actor = Actor::new(10, &NetworkShape::actor(16, 16, 16), &mut rng_from(0));
    assert!(matches!(actor.forward(&[0.0; 9]), Err(crate::Error::DimensionMismatch { expected: 10, got: 9 })));
    let critic = Critic::new(10, &NetworkShape::critic(16, 16, 16, 16), &mut rng_from(0));
    assert!(critic.forward(&[0.0; 10], &[0.0]).is_err());
}

#[test]
fn forward_matches_oracle() {
    let mut rng = rng_from(42);
    for _ in 0..20 {
        let obs_dim = rng.gen_range(1..12);
        let shape = NetworkShape::actor(rng.gen_range(1..20), rng.gen_range(1..20), rng.gen_range(1..20));
        let mut actor = Actor::new(obs_dim, &shape, &mut rng);
        randomize(actor.tensors_mut(), &mut rng);
        let x: Vec<f64> = (0..obs_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let got = actor.forward(&x).unwrap();
        let raw = oracle_forward(&actor.net, &x);
        let expected = [0.4 + 0.6 * raw[0], raw[1]];
        for k in 0..2 {
            assert!((got[k] - expected[k]).abs() < 1e-12);
        }

        let shape = NetworkShape::critic(rng.gen_range(1..20), rng.gen_range(1..20), rng.gen_range(1..20), rng.gen_range(1..20));
        let mut critic = Critic::new(obs_dim, &shape, &mut rng);
        randomize(critic.tensors_mut(), &mut rng);
        let a = [rng.gen_range(-0.2..1.0), rng.gen_range(-1.0..1.0)];
        let mut joint_in = oracle_forward(&critic.embed, &x);
        joint_in.extend_from_slice(&a);
        let expected = oracle_forward(&critic.joint, &joint_in)[0];
        assert!((critic.forward(&x, &a).unwrap() - expected).abs() < 1e-12);
    }
}

#[test]
fn linear_unit_gradient() {
    // y = a·x with a single linear layer.
    let stack = Stack {
        layers: vec![Dense {
            weight: Array2::from_elem((1, 1), 2.5),
            bias: ndarray::Array1::zeros(1),
            activation: Activation::Linear,
        }],
    };
    let cache = stack.forward_cached(Array2::from_elem((1, 1), 3.0));
    let (g, dx) = stack.backward(&cache, Array2::from_elem((1, 1), 1.0));
    assert_eq!(g[0].weight[[0, 0]], 3.0);
    assert_eq!(g[0].bias[0], 1.0);
    assert_eq!(dx[[0, 0]], 2.5);
}

#[test]
fn critic_action_gradient_matches_differences() {
    let mut rng = rng_from(7);
    let mut critic = Critic::new(6, &NetworkShape::critic(8, 8, 8, 8), &mut rng);
    randomize(critic.tensors_mut(), &mut rng);
    let obs: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let act = [0.3, -0.2];
    let g = critic.gradients(&obs, &act, 1.0).unwrap();
    let h = 1e-5;
    for k in 0..2 {
        let (mut p, mut m) = (act, act);
        p[k] += h;
        m[k] -= h;
        let fd = (critic.forward(&obs, &p).unwrap() - critic.forward(&obs, &m).unwrap()) / (2.0 * h);
        let an = g.d_action[[0, k]];
        assert!((fd - an).abs() / an.abs().max(fd.abs()).max(1e-6) < 1e-5, "{fd} vs {an}");
    }
}

#[test]
fn serialization_round_trip_is_bit_exact() {
    let mut rng = rng_from(3);
    let actor = Actor::new(11, &NetworkShape::actor(17, 5, 9), &mut rng);
    let bytes = encode_actor(&actor);
    let back = decode_actor(&bytes).unwrap();
    assert_eq!(back, actor);
    assert_eq!(encode_actor(&back), bytes);
    let x = vec![0.25; 11];
    assert_eq!(actor.forward(&x).unwrap(), back.forward(&x).unwrap());

    let critic = Critic::new(11, &NetworkShape::critic(4, 6, 8, 3), &mut rng);
    let back = decode_critic(&encode_critic(&critic)).unwrap();
    assert_eq!(back, critic);

    assert!(decode_critic(&bytes).is_err());
    assert!(decode_actor(&bytes[..bytes.len() - 1]).is_err());
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(decode_actor(&bad).is_err());
}

#[test]
fn soft_update_with_unit_rate_copies() {
    let mut rng = rng_from(1);
    let online = Critic::new(5, &NetworkShape::critic(4, 4, 4, 4), &mut rng);
    let mut target = Critic::new(5, &NetworkShape::critic(4, 4, 4, 4), &mut rng);
    assert_ne!(online, target);
    soft_update(target.tensors_mut(), online.tensors(), 1.0);
    assert_eq!(online, target);
}

proptest! {
    #[test]
    fn actor_output_within_bounds(seed in 0u64..1000, scale in 0.1f64..100.0) {
        let mut rng = rng_from(seed);
        let mut actor = Actor::new(4, &NetworkShape::actor(8, 8, 8), &mut rng);
        randomize(actor.tensors_mut(), &mut rng);
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-scale..scale)).collect();
        let a = actor.act(&x).unwrap();
        prop_assert!(a.is_within_bounds(), "{:?}", a);
    }
}
