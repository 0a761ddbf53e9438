//! Feed-forward actor and critic networks with exact gradients and Adam.

mod adam;
mod io;
mod layer;
mod nets;

pub use adam::{adam_update, Adam};
pub use io::{
    decode_actor, decode_critic, encode_actor, encode_critic, load_actor, load_critic, save_actor, save_critic, Role,
    FORMAT_VERSION, MAGIC,
};
pub use layer::{grad_tensors, Activation, Dense, DenseGrad, Stack, StackCache};
pub use nets::{
    soft_update, zero_all, Actor, ActorCache, Critic, CriticCache, CriticGrads, NetworkShape, ACTION_DIM,
    DEFAULT_WIDTH_MAX, DEFAULT_WIDTH_MIN,
};

#[cfg(test)]
mod tests;
