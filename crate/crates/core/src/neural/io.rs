//! Versioned binary policy files.
//!
//! Layout (little-endian): 8-byte magic `SHNAVNET`, `u32` format version,
//! `u8` role tag (0 actor, 1 critic), `u32` shape length and that many `u32`
//! dimensions, then every layer's weight matrix (row-major, `in × out`)
//! followed by its bias, as `f64`.

use std::path::Path;

use ndarray::{Array1, Array2};

use super::layer::{Activation, Dense, Stack};
use super::nets::{Actor, Critic, ACTION_DIM};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"SHNAVNET";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Role {
    Actor = 0,
    Critic = 1,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Format { line: None, msg: msg.into() }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.buf.len()).ok_or_else(|| bad("truncated policy file"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| bad("size overflow"))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

fn write_header(out: &mut Vec<u8>, role: Role, shape: &[usize]) {
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(role as u8);
    out.extend_from_slice(&(shape.len() as u32).to_le_bytes());
    for &d in shape {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
}

fn write_stack(out: &mut Vec<u8>, stack: &Stack) {
    for t in stack.tensors() {
        for x in t {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
}

fn read_header(r: &mut Reader<'_>) -> Result<(Role, Vec<usize>)> {
    if r.take(8)? != MAGIC {
        return Err(bad("not a policy file (bad magic)"));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(bad(format!("unsupported policy format version {version}")));
    }
    let role = match r.take(1)?[0] {
        0 => Role::Actor,
        1 => Role::Critic,
        t => return Err(bad(format!("unknown role tag {t}"))),
    };
    let n = r.u32()? as usize;
    if n > 64 {
        return Err(bad("implausible shape length"));
    }
    let shape = (0..n).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
    if shape.iter().any(|d| *d == 0 || *d > 1 << 20) {
        return Err(bad("invalid layer width"));
    }
    Ok((role, shape))
}

fn read_stack(r: &mut Reader<'_>, dims: &[usize], acts: &[Activation]) -> Result<Stack> {
    let mut layers = Vec::with_capacity(acts.len());
    for (k, &act) in acts.iter().enumerate() {
        let (i, o) = (dims[k], dims[k + 1]);
        let weight = Array2::from_shape_vec((i, o), r.f64s(i * o)?).expect("sized");
        let bias = Array1::from_vec(r.f64s(o)?);
        layers.push(Dense { weight, bias, activation: act });
    }
    Ok(Stack { layers })
}

pub fn encode_actor(actor: &Actor) -> Vec<u8> {
    let mut shape = vec![actor.input_dim()];
    shape.extend(actor.net.layers.iter().map(Dense::outputs));
    let mut out = Vec::new();
    write_header(&mut out, Role::Actor, &shape);
    write_stack(&mut out, &actor.net);
    out
}

pub fn encode_critic(critic: &Critic) -> Vec<u8> {
    let w = critic.shape().widths;
    let shape = vec![critic.obs_dim(), w[0], w[1], ACTION_DIM, w[2], w[3]];
    let mut out = Vec::new();
    write_header(&mut out, Role::Critic, &shape);
    write_stack(&mut out, &critic.embed);
    write_stack(&mut out, &critic.joint);
    out
}

pub fn decode_actor(bytes: &[u8]) -> Result<Actor> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let (role, shape) = read_header(&mut r)?;
    if role != Role::Actor || shape.len() != 5 || shape[4] != ACTION_DIM {
        return Err(bad("file does not hold an actor"));
    }
    use Activation::*;
    let net = read_stack(&mut r, &shape, &[Relu, Relu, Relu, Tanh])?;
    if r.pos != bytes.len() {
        return Err(bad("trailing bytes after actor parameters"));
    }
    Ok(Actor { net })
}

pub fn decode_critic(bytes: &[u8]) -> Result<Critic> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let (role, shape) = read_header(&mut r)?;
    if role != Role::Critic || shape.len() != 6 || shape[3] != ACTION_DIM {
        return Err(bad("file does not hold a critic"));
    }
    use Activation::*;
    let embed = read_stack(&mut r, &shape[..3], &[Relu, Relu])?;
    let joint_dims = [shape[2] + ACTION_DIM, shape[4], shape[5], 1];
    let joint = read_stack(&mut r, &joint_dims, &[Relu, Relu, Linear])?;
    if r.pos != bytes.len() {
        return Err(bad("trailing bytes after critic parameters"));
    }
    Ok(Critic { embed, joint })
}

pub fn save_actor(actor: &Actor, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_actor(actor))?;
    Ok(())
}

pub fn load_actor(path: impl AsRef<Path>) -> Result<Actor> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    decode_actor(&std::fs::read(path)?)
}

pub fn save_critic(critic: &Critic, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_critic(critic))?;
    Ok(())
}

pub fn load_critic(path: impl AsRef<Path>) -> Result<Critic> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    decode_critic(&std::fs::read(path)?)
}
