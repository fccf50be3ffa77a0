//! Flat binary agent checkpoints.
//!
//! Layout, all integers `u32` and all floats `f64`, little-endian:
//!
//! ```text
//! b"DDPG1"
//! obs_dim, act_dim
//! action_low[act_dim], action_high[act_dim]
//! 4 x network header: n_sizes, sizes[n_sizes], output activation (u8: 0 identity, 1 tanh)
//! 4 x network parameters: per layer, weights row-major (outputs x inputs) then biases
//! ```
//!
//! Networks appear in the order actor, critic, target actor, target critic.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

use super::ddpg::{DdpgAgent, DdpgConfig};
use super::mlp::{Activation, Mlp};
use super::AgentError;

pub const MAGIC: &[u8; 5] = b"DDPG1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T> {
    pub actor: Mlp<T>,
    pub critic: Mlp<T>,
    pub target_actor: Mlp<T>,
    pub target_critic: Mlp<T>,
    pub action_low: Vec<T>,
    pub action_high: Vec<T>,
}

impl<T: Scalar> DdpgAgent<T> {
    pub fn checkpoint(&self) -> Checkpoint<T> {
        let (low, high) = self.action_bounds();
        Checkpoint {
            actor: self.actor.clone(),
            critic: self.critic.clone(),
            target_actor: self.target_actor.clone(),
            target_critic: self.target_critic.clone(),
            action_low: low.to_vec(),
            action_high: high.to_vec(),
        }
    }

    /// Rebuilds an agent with the stored networks; optimizer moments and the
    /// replay buffer start empty.
    pub fn from_checkpoint(
        ck: Checkpoint<T>,
        cfg: DdpgConfig<T>,
        seed: u64,
    ) -> Result<Self, AgentError> {
        cfg.validate()?;
        Ok(Self::from_networks(
            ck.actor,
            ck.critic,
            Some((ck.target_actor, ck.target_critic)),
            ck.action_low,
            ck.action_high,
            cfg,
            ChaCha8Rng::seed_from_u64(seed),
        ))
    }
}

impl<T: Scalar> Checkpoint<T> {
    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.action_low.len()
    }

    /// Greedy action in environment units.
    pub fn act(&self, obs: &[T]) -> Result<Vec<T>, AgentError> {
        let unit = self.actor.predict(obs)?;
        Ok(unit
            .iter()
            .enumerate()
            .map(|(k, u)| {
                let half = (self.action_high[k] - self.action_low[k]) / T::lit(2.0);
                let mid = (self.action_high[k] + self.action_low[k]) / T::lit(2.0);
                (mid + half * *u)
                    .max(self.action_low[k])
                    .min(self.action_high[k])
            })
            .collect())
    }

    fn nets(&self) -> [&Mlp<T>; 4] {
        [
            &self.actor,
            &self.critic,
            &self.target_actor,
            &self.target_critic,
        ]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        let u32le = |out: &mut Vec<u8>, v: usize| out.extend_from_slice(&(v as u32).to_le_bytes());
        let f64le =
            |out: &mut Vec<u8>, v: T| out.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
        u32le(&mut out, self.obs_dim());
        u32le(&mut out, self.action_dim());
        for v in self.action_low.iter().chain(&self.action_high) {
            f64le(&mut out, *v);
        }
        for net in self.nets() {
            let sizes = net.sizes();
            u32le(&mut out, sizes.len());
            for s in sizes {
                u32le(&mut out, s);
            }
            out.push(net.output.code());
        }
        for net in self.nets() {
            for p in net.params() {
                f64le(&mut out, *p);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, AgentError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(MAGIC.len())? != MAGIC {
            return Err(AgentError::Checkpoint("bad magic bytes".into()));
        }
        let obs_dim = r.u32()?;
        let act_dim = r.u32()?;
        let mut bounds = Vec::with_capacity(2 * act_dim);
        for _ in 0..2 * act_dim {
            bounds.push(T::lit(r.f64()?));
        }
        let action_high = bounds.split_off(act_dim);
        let action_low = bounds;

        let mut nets = Vec::with_capacity(4);
        for _ in 0..4 {
            let n = r.u32()?;
            if !(2..=64).contains(&n) {
                return Err(AgentError::Checkpoint(format!(
                    "implausible layer count {n}"
                )));
            }
            let sizes = (0..n).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
            if sizes.iter().any(|s| *s == 0 || *s > 1 << 20) {
                return Err(AgentError::Checkpoint("implausible layer size".into()));
            }
            let act = Activation::from_code(r.u8()?)
                .ok_or_else(|| AgentError::Checkpoint("unknown activation code".into()))?;
            nets.push(Mlp::<T>::zeros(&sizes, act));
        }
        for net in &mut nets {
            for p in net.params_mut() {
                *p = T::lit(r.f64()?);
            }
        }
        if r.pos != bytes.len() {
            return Err(AgentError::Checkpoint(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        let mut it = nets.into_iter();
        let ck = Checkpoint {
            actor: it.next().expect("four networks"),
            critic: it.next().expect("four networks"),
            target_actor: it.next().expect("four networks"),
            target_critic: it.next().expect("four networks"),
            action_low,
            action_high,
        };
        let consistent = ck.actor.input_dim() == obs_dim
            && ck.actor.output_dim() == act_dim
            && ck.critic.input_dim() == obs_dim + act_dim
            && ck.critic.output_dim() == 1
            && ck.target_actor.sizes() == ck.actor.sizes()
            && ck.target_critic.sizes() == ck.critic.sizes();
        if !consistent {
            return Err(AgentError::Checkpoint(
                "network shapes disagree with header".into(),
            ));
        }
        Ok(ck)
    }

    pub fn save(&self, path: &std::path::Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_bytes())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, AgentError> {
        let bytes = std::fs::read(path)
            .map_err(|e| AgentError::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], AgentError> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len());
        let end = end.ok_or_else(|| AgentError::Checkpoint("truncated checkpoint".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, AgentError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize, AgentError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }

    fn f64(&mut self) -> Result<f64, AgentError> {
        let b = self.take(8)?;
        Ok(f64::from_le_bytes(b.try_into().expect("eight bytes")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DdpgAgent<f64> {
        DdpgAgent::new(5, vec![-0.1; 5], vec![0.1; 5], DdpgConfig::default(), 42).unwrap()
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let agent = sample();
        let ck = agent.checkpoint();
        let back = Checkpoint::<f64>::from_bytes(&ck.to_bytes()).unwrap();
        assert_eq!(back, ck);
        let obs = [-0.3, -0.31, -0.29, -0.3, -0.32];
        assert_eq!(back.act(&obs).unwrap(), agent.policy(&obs).unwrap());
    }

    #[test]
    fn header_layout() {
        let bytes = sample().checkpoint().to_bytes();
        assert_eq!(&bytes[..5], b"DDPG1");
        assert_eq!(u32::from_le_bytes(bytes[5..9].try_into().unwrap()), 5);
        assert_eq!(f64::from_le_bytes(bytes[13..21].try_into().unwrap()), -0.1);
    }

    #[test]
    fn rejects_corruption() {
        let bytes = sample().checkpoint().to_bytes();
        assert!(Checkpoint::<f64>::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Checkpoint::<f64>::from_bytes(&bad).is_err());
        let mut longer = bytes;
        longer.push(0);
        assert!(Checkpoint::<f64>::from_bytes(&longer).is_err());
    }
}
