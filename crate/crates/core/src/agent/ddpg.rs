use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::scalar::Scalar;

use super::adam::Adam;
use super::mlp::{Activation, Mlp, MlpGradients};
use super::replay::{ReplayBuffer, Transition};
use super::AgentError;

#[derive(Debug, Clone, PartialEq)]
pub struct DdpgConfig<T> {
    pub gamma: T,
    pub tau: T,
    pub actor_lr: T,
    pub critic_lr: T,
    pub batch: usize,
    pub buffer_capacity: usize,
    /// Exploration noise standard deviation as a fraction of the action half-range.
    pub noise_sigma: T,
    /// Environment steps of uniformly random actions before any update.
    pub learning_start: usize,
    pub updates_per_step: usize,
    pub episodes: usize,
    pub hidden: Vec<usize>,
    /// Multiplies rewards before they enter critic targets.
    pub reward_scale: T,
}

impl<T: Scalar> Default for DdpgConfig<T> {
    fn default() -> Self {
        Self {
            gamma: T::lit(0.99),
            tau: T::lit(0.005),
            actor_lr: T::lit(1e-3),
            critic_lr: T::lit(1e-3),
            batch: 64,
            buffer_capacity: 100_000,
            noise_sigma: T::lit(0.1),
            learning_start: 200,
            updates_per_step: 1,
            episodes: 150,
            hidden: vec![64, 64],
            reward_scale: T::lit(1e-2),
        }
    }
}

impl<T: Scalar> DdpgConfig<T> {
    pub fn validate(&self) -> Result<(), AgentError> {
        let fail = |m: &str| Err(AgentError::Config(m.to_string()));
        if !(self.gamma >= T::zero() && self.gamma <= T::one()) {
            return fail("gamma must lie in [0, 1]");
        }
        if !(self.tau > T::zero() && self.tau <= T::one()) {
            return fail("tau must lie in (0, 1]");
        }
        if !(self.actor_lr > T::zero()) || !(self.critic_lr > T::zero()) {
            return fail("learning rates must be positive");
        }
        if self.batch == 0 || self.buffer_capacity < self.batch {
            return fail("need 0 < batch <= buffer_capacity");
        }
        if !(self.noise_sigma >= T::zero()) {
            return fail("noise_sigma must be non-negative");
        }
        if !(self.reward_scale > T::zero()) {
            return fail("reward_scale must be positive");
        }
        if self.hidden.contains(&0) {
            return fail("hidden layer widths must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats<T> {
    pub critic_loss: T,
    /// Mean critic value of the actor's actions on the batch.
    pub actor_objective: T,
}

/// DDPG learner. The actor emits actions normalized to `[-1, 1]`, which is
/// also the action scale the critic sees; [`DdpgAgent::select_action`] maps
/// them onto the environment's box.
#[derive(Debug, Clone)]
pub struct DdpgAgent<T> {
    pub actor: Mlp<T>,
    pub critic: Mlp<T>,
    pub target_actor: Mlp<T>,
    pub target_critic: Mlp<T>,
    actor_opt: Adam<T>,
    critic_opt: Adam<T>,
    buffer: ReplayBuffer<T>,
    cfg: DdpgConfig<T>,
    low: Vec<T>,
    high: Vec<T>,
    steps: usize,
    rng: ChaCha8Rng,
}

const FINAL_LAYER_INIT: f64 = 3e-3;

impl<T: Scalar> DdpgAgent<T> {
    pub fn new(
        obs_dim: usize,
        low: Vec<T>,
        high: Vec<T>,
        cfg: DdpgConfig<T>,
        seed: u64,
    ) -> Result<Self, AgentError> {
        cfg.validate()?;
        if low.len() != high.len() || low.is_empty() {
            return Err(AgentError::DimensionMismatch {
                expected: low.len(),
                got: high.len(),
            });
        }
        if low.iter().zip(&high).any(|(l, h)| !(l < h)) {
            return Err(AgentError::Config("action box needs low < high".into()));
        }
        let act_dim = low.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut actor_sizes = vec![obs_dim];
        actor_sizes.extend(&cfg.hidden);
        actor_sizes.push(act_dim);
        let mut critic_sizes = vec![obs_dim + act_dim];
        critic_sizes.extend(&cfg.hidden);
        critic_sizes.push(1);
        let actor = Mlp::random(&actor_sizes, Activation::Tanh, FINAL_LAYER_INIT, &mut rng);
        let critic = Mlp::random(
            &critic_sizes,
            Activation::Identity,
            FINAL_LAYER_INIT,
            &mut rng,
        );
        Ok(Self::from_networks(
            actor, critic, None, low, high, cfg, rng,
        ))
    }

    pub(crate) fn from_networks(
        actor: Mlp<T>,
        critic: Mlp<T>,
        targets: Option<(Mlp<T>, Mlp<T>)>,
        low: Vec<T>,
        high: Vec<T>,
        cfg: DdpgConfig<T>,
        rng: ChaCha8Rng,
    ) -> Self {
        let (target_actor, target_critic) =
            targets.unwrap_or_else(|| (actor.clone(), critic.clone()));
        Self {
            actor_opt: Adam::new(&actor, cfg.actor_lr),
            critic_opt: Adam::new(&critic, cfg.critic_lr),
            buffer: ReplayBuffer::new(cfg.buffer_capacity),
            target_actor,
            target_critic,
            actor,
            critic,
            cfg,
            low,
            high,
            steps: 0,
            rng,
        }
    }

    pub fn config(&self) -> &DdpgConfig<T> {
        &self.cfg
    }

    pub fn action_bounds(&self) -> (&[T], &[T]) {
        (&self.low, &self.high)
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.low.len()
    }

    pub fn buffer(&self) -> &ReplayBuffer<T> {
        &self.buffer
    }

    /// Environment steps recorded through [`DdpgAgent::observe`].
    pub fn steps(&self) -> usize {
        self.steps
    }

    fn half_range(&self, k: usize) -> T {
        (self.high[k] - self.low[k]) / T::lit(2.0)
    }

    fn midpoint(&self, k: usize) -> T {
        (self.high[k] + self.low[k]) / T::lit(2.0)
    }

    fn normalize(&self, action: &[T]) -> Vec<T> {
        action
            .iter()
            .enumerate()
            .map(|(k, a)| (*a - self.midpoint(k)) / self.half_range(k))
            .collect()
    }

    fn denormalize(&self, unit: &[T]) -> Vec<T> {
        unit.iter()
            .enumerate()
            .map(|(k, u)| self.midpoint(k) + self.half_range(k) * *u)
            .collect()
    }

    fn clip(&self, action: &mut [T]) {
        for (k, a) in action.iter_mut().enumerate() {
            *a = a.max(self.low[k]).min(self.high[k]);
        }
    }

    fn critic_input(obs: &[T], unit_action: &[T]) -> Vec<T> {
        let mut x = Vec::with_capacity(obs.len() + unit_action.len());
        x.extend_from_slice(obs);
        x.extend_from_slice(unit_action);
        x
    }

    /// Deterministic policy output in environment units.
    pub fn policy(&self, obs: &[T]) -> Result<Vec<T>, AgentError> {
        let unit = self.actor.predict(obs)?;
        let mut a = self.denormalize(&unit);
        self.clip(&mut a);
        Ok(a)
    }

    /// Uniform random actions while `counter < learning_start`; otherwise the
    /// actor output, with clipped gaussian noise when `explore` is set.
    pub fn select_action(
        &mut self,
        obs: &[T],
        counter: usize,
        explore: bool,
    ) -> Result<Vec<T>, AgentError> {
        if obs.len() != self.obs_dim() {
            return Err(AgentError::DimensionMismatch {
                expected: self.obs_dim(),
                got: obs.len(),
            });
        }
        if counter < self.cfg.learning_start {
            return Ok((0..self.action_dim())
                .map(|k| {
                    let u: f64 = self.rng.random();
                    self.low[k] + (self.high[k] - self.low[k]) * T::lit(u)
                })
                .collect());
        }
        let mut a = self.policy(obs)?;
        if explore {
            for (k, ak) in a.iter_mut().enumerate() {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                *ak += self.cfg.noise_sigma * self.half_range(k) * T::lit(z);
            }
            self.clip(&mut a);
        }
        Ok(a)
    }

    /// Stores a transition and counts one environment step.
    pub fn observe(&mut self, tr: Transition<T>) {
        self.buffer.push(tr);
        self.steps += 1;
    }

    /// Whether [`DdpgAgent::update`] may run after the latest
    /// [`DdpgAgent::observe`]: the step just recorded had counter
    /// `steps - 1`, and only steps with counter at least `learning_start` learn.
    pub fn ready_to_learn(&self) -> bool {
        self.steps > self.cfg.learning_start && self.buffer.len() >= self.cfg.batch
    }

    /// Bootstrapped critic targets for a batch.
    pub fn td_targets(&self, batch: &[&Transition<T>]) -> Result<Vec<T>, AgentError> {
        batch
            .iter()
            .map(|tr| {
                let r = self.cfg.reward_scale * tr.reward;
                if tr.done {
                    return Ok(r);
                }
                let a_next = self.target_actor.predict(&tr.next_obs)?;
                let q_next = self
                    .target_critic
                    .predict(&Self::critic_input(&tr.next_obs, &a_next))?[0];
                Ok(r + self.cfg.gamma * q_next)
            })
            .collect()
    }

    /// One critic step, one actor step, then soft target updates.
    pub fn update(&mut self) -> Result<UpdateStats<T>, AgentError> {
        let idx = self.buffer.sample_indices(self.cfg.batch, &mut self.rng)?;
        let batch: Vec<&Transition<T>> = idx
            .iter()
            .map(|i| self.buffer.get(*i).expect("sampled index"))
            .collect();
        let n = T::from_usize_exact(batch.len());
        let targets = self.td_targets(&batch)?;

        let mut critic_grads = MlpGradients::zeros_like(&self.critic);
        let mut critic_loss = T::zero();
        for (tr, y) in batch.iter().zip(&targets) {
            let x = Self::critic_input(&tr.obs, &self.normalize(&tr.action));
            let cache = self.critic.forward(&x)?;
            let err = cache.output()[0] - *y;
            critic_loss += err * err;
            self.critic
                .backward(&cache, &[T::lit(2.0) * err / n], Some(&mut critic_grads))?;
        }
        critic_loss /= n;
        if !critic_loss.is_finite() {
            return Err(AgentError::NonFinite("critic loss"));
        }
        self.critic_opt.step(&mut self.critic, &critic_grads);

        let obs_dim = self.obs_dim();
        let mut actor_grads = MlpGradients::zeros_like(&self.actor);
        let mut objective = T::zero();
        for tr in &batch {
            let a_cache = self.actor.forward(&tr.obs)?;
            let x = Self::critic_input(&tr.obs, a_cache.output());
            let c_cache = self.critic.forward(&x)?;
            objective += c_cache.output()[0];
            let dq_dx = self.critic.backward(&c_cache, &[T::one()], None)?;
            // ascend Q: descend on -Q / n
            let upstream: Vec<T> = dq_dx[obs_dim..].iter().map(|g| -*g / n).collect();
            self.actor
                .backward(&a_cache, &upstream, Some(&mut actor_grads))?;
        }
        objective /= n;
        if !objective.is_finite() {
            return Err(AgentError::NonFinite("actor objective"));
        }
        self.actor_opt.step(&mut self.actor, &actor_grads);

        soft_update(&mut self.target_critic, &self.critic, self.cfg.tau);
        soft_update(&mut self.target_actor, &self.actor, self.cfg.tau);
        Ok(UpdateStats {
            critic_loss,
            actor_objective: objective,
        })
    }
}

/// `target <- tau * online + (1 - tau) * target`, parameter by parameter.
pub fn soft_update<T: Scalar>(target: &mut Mlp<T>, online: &Mlp<T>, tau: T) {
    let keep = T::one() - tau;
    for (t, o) in target.params_mut().zip(online.params()) {
        *t = tau * *o + keep * *t;
    }
}
