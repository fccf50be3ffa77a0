use crate::env::{EnvError, LfcEnv};
use crate::scalar::Scalar;

use super::ddpg::DdpgAgent;
use super::replay::Transition;
use super::AgentError;

/// Frequencies outside this band abort the run.
pub const SANITY_BAND_HZ: (f64, f64) = (55.0, 65.0);

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord<T> {
    pub episode: usize,
    /// COI frequency at the final action instant.
    pub f_final_hz: T,
    pub episode_return: T,
    /// Per-step rewards; empty unless requested.
    pub rewards: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLog<T> {
    pub seed: u64,
    pub records: Vec<EpisodeRecord<T>>,
    /// Human-readable echo of the configuration the run used.
    pub config_echo: String,
}

impl<T: Scalar> TrainLog<T> {
    /// Mean absolute final deviation over the last `window` episodes.
    pub fn last_window_deviation(&self, window: usize, f_nominal: T) -> Option<T> {
        if window == 0 || self.records.len() < window {
            return None;
        }
        let tail = &self.records[self.records.len() - window..];
        let sum: T = tail.iter().map(|r| (r.f_final_hz - f_nominal).abs()).sum();
        Some(sum / T::from_usize_exact(window))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("final frequency {f_hz} Hz outside the sanity band")]
    OutOfBand { f_hz: f64 },
    #[error("agent and environment disagree on dimensions: {0}")]
    Mismatch(String),
}

/// A run that stopped early; `log` holds the episodes that completed.
#[derive(Debug, thiserror::Error)]
#[error("run failed in episode {episode}: {error}")]
pub struct TrainFailure<T: std::fmt::Debug> {
    pub log: TrainLog<T>,
    pub episode: usize,
    #[source]
    pub error: TrainError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainOptions {
    pub seed: u64,
    pub record_rewards: bool,
}

/// Runs `agent.config().episodes` training episodes against `env`.
///
/// Each environment step stores its transition and, from `learning_start`
/// on, performs `updates_per_step` gradient updates.
pub fn train<T: Scalar>(
    agent: &mut DdpgAgent<T>,
    env: &mut LfcEnv<T>,
    opts: TrainOptions,
) -> Result<TrainLog<T>, TrainFailure<T>> {
    let mut log = TrainLog {
        seed: opts.seed,
        records: Vec::with_capacity(agent.config().episodes),
        config_echo: format!("{:?} | {:?}", env.config(), agent.config()),
    };
    if agent.obs_dim() != env.observation_dim() || agent.action_dim() != env.action_dim() {
        return Err(TrainFailure {
            log,
            episode: 0,
            error: TrainError::Mismatch(format!(
                "agent {}x{}, env {}x{}",
                agent.obs_dim(),
                agent.action_dim(),
                env.observation_dim(),
                env.action_dim()
            )),
        });
    }
    env.seed(opts.seed);
    for episode in 0..agent.config().episodes {
        match run_episode(agent, env, episode, opts.record_rewards) {
            Ok(rec) => {
                let f = rec.f_final_hz.to_f64_lossy();
                if !(f >= SANITY_BAND_HZ.0 && f <= SANITY_BAND_HZ.1) {
                    return Err(TrainFailure {
                        log,
                        episode,
                        error: TrainError::OutOfBand { f_hz: f },
                    });
                }
                log.records.push(rec);
            }
            Err(error) => {
                return Err(TrainFailure {
                    log,
                    episode,
                    error,
                })
            }
        }
    }
    Ok(log)
}

fn run_episode<T: Scalar>(
    agent: &mut DdpgAgent<T>,
    env: &mut LfcEnv<T>,
    episode: usize,
    record_rewards: bool,
) -> Result<EpisodeRecord<T>, TrainError> {
    let mut obs = env.reset()?;
    let mut rewards = Vec::new();
    loop {
        let action = agent.select_action(&obs, agent.steps(), true)?;
        let step = env.step(&action)?;
        agent.observe(Transition {
            obs: std::mem::take(&mut obs),
            action,
            reward: step.reward,
            next_obs: step.obs.clone(),
            done: step.done,
        });
        if agent.ready_to_learn() {
            for _ in 0..agent.config().updates_per_step {
                agent.update()?;
            }
        }
        if record_rewards {
            rewards.push(step.reward);
        }
        obs = step.obs;
        if step.done {
            return Ok(EpisodeRecord {
                episode,
                f_final_hz: step.info.f_coi_hz,
                episode_return: step.info.cumulative_reward,
                rewards,
            });
        }
    }
}

/// Result of one deterministic, noise-free episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout<T> {
    pub f_final_hz: T,
    pub episode_return: T,
    pub actions: Vec<Vec<T>>,
}

/// Plays one episode with the greedy policy `act`.
pub fn rollout<T: Scalar, F>(env: &mut LfcEnv<T>, mut act: F) -> Result<Rollout<T>, TrainError>
where
    F: FnMut(&[T]) -> Result<Vec<T>, AgentError>,
{
    let mut obs = env.reset()?;
    let mut actions = Vec::new();
    loop {
        let a = act(&obs)?;
        let step = env.step(&a)?;
        actions.push(a);
        obs = step.obs;
        if step.done {
            return Ok(Rollout {
                f_final_hz: step.info.f_coi_hz,
                episode_return: step.info.cumulative_reward,
                actions,
            });
        }
    }
}
