//! Episode protocol around the simulator.
//!
//! `reset` solves the power flow, initializes the machines and simulates up
//! to the first action instant with the disturbance applied. Every `step`
//! then applies one action, advances one action interval (many simulator
//! steps), and returns the observation and reward at the next instant. The
//! episode ends on the `n_actions`-th step at `t_final`.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{
    coi_frequency, ControlInput, DynError, Event, SimConfig, Simulator, TraceRow,
};
use crate::netmodel::{CaseData, NetError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionMode {
    /// Actions accumulate onto the governor reference offsets.
    Incremental,
    /// Each action replaces the offsets.
    Absolute,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig<T> {
    /// `None` selects the built-in IEEE 14-bus case.
    pub case_path: Option<PathBuf>,
    pub disturbance: Event<T>,
    /// When set, each reset draws the load step uniformly from this range.
    pub random_dp: Option<(T, T)>,
    pub t_act_start: T,
    pub t_final: T,
    pub n_actions: usize,
    pub action_low: T,
    pub action_high: T,
    pub w_mid: T,
    pub w_final: T,
    pub action_mode: ActionMode,
    pub sim: SimConfig<T>,
}

impl<T: Scalar> Default for EnvConfig<T> {
    fn default() -> Self {
        Self {
            case_path: None,
            disturbance: Event::load_step(T::one(), 4, T::lit(0.6)),
            random_dp: None,
            t_act_start: T::lit(5.0),
            t_final: T::lit(10.0),
            n_actions: 20,
            action_low: T::lit(-0.1),
            action_high: T::lit(0.1),
            w_mid: T::lit(100.0),
            w_final: T::lit(3000.0),
            action_mode: ActionMode::Incremental,
            sim: SimConfig::default(),
        }
    }
}

impl<T: Scalar> EnvConfig<T> {
    pub fn validate(&self) -> Result<(), EnvError> {
        let fail = |m: &str| Err(EnvError::Config(m.to_string()));
        if !(self.t_act_start >= T::zero()) || !(self.t_act_start < self.t_final) {
            return fail("need 0 <= t_act_start < t_final");
        }
        if self.n_actions == 0 {
            return fail("n_actions must be at least 1");
        }
        if !(self.action_low < self.action_high) {
            return fail("action_low must be below action_high");
        }
        if !(self.w_mid > T::zero()) || !(self.w_final > T::zero()) {
            return fail("reward weights must be positive");
        }
        if !(self.disturbance.time >= T::zero()) || !self.disturbance.dp.is_finite() {
            return fail("disturbance needs a finite load step at t >= 0");
        }
        if let Some((lo, hi)) = self.random_dp {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return fail("random disturbance range must satisfy low <= high");
            }
        }
        if !(self.sim.h_nominal > T::zero()) || !(self.sim.newton_tol > T::zero()) {
            return fail("simulation step and Newton tolerance must be positive");
        }
        Ok(())
    }

    /// Time between consecutive action instants.
    pub fn action_interval(&self) -> T {
        (self.t_final - self.t_act_start) / T::from_usize_exact(self.n_actions)
    }

    /// Instant reached after `k` completed steps; exact at both ends.
    pub fn action_instant(&self, k: usize) -> T {
        if k >= self.n_actions {
            self.t_final
        } else {
            self.t_act_start
                + (self.t_final - self.t_act_start) * T::from_usize_exact(k)
                    / T::from_usize_exact(self.n_actions)
        }
    }
}

/// Penalty on the absolute frequency deviation; the final instant is weighted
/// by `w_final`, every other instant by `w_mid`.
pub fn compute_reward<T: Scalar>(f_hz: T, f_nominal: T, is_final: bool, cfg: &EnvConfig<T>) -> T {
    let w = if is_final { cfg.w_final } else { cfg.w_mid };
    -(w * (f_hz - f_nominal).abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo<T> {
    pub cumulative_reward: T,
    pub t: T,
    pub f_coi_hz: T,
    /// True when any action component was outside the box.
    pub clipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult<T> {
    /// Per-machine frequency deviation in Hz.
    pub obs: Vec<T>,
    pub reward: T,
    pub done: bool,
    pub info: StepInfo<T>,
}

#[derive(Debug, thiserror::Error)]
pub enum EnvError {
    #[error("invalid environment config: {0}")]
    Config(String),
    #[error("cannot read case file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Case(#[from] NetError),
    #[error("episode initialization failed: {0}")]
    EpisodeInit(#[source] DynError),
    #[error("simulation failed: {0}")]
    Sim(#[from] DynError),
    #[error("episode already finished; call reset")]
    EpisodeDone,
    #[error("no active episode; call reset")]
    NotReset,
    #[error("action must have {expected} finite components, got {got:?}")]
    InvalidAction { expected: usize, got: Vec<f64> },
}

#[derive(Debug, Clone)]
struct Episode<T> {
    sim: Simulator<T>,
    k: usize,
    cumulative_reward: T,
    offsets: Vec<T>,
}

#[derive(Debug, Clone)]
struct ResetSnapshot<T> {
    dp: T,
    sim: Simulator<T>,
    trace: Vec<TraceRow<T>>,
}

fn observation<T: Scalar>(f_nominal: T, sim: &Simulator<T>) -> Vec<T> {
    sim.state().domega.iter().map(|w| f_nominal * *w).collect()
}

/// The load-frequency control environment. Not shareable across threads
/// while an episode runs; create one per worker.
#[derive(Debug, Clone)]
pub struct LfcEnv<T> {
    case: CaseData<T>,
    cfg: EnvConfig<T>,
    base: Simulator<T>,
    rng: ChaCha8Rng,
    seed: u64,
    episode: Option<Episode<T>>,
    snapshot: Option<ResetSnapshot<T>>,
    record_trace: bool,
    trace: Vec<TraceRow<T>>,
    offset_cap: Vec<T>,
}

impl<T: Scalar> LfcEnv<T> {
    /// Loads the configured case (or the built-in one) and builds the environment.
    pub fn from_config(cfg: EnvConfig<T>) -> Result<Self, EnvError> {
        let case = match &cfg.case_path {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| EnvError::Io {
                    path: path.clone(),
                    source,
                })?;
                crate::netmodel::parse_case(&text)?
            }
            None => crate::netmodel::builtin::ieee14()?,
        };
        Self::new(case, cfg)
    }

    pub fn new(case: CaseData<T>, cfg: EnvConfig<T>) -> Result<Self, EnvError> {
        cfg.validate()?;
        case.validate()?;
        if case.bus_index(cfg.disturbance.bus).is_none() {
            return Err(EnvError::Config(format!(
                "disturbance bus {} not in case",
                cfg.disturbance.bus
            )));
        }
        let base = Simulator::new(&case, cfg.sim).map_err(EnvError::EpisodeInit)?;
        let offset_cap = (0..case.n_gen())
            .map(|k| case.governor_of(k).p_offset_max)
            .collect();
        Ok(Self {
            case,
            cfg,
            base,
            rng: ChaCha8Rng::seed_from_u64(0),
            seed: 0,
            episode: None,
            snapshot: None,
            record_trace: false,
            trace: Vec::new(),
            offset_cap,
        })
    }

    pub fn config(&self) -> &EnvConfig<T> {
        &self.cfg
    }

    pub fn case(&self) -> &CaseData<T> {
        &self.case
    }

    pub fn n_gen(&self) -> usize {
        self.case.n_gen()
    }

    pub fn observation_dim(&self) -> usize {
        self.case.n_gen()
    }

    pub fn action_dim(&self) -> usize {
        self.case.n_gen()
    }

    /// Per-component action box.
    pub fn action_bounds(&self) -> (Vec<T>, Vec<T>) {
        let n = self.action_dim();
        (vec![self.cfg.action_low; n], vec![self.cfg.action_high; n])
    }

    /// Reseeds the scenario generator and returns the seed applied.
    pub fn seed(&mut self, value: u64) -> u64 {
        self.rng = ChaCha8Rng::seed_from_u64(value);
        self.seed = value;
        self.snapshot = None;
        value
    }

    pub fn current_seed(&self) -> u64 {
        self.seed
    }

    /// Keep every simulator sample of the episode, starting at t = 0.
    pub fn set_record_trace(&mut self, on: bool) {
        self.record_trace = on;
    }

    pub fn trace(&self) -> &[TraceRow<T>] {
        &self.trace
    }

    pub fn time(&self) -> Option<T> {
        self.episode.as_ref().map(|e| e.sim.state().t)
    }

    pub fn steps_taken(&self) -> Option<usize> {
        self.episode.as_ref().map(|e| e.k)
    }

    pub fn is_done(&self) -> bool {
        self.episode
            .as_ref()
            .is_some_and(|e| e.k >= self.cfg.n_actions)
    }

    /// Cumulative governor offsets of the running episode.
    pub fn offsets(&self) -> Option<&[T]> {
        self.episode.as_ref().map(|e| e.offsets.as_slice())
    }

    pub fn simulator(&self) -> Option<&Simulator<T>> {
        self.episode.as_ref().map(|e| &e.sim)
    }

    fn observe(&self, sim: &Simulator<T>) -> Vec<T> {
        observation(self.case.f_nominal, sim)
    }

    fn draw_dp(&mut self) -> T {
        match self.cfg.random_dp {
            Some((lo, hi)) if lo < hi => {
                let u: f64 = self.rng.random();
                lo + (hi - lo) * T::lit(u)
            }
            Some((lo, _)) => lo,
            None => self.cfg.disturbance.dp,
        }
    }

    /// Starts a new episode and returns the observation at `t_act_start`.
    pub fn reset(&mut self) -> Result<Vec<T>, EnvError> {
        let dp = self.draw_dp();
        let cached = self.snapshot.as_ref().filter(|s| s.dp == dp);
        let (sim, trace) = match cached {
            Some(s) => (s.sim.clone(), s.trace.clone()),
            None => {
                let event = Event {
                    dp,
                    ..self.cfg.disturbance
                };
                let mut sim = self
                    .base
                    .clone()
                    .with_events([event])
                    .map_err(EnvError::EpisodeInit)?;
                let mut trace = vec![sim.sample()];
                let zeros = ControlInput::zeros(self.n_gen());
                trace.extend(
                    sim.run_until(&zeros, self.cfg.t_act_start)
                        .map_err(EnvError::EpisodeInit)?,
                );
                self.snapshot = Some(ResetSnapshot {
                    dp,
                    sim: sim.clone(),
                    trace: trace.clone(),
                });
                (sim, trace)
            }
        };
        self.trace = if self.record_trace { trace } else { Vec::new() };
        let obs = self.observe(&sim);
        self.episode = Some(Episode {
            sim,
            k: 0,
            cumulative_reward: T::zero(),
            offsets: vec![T::zero(); self.n_gen()],
        });
        Ok(obs)
    }

    /// Applies `action` and advances to the next action instant.
    pub fn step(&mut self, action: &[T]) -> Result<StepResult<T>, EnvError> {
        let n_actions = self.cfg.n_actions;
        let n_gen = self.n_gen();
        let (lo, hi) = (self.cfg.action_low, self.cfg.action_high);
        let mode = self.cfg.action_mode;
        let ep = self.episode.as_mut().ok_or(EnvError::NotReset)?;
        if ep.k >= n_actions {
            return Err(EnvError::EpisodeDone);
        }
        if action.len() != n_gen || action.iter().any(|a| !a.is_finite()) {
            return Err(EnvError::InvalidAction {
                expected: n_gen,
                got: action.iter().map(|a| a.to_f64_lossy()).collect(),
            });
        }

        let mut clipped = false;
        for (k, a) in action.iter().enumerate() {
            let applied = a.max(lo).min(hi);
            clipped |= applied != *a;
            let cap = self.offset_cap[k];
            let target = match mode {
                ActionMode::Incremental => ep.offsets[k] + applied,
                ActionMode::Absolute => applied,
            };
            ep.offsets[k] = target.max(-cap).min(cap);
        }

        let t_next = self.cfg.action_instant(ep.k + 1);
        let u = ControlInput {
            p_offset: ep.offsets.clone(),
        };
        let rows = ep.sim.run_until(&u, t_next)?;
        if self.record_trace {
            self.trace.extend(rows);
        }

        ep.k += 1;
        let is_final = ep.k == n_actions;
        let f_coi = coi_frequency(ep.sim.state(), &self.case);
        let reward = compute_reward(f_coi, self.case.f_nominal, is_final, &self.cfg);
        ep.cumulative_reward += reward;
        let info = StepInfo {
            cumulative_reward: ep.cumulative_reward,
            t: ep.sim.state().t,
            f_coi_hz: f_coi,
            clipped,
        };
        let obs = observation(self.case.f_nominal, &ep.sim);
        Ok(StepResult {
            obs,
            reward,
            done: is_final,
            info,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reward_values() {
        let cfg = EnvConfig::<f64>::default();
        assert_eq!(compute_reward(60.0, 60.0, false, &cfg), 0.0);
        assert!((compute_reward(59.9, 60.0, true, &cfg) + 300.0).abs() < 1e-9);
        assert!((compute_reward(60.05, 60.0, false, &cfg) + 5.0).abs() < 1e-9);
    }

    #[test]
    fn instants_are_exact_at_ends() {
        for n in [20, 40, 60, 7] {
            let cfg = EnvConfig::<f64> {
                n_actions: n,
                ..Default::default()
            };
            assert_eq!(cfg.action_instant(0), 5.0);
            assert_eq!(cfg.action_instant(n), 10.0);
        }
        assert_eq!(EnvConfig::<f64>::default().action_interval(), 0.25);
    }

    #[test]
    fn config_errors() {
        let cfg = EnvConfig::<f64> {
            t_act_start: 10.0,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(EnvError::Config(_))));
        let cfg = EnvConfig::<f64> {
            n_actions: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = EnvConfig::<f64> {
            action_low: 0.1,
            action_high: 0.1,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
