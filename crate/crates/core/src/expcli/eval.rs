//! Deterministic checkpoint rollouts and open-loop simulation runs.

use std::path::PathBuf;

use crate::agent::{rollout, Checkpoint};
use crate::dynamics::{Event, SimConfig, Simulator, TraceRow};
use crate::env::{EnvConfig, LfcEnv};
use crate::netmodel::{builtin, parse_case, CaseData};

use super::ExpError;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    /// Every simulator sample from t = 0 to `t_final`.
    pub trace: Vec<TraceRow<f64>>,
    pub f_final_hz: f64,
    pub dev_hz: f64,
    pub episode_return: f64,
}

/// Plays one noise-free episode with the checkpoint's actor.
pub fn evaluate(ck: &Checkpoint<f64>, env_cfg: &EnvConfig<f64>) -> Result<EvalResult, ExpError> {
    let mut env = LfcEnv::from_config(env_cfg.clone())?;
    evaluate_with(
        &mut env,
        |obs| ck.act(obs),
        Some((ck.obs_dim(), ck.action_dim())),
    )
}

/// Like [`evaluate`], with an arbitrary policy; `dims` is checked against
/// the environment when given.
pub fn evaluate_with<F>(
    env: &mut LfcEnv<f64>,
    policy: F,
    dims: Option<(usize, usize)>,
) -> Result<EvalResult, ExpError>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, crate::agent::AgentError>,
{
    if let Some((obs, act)) = dims {
        if obs != env.observation_dim() || act != env.action_dim() {
            return Err(ExpError::CheckpointMismatch {
                checkpoint: (obs, act),
                env: (env.observation_dim(), env.action_dim()),
            });
        }
    }
    env.set_record_trace(true);
    let r = rollout(env, policy).map_err(|e| ExpError::Run(e.to_string()))?;
    let f_nominal = env.case().f_nominal;
    Ok(EvalResult {
        trace: env.trace().to_vec(),
        f_final_hz: r.f_final_hz,
        dev_hz: (r.f_final_hz - f_nominal).abs(),
        episode_return: r.episode_return,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateSpec {
    /// `None` selects the built-in IEEE 14-bus case.
    pub case_path: Option<PathBuf>,
    /// Zero all branch resistances.
    pub lossless: bool,
    pub events: Vec<Event<f64>>,
    pub t_end: f64,
    pub sim: SimConfig<f64>,
}

pub fn load_case(path: Option<&std::path::Path>) -> Result<CaseData<f64>, ExpError> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| ExpError::io(p, e))?;
            Ok(parse_case(&text)?)
        }
        None => Ok(builtin::ieee14()?),
    }
}

/// Open-loop run with zero governor offsets; one trace row per simulator
/// step, starting with the initial state.
pub fn simulate(spec: &SimulateSpec) -> Result<Vec<TraceRow<f64>>, ExpError> {
    if !(spec.t_end >= 0.0) {
        return Err(ExpError::Config("t_end must be non-negative".into()));
    }
    let mut case = load_case(spec.case_path.as_deref())?;
    if spec.lossless {
        case = case.lossless();
    }
    let mut sim = Simulator::new(&case, spec.sim)?.with_events(spec.events.iter().copied())?;
    let mut trace = vec![sim.sample()];
    let zeros = crate::dynamics::ControlInput::zeros(case.n_gen());
    trace.extend(sim.run_until(&zeros, spec.t_end)?);
    Ok(trace)
}
