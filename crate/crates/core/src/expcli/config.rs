//! `[ENV]` / `[AGENT]` experiment configuration files.
//!
//! Each record is `key value...`; unknown sections or keys are rejected so
//! typos surface instead of silently falling back to defaults.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::agent::DdpgConfig;
use crate::env::{ActionMode, EnvConfig};
use crate::sections::{split_sections, Record};

use super::ExpError;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub env: EnvConfig<f64>,
    pub agent: DdpgConfig<f64>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExpError> {
        self.env
            .validate()
            .map_err(|e| ExpError::Config(e.to_string()))?;
        self.agent
            .validate()
            .map_err(|e| ExpError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ExpError> {
        let text = std::fs::read_to_string(path).map_err(|e| ExpError::io(path, e))?;
        let mut cfg = parse_config(&text)?;
        // relative case paths resolve against the config file
        if let (Some(case), Some(dir)) = (&cfg.env.case_path, path.parent()) {
            if case.is_relative() {
                cfg.env.case_path = Some(dir.join(case));
            }
        }
        Ok(cfg)
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ExpError> {
    let mut cfg = ExperimentConfig::default();
    let sections = split_sections(text).map_err(|e| ExpError::Config(e.to_string()))?;
    for section in &sections {
        for rec in &section.records {
            match section.name {
                "ENV" => apply_env(&mut cfg.env, rec)?,
                "AGENT" => apply_agent(&mut cfg.agent, rec)?,
                other => {
                    return Err(ExpError::Config(format!(
                        "line {}: unknown section [{other}]",
                        section.line
                    )))
                }
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn bad(rec: &Record<'_>, msg: impl std::fmt::Display) -> ExpError {
    ExpError::Config(format!("line {}: {msg}", rec.line))
}

fn one<V: FromStr>(rec: &Record<'_>) -> Result<V, ExpError> {
    match rec.fields.as_slice() {
        [key, value] => value
            .parse()
            .map_err(|_| bad(rec, format!("cannot parse `{value}` for `{key}`"))),
        [key, ..] => Err(bad(rec, format!("`{key}` takes exactly one value"))),
        [] => unreachable!("records are never empty"),
    }
}

fn many<V: FromStr>(rec: &Record<'_>) -> Result<Vec<V>, ExpError> {
    rec.fields[1..]
        .iter()
        .map(|v| {
            v.parse()
                .map_err(|_| bad(rec, format!("cannot parse `{v}`")))
        })
        .collect()
}

fn apply_env(env: &mut EnvConfig<f64>, rec: &Record<'_>) -> Result<(), ExpError> {
    match rec.fields[0] {
        "case" => env.case_path = Some(PathBuf::from(one::<String>(rec)?)),
        "disturbance_time" => env.disturbance.time = one(rec)?,
        "disturbance_bus" => env.disturbance.bus = one(rec)?,
        "disturbance_dp" => env.disturbance.dp = one(rec)?,
        "disturbance_dq" => env.disturbance.dq = one(rec)?,
        "random_dp" => match many::<f64>(rec)?.as_slice() {
            [lo, hi] => env.random_dp = Some((*lo, *hi)),
            _ => return Err(bad(rec, "`random_dp` takes two values")),
        },
        "t_act_start" => env.t_act_start = one(rec)?,
        "t_final" => env.t_final = one(rec)?,
        "n_actions" => env.n_actions = one(rec)?,
        "action_low" => env.action_low = one(rec)?,
        "action_high" => env.action_high = one(rec)?,
        "w_mid" => env.w_mid = one(rec)?,
        "w_final" => env.w_final = one(rec)?,
        "action_mode" => {
            env.action_mode = match one::<String>(rec)?.as_str() {
                "incremental" => ActionMode::Incremental,
                "absolute" => ActionMode::Absolute,
                other => return Err(bad(rec, format!("unknown action_mode `{other}`"))),
            }
        }
        "h" => env.sim.h_nominal = one(rec)?,
        "newton_tol" => env.sim.newton_tol = one(rec)?,
        "newton_max_iter" => env.sim.newton_max_iter = one(rec)?,
        key => return Err(bad(rec, format!("unknown [ENV] key `{key}`"))),
    }
    Ok(())
}

fn apply_agent(agent: &mut DdpgConfig<f64>, rec: &Record<'_>) -> Result<(), ExpError> {
    match rec.fields[0] {
        "gamma" => agent.gamma = one(rec)?,
        "tau" => agent.tau = one(rec)?,
        "actor_lr" => agent.actor_lr = one(rec)?,
        "critic_lr" => agent.critic_lr = one(rec)?,
        "batch" => agent.batch = one(rec)?,
        "buffer_capacity" => agent.buffer_capacity = one(rec)?,
        "noise_sigma" => agent.noise_sigma = one(rec)?,
        "learning_start" => agent.learning_start = one(rec)?,
        "updates_per_step" => agent.updates_per_step = one(rec)?,
        "episodes" => agent.episodes = one(rec)?,
        "hidden" => agent.hidden = many(rec)?,
        "reward_scale" => agent.reward_scale = one(rec)?,
        key => return Err(bad(rec, format!("unknown [AGENT] key `{key}`"))),
    }
    Ok(())
}
