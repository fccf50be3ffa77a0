//! Training runs and parameter sweeps.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::agent::{train, Checkpoint, DdpgAgent, TrainLog, TrainOptions};
use crate::env::LfcEnv;

use super::config::ExperimentConfig;
use super::csvio::{self, TrainRow, STATUS_FAILED, STATUS_OK};
use super::summary::{summarize, DEFAULT_WINDOW};
use super::ExpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    LearningStart,
    NActions,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            Self::LearningStart => "learning_start",
            Self::NActions => "n_actions",
        }
    }

    pub fn apply(self, cfg: &mut ExperimentConfig, value: usize) {
        match self {
            Self::LearningStart => cfg.agent.learning_start = value,
            Self::NActions => cfg.env.n_actions = value,
        }
    }
}

impl FromStr for SweepParam {
    type Err = ExpError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "learning_start" => Ok(Self::LearningStart),
            "n_actions" => Ok(Self::NActions),
            other => Err(ExpError::Config(format!(
                "unknown sweep parameter `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<usize>,
    pub runs: usize,
    pub base: ExperimentConfig,
    pub seed_base: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), ExpError> {
        if self.values.is_empty() {
            return Err(ExpError::Config("sweep needs at least one value".into()));
        }
        if self.runs == 0 {
            return Err(ExpError::Config("sweep needs at least one run".into()));
        }
        for v in &self.values {
            self.config_for(*v).validate()?;
        }
        Ok(())
    }

    pub fn config_for(&self, value: usize) -> ExperimentConfig {
        let mut cfg = self.base.clone();
        self.param.apply(&mut cfg, value);
        cfg
    }

    pub fn setting_label(&self, value: usize) -> String {
        format!("{}={value}", self.param.name())
    }

    /// Run `r` of setting `s_index` uses `seed_base + 1000 * s_index + r`.
    pub fn seed_for(&self, s_index: usize, run: usize) -> u64 {
        self.seed_base + 1000 * s_index as u64 + run as u64
    }
}

/// One finished or aborted training run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub setting: String,
    pub run: usize,
    pub seed: u64,
    pub log: TrainLog<f64>,
    /// `None` on success.
    pub error: Option<String>,
    /// Episode during which a failed run stopped.
    pub failed_episode: Option<usize>,
    pub checkpoint: Option<Checkpoint<f64>>,
}

impl RunOutcome {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }

    pub fn rows(&self, f_nominal: f64) -> Vec<TrainRow> {
        let status = if self.succeeded() {
            STATUS_OK
        } else {
            STATUS_FAILED
        };
        let mut rows: Vec<TrainRow> = self
            .log
            .records
            .iter()
            .map(|r| TrainRow {
                setting: self.setting.clone(),
                run: self.run,
                episode: r.episode,
                f_final_hz: Some(r.f_final_hz),
                dev_hz: Some((r.f_final_hz - f_nominal).abs()),
                episode_return: Some(r.episode_return),
                status: status.to_string(),
            })
            .collect();
        if let Some(episode) = self.failed_episode {
            rows.push(TrainRow {
                setting: self.setting.clone(),
                run: self.run,
                episode,
                f_final_hz: None,
                dev_hz: None,
                episode_return: None,
                status: status.to_string(),
            });
        }
        rows
    }
}

/// Trains one agent; simulator and learner failures are captured in the
/// outcome rather than returned.
pub fn run_training(cfg: &ExperimentConfig, setting: &str, run: usize, seed: u64) -> RunOutcome {
    let failed = |error: String| RunOutcome {
        setting: setting.to_string(),
        run,
        seed,
        log: TrainLog {
            seed,
            records: Vec::new(),
            config_echo: String::new(),
        },
        error: Some(error),
        failed_episode: Some(0),
        checkpoint: None,
    };
    let mut env = match LfcEnv::from_config(cfg.env.clone()) {
        Ok(env) => env,
        Err(e) => return failed(e.to_string()),
    };
    let (low, high) = env.action_bounds();
    let mut agent = match DdpgAgent::new(env.observation_dim(), low, high, cfg.agent.clone(), seed)
    {
        Ok(a) => a,
        Err(e) => return failed(e.to_string()),
    };
    let opts = TrainOptions {
        seed,
        record_rewards: false,
    };
    let (log, error, failed_episode) = match train(&mut agent, &mut env, opts) {
        Ok(log) => (log, None, None),
        Err(f) => (f.log, Some(f.error.to_string()), Some(f.episode)),
    };
    RunOutcome {
        setting: setting.to_string(),
        run,
        seed,
        log,
        error,
        failed_episode,
        checkpoint: Some(agent.checkpoint()),
    }
}

/// Runs every (value, run) pair of the sweep on at most `jobs` threads.
/// Outcomes come back ordered by setting, then run.
pub fn run_sweep(spec: &SweepSpec, jobs: usize) -> Result<Vec<RunOutcome>, ExpError> {
    spec.validate()?;
    let tasks: Vec<(usize, usize, usize)> = spec
        .values
        .iter()
        .enumerate()
        .flat_map(|(s, v)| (0..spec.runs).map(move |r| (s, *v, r)))
        .collect();
    let work = |&(s, v, r): &(usize, usize, usize)| {
        run_training(
            &spec.config_for(v),
            &spec.setting_label(v),
            r,
            spec.seed_for(s, r),
        )
    };
    execute(&tasks, jobs, work)
}

/// Trains `runs` agents on one config; run `r` uses seed `seed + r`.
pub fn run_repeated(
    cfg: &ExperimentConfig,
    setting: &str,
    runs: usize,
    seed: u64,
    jobs: usize,
) -> Result<Vec<RunOutcome>, ExpError> {
    if runs == 0 {
        return Err(ExpError::Config("runs must be at least 1".into()));
    }
    cfg.validate()?;
    let tasks: Vec<usize> = (0..runs).collect();
    execute(&tasks, jobs, |&r| {
        run_training(cfg, setting, r, seed + r as u64)
    })
}

fn execute<I: Sync, F>(tasks: &[I], jobs: usize, work: F) -> Result<Vec<RunOutcome>, ExpError>
where
    F: Fn(&I) -> RunOutcome + Sync + Send,
{
    if jobs <= 1 {
        return Ok(tasks.iter().map(work).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| ExpError::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| tasks.par_iter().map(work).collect()))
}

/// Files written for a set of runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFiles {
    pub train_log: PathBuf,
    pub summary: Option<PathBuf>,
    pub curves: Option<PathBuf>,
    pub checkpoints: Vec<PathBuf>,
}

/// Writes `train_log.csv`, `summary.csv`, `curves.csv` and one checkpoint
/// per run into `out_dir`. The summary window is the default one, shortened
/// to the episode count when runs are shorter; it is skipped when no run
/// completed.
pub fn write_outputs(
    out_dir: &Path,
    outcomes: &[RunOutcome],
    f_nominal: f64,
    episodes: usize,
) -> Result<RunFiles, ExpError> {
    std::fs::create_dir_all(out_dir).map_err(|e| ExpError::io(out_dir, e))?;
    let rows: Vec<TrainRow> = outcomes.iter().flat_map(|o| o.rows(f_nominal)).collect();
    let train_log = out_dir.join("train_log.csv");
    csvio::write_train_log(&train_log, &rows)?;

    let mut files = RunFiles {
        train_log,
        summary: None,
        curves: None,
        checkpoints: Vec::new(),
    };
    let window = DEFAULT_WINDOW.min(episodes);
    if window > 0 && outcomes.iter().any(RunOutcome::succeeded) {
        let (summary, curves) = summarize(&rows, window)?;
        let path = out_dir.join("summary.csv");
        csvio::write_summary(&path, &summary)?;
        files.summary = Some(path);
        let path = out_dir.join("curves.csv");
        csvio::write_curves(&path, &curves)?;
        files.curves = Some(path);
    }

    let ck_dir = out_dir.join("checkpoints");
    for o in outcomes {
        if let Some(ck) = &o.checkpoint {
            std::fs::create_dir_all(&ck_dir).map_err(|e| ExpError::io(&ck_dir, e))?;
            let path = ck_dir.join(format!("{}_run{}.ddpg", o.setting.replace('=', "_"), o.run));
            ck.save(&path).map_err(|e| ExpError::io(&path, e))?;
            files.checkpoints.push(path);
        }
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(values: Vec<usize>) -> SweepSpec {
        SweepSpec {
            param: SweepParam::LearningStart,
            values,
            runs: 10,
            base: ExperimentConfig::default(),
            seed_base: 7,
        }
    }

    #[test]
    fn seeds_separate_settings() {
        let s = spec(vec![0, 100]);
        assert_eq!(s.seed_for(0, 3), 10);
        assert_eq!(s.seed_for(1, 0), 1007);
        assert_eq!(s.setting_label(100), "learning_start=100");
    }

    #[test]
    fn empty_values_are_a_config_error() {
        assert!(matches!(spec(vec![]).validate(), Err(ExpError::Config(_))));
        let mut s = spec(vec![1]);
        s.runs = 0;
        assert!(s.validate().is_err());
        let mut s = spec(vec![0]);
        s.param = SweepParam::NActions;
        assert!(s.validate().is_err());
    }

    #[test]
    fn params_parse_by_name() {
        assert_eq!(
            "n_actions".parse::<SweepParam>().unwrap(),
            SweepParam::NActions
        );
        assert!("gamma".parse::<SweepParam>().is_err());
    }
}
