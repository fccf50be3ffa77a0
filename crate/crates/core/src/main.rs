use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use lfc_gym::agent::Checkpoint;
use lfc_gym::dynamics::{Event, SimConfig};
use lfc_gym::expcli::{
    self, csvio, ExpError, ExperimentConfig, SimulateSpec, SweepParam, SweepSpec,
};

#[derive(Parser)]
#[command(
    name = "lfc-gym",
    version,
    about = "Load-frequency control RL experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Case file; defaults to the built-in IEEE 14-bus system.
    #[arg(long)]
    case: Option<PathBuf>,
    /// Experiment config with [ENV] and [AGENT] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    episodes: Option<usize>,
    /// Nominal simulator step, s.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    n_actions: Option<usize>,
    #[arg(long)]
    learning_start: Option<usize>,
    /// Agents per setting; 1 for train and 10 for sweep when omitted.
    #[arg(long)]
    runs: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Open-loop simulation with an optional load step.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20.0)]
        t_end: f64,
        /// Zero all branch resistances.
        #[arg(long)]
        lossless: bool,
        #[arg(long, default_value_t = 4)]
        event_bus: usize,
        /// Load step, pu; 0 disables the event.
        #[arg(long, default_value_t = 0.6)]
        event_dp: f64,
        #[arg(long, default_value_t = 1.0)]
        event_time: f64,
    },
    /// Train one agent, or `--runs` agents on consecutive seeds.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Train `runs` agents for every value of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// learning_start or n_actions
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
    },
    /// Deterministic rollout of a saved agent.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Recompute summary.csv from a train_log.csv.
    Summarize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        train_log: PathBuf,
        #[arg(long, default_value_t = expcli::DEFAULT_WINDOW)]
        window: usize,
    },
}

fn experiment(common: &Common) -> Result<ExperimentConfig, ExpError> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(case) = &common.case {
        cfg.env.case_path = Some(case.clone());
    }
    if let Some(v) = common.episodes {
        cfg.agent.episodes = v;
    }
    if let Some(v) = common.h {
        cfg.env.sim.h_nominal = v;
    }
    if let Some(v) = common.n_actions {
        cfg.env.n_actions = v;
    }
    if let Some(v) = common.learning_start {
        cfg.agent.learning_start = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn jobs(common: &Common) -> usize {
    if common.jobs == 0 {
        rayon::current_num_threads()
    } else {
        common.jobs
    }
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Ok(true) when every run succeeded.
fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Simulate {
            common,
            t_end,
            lossless,
            event_bus,
            event_dp,
            event_time,
        } => {
            let mut sim = SimConfig::default();
            if let Some(h) = common.h {
                sim.h_nominal = h;
            }
            let events = if event_dp != 0.0 {
                vec![Event::load_step(event_time, event_bus, event_dp)]
            } else {
                Vec::new()
            };
            let spec = SimulateSpec {
                case_path: common.case.clone(),
                lossless,
                events,
                t_end,
                sim,
            };
            let trace = expcli::simulate(&spec)?;
            create_dir(&common.out_dir)?;
            let path = common.out_dir.join("trace.csv");
            csvio::write_trace(&path, &trace)?;
            let last = trace.last().expect("trace has the initial row");
            println!(
                "t={} f_coi={:.6} Hz -> {}",
                last.t,
                last.f_coi_hz,
                path.display()
            );
            Ok(true)
        }
        Command::Train { common } => {
            let cfg = experiment(&common)?;
            let outcomes = expcli::run_repeated(
                &cfg,
                "train",
                common.runs.unwrap_or(1),
                common.seed,
                jobs(&common),
            )?;
            let f_nominal = expcli::load_case(cfg.env.case_path.as_deref())?.f_nominal;
            let files =
                expcli::write_outputs(&common.out_dir, &outcomes, f_nominal, cfg.agent.episodes)?;
            report(&outcomes, &files);
            Ok(outcomes.iter().all(|o| o.succeeded()))
        }
        Command::Sweep {
            common,
            param,
            values,
        } => {
            let spec = SweepSpec {
                param: param.parse::<SweepParam>()?,
                values,
                runs: common.runs.unwrap_or(10),
                base: experiment(&common)?,
                seed_base: common.seed,
            };
            let outcomes = expcli::run_sweep(&spec, jobs(&common))?;
            let f_nominal = expcli::load_case(spec.base.env.case_path.as_deref())?.f_nominal;
            let files = expcli::write_outputs(
                &common.out_dir,
                &outcomes,
                f_nominal,
                spec.base.agent.episodes,
            )?;
            report(&outcomes, &files);
            Ok(outcomes.iter().all(|o| o.succeeded()))
        }
        Command::Eval { common, checkpoint } => {
            let cfg = experiment(&common)?;
            let ck = Checkpoint::load(&checkpoint).map_err(ExpError::from)?;
            let result = expcli::evaluate(&ck, &cfg.env)?;
            create_dir(&common.out_dir)?;
            let path = common.out_dir.join("trace.csv");
            csvio::write_trace(&path, &result.trace)?;
            println!(
                "final deviation {:.6} Hz ({} rows -> {})",
                result.dev_hz,
                result.trace.len(),
                path.display()
            );
            Ok(true)
        }
        Command::Summarize {
            common,
            train_log,
            window,
        } => {
            let rows = csvio::read_train_log(&train_log)?;
            let (summary, curves) = expcli::summarize(&rows, window)?;
            create_dir(&common.out_dir)?;
            csvio::write_summary(&common.out_dir.join("summary.csv"), &summary)?;
            csvio::write_curves(&common.out_dir.join("curves.csv"), &curves)?;
            for s in &summary {
                println!(
                    "{}: {:.6} +/- {:.6} Hz over {} runs",
                    s.setting, s.mean_dev_hz, s.std_dev_hz, s.runs
                );
            }
            Ok(true)
        }
    }
}

fn report(outcomes: &[expcli::RunOutcome], files: &expcli::RunFiles) {
    for o in outcomes {
        match &o.error {
            None => println!("{} run {} (seed {}): ok", o.setting, o.run, o.seed),
            Some(e) => eprintln!("{} run {} (seed {}): failed: {e}", o.setting, o.run, o.seed),
        }
    }
    println!("wrote {}", files.train_log.display());
    if let Some(p) = &files.summary {
        println!("wrote {}", p.display());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .downcast_ref::<ExpError>()
                .map_or(1, ExpError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
