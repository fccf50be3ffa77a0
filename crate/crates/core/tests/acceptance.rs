//! One PASS/FAIL line per acceptance criterion. Every criterion runs even
//! when an earlier one fails; the process exits non-zero if any failed.

use std::process::Command;
use std::time::Instant;

use lfc_gym::agent::{
    soft_update, train, Activation, DdpgAgent, DdpgConfig, Mlp, MlpGradients, TrainOptions,
    Transition,
};
use lfc_gym::dynamics::{coi_frequency, ControlInput, Event, SimConfig, Simulator};
use lfc_gym::env::compute_reward;
use lfc_gym::expcli::{evaluate, run_training, ExperimentConfig, RunOutcome};
use lfc_gym::netmodel::{builtin, solve_power_flow, PowerFlowOptions};
use lfc_gym::{Case, Env, EnvCfg};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const F0: f64 = 60.0;
const WINDOW: usize = 50;
const SEEDS: usize = 3;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn ieee14() -> Case {
    builtin::ieee14().unwrap()
}

fn disturbed(case: &Case, h: f64, t_end: f64) -> Simulator<f64> {
    let cfg = SimConfig {
        h_nominal: h,
        ..SimConfig::default()
    };
    let mut sim = Simulator::new(case, cfg)
        .unwrap()
        .with_events([Event::load_step(1.0, 4, 0.6)])
        .unwrap();
    sim.run_until(&ControlInput::zeros(case.n_gen()), t_end)
        .unwrap();
    sim
}

fn power_flow() -> Verdict {
    let pf = solve_power_flow(&ieee14(), PowerFlowOptions::default()).unwrap();
    let two = builtin::twobus::<f64>().unwrap();
    let pf2 = solve_power_flow(&two, PowerFlowOptions::default()).unwrap();
    // sin(2 theta) = -2 p x, V = cos(theta) for the lossless two-bus line
    let theta = -0.5 * (2.0 * two.buses[1].p_load * two.branches[0].x).asin();
    let (dv, da) = (
        (pf2.v_mag[1] - theta.cos()).abs(),
        (pf2.v_ang[1] - theta).abs(),
    );
    let frozen = (pf2.v_mag[1] - 0.99875).abs() < 1e-5 && (pf2.v_ang[1] + 0.05008).abs() < 1e-5;
    verdict(
        pf.iterations <= 10 && pf.max_mismatch <= 1e-8 && dv < 1e-6 && da < 1e-6 && frozen,
        format!(
            "{} iterations, mismatch {:.1e}; two-bus V {:.6} theta {:.6}",
            pf.iterations, pf.max_mismatch, pf2.v_mag[1], pf2.v_ang[1]
        ),
    )
}

fn equilibrium() -> Verdict {
    let case = ieee14();
    let start = Instant::now();
    let mut sim = Simulator::new(&case, SimConfig::default()).unwrap();
    let mut worst = 0.0f64;
    for row in sim.run_until(&ControlInput::zeros(5), 10.0).unwrap() {
        worst = worst.max(
            row.f_hz
                .iter()
                .map(|f| (f / F0 - 1.0).abs())
                .fold(0.0, f64::max),
        );
    }
    worst = worst.max(sim.state().domega.iter().fold(0.0, |m, w| m.max(w.abs())));
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst < 1e-6 && secs < 1.0,
        format!("max |dw| {worst:.1e} pu in {secs:.3} s"),
    )
}

fn integrator_order() -> Verdict {
    let case = ieee14();
    let h = 0.01;
    let err = |a: Vec<f64>, b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    let reference = disturbed(&case, h / 8.0, 3.0).state().differential();
    let e1 = err(disturbed(&case, h, 3.0).state().differential(), &reference);
    let e2 = err(
        disturbed(&case, h / 2.0, 3.0).state().differential(),
        &reference,
    );
    let ratio = e1 / e2;
    verdict(
        (3.5..=4.5).contains(&ratio),
        format!("error ratio {ratio:.3}"),
    )
}

fn droop() -> Verdict {
    let case = ieee14().lossless();
    let beta: f64 = case.governors.iter().map(|g| 1.0 / g.r_droop).sum::<f64>()
        + case.generators.iter().map(|g| g.d).sum::<f64>();
    let expected = -0.6 / beta * F0;
    let sim = disturbed(&case, 0.01, 30.0);
    let df = coi_frequency(sim.state(), sim.case()) - F0;
    verdict(
        (df - expected).abs() < 0.01,
        format!("df {df:.5} Hz vs {expected:.5} Hz"),
    )
}

fn reward() -> Verdict {
    let cfg = EnvCfg::default();
    let got = [
        compute_reward(60.0, F0, false, &cfg),
        compute_reward(59.9, F0, true, &cfg),
        compute_reward(60.05, F0, false, &cfg),
    ];
    let want = [
        0.0,
        -3000.0 * (59.9f64 - 60.0).abs(),
        -100.0 * (60.05f64 - 60.0).abs(),
    ];
    let frozen = (want[1] + 300.0).abs() < 1e-9 && (want[2] + 5.0).abs() < 1e-9;
    verdict(got == want && frozen, format!("{got:?}"))
}

fn episode_protocol() -> Verdict {
    let mut env = Env::from_config(EnvCfg::default()).unwrap();
    env.reset().unwrap();
    let (mut sum, mut steps, mut ok) = (0.0, 0, true);
    loop {
        let s = env.step(&[0.0; 5]).unwrap();
        steps += 1;
        sum += s.reward;
        ok &= s.info.cumulative_reward == sum;
        if s.done {
            ok &= s.info.t == 10.0;
            break;
        }
        if steps > 100 {
            break;
        }
    }
    verdict(ok && steps == 20, format!("{steps} steps, return {sum:.3}"))
}

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-7)
}

fn random_net(rng: &mut ChaCha8Rng, inputs: usize, outputs: usize, act: Activation) -> Mlp<f64> {
    let mut sizes = vec![inputs, rng.random_range(2..=6)];
    if rng.random_bool(0.5) {
        sizes.push(rng.random_range(2..=6));
    }
    sizes.push(outputs);
    Mlp::random(&sizes, act, 0.5, rng)
}

fn fd_worst(net: &Mlp<f64>, analytic: &MlpGradients<f64>, f: impl Fn(&Mlp<f64>) -> f64) -> f64 {
    let eps = 1e-5;
    analytic
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let mut p = net.clone();
            *p.params_mut().nth(k).unwrap() += eps;
            let mut m = net.clone();
            *m.params_mut().nth(k).unwrap() -= eps;
            rel_err(*a, (f(&p) - f(&m)) / (2.0 * eps))
        })
        .fold(0.0, f64::max)
}

fn gradients() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    let vec = |rng: &mut ChaCha8Rng, n: usize| {
        (0..n)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect::<Vec<f64>>()
    };
    let (mut actor_w, mut critic_w, mut chain_w) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let (s, a) = (rng.random_range(1..=4), rng.random_range(1..=3));
        let actor = random_net(&mut rng, s, a, Activation::Tanh);
        let critic = random_net(&mut rng, s + a, 1, Activation::Identity);
        let obs = vec(&mut rng, s);
        let c = vec(&mut rng, a);

        let cache = actor.forward(&obs).unwrap();
        let mut g = MlpGradients::zeros_like(&actor);
        actor.backward(&cache, &c, Some(&mut g)).unwrap();
        let dot = |n: &Mlp<f64>| {
            n.predict(&obs)
                .unwrap()
                .iter()
                .zip(&c)
                .map(|(y, w)| y * w)
                .sum::<f64>()
        };
        actor_w = actor_w.max(fd_worst(&actor, &g, dot));

        let x = vec(&mut rng, s + a);
        let cache = critic.forward(&x).unwrap();
        let mut g = MlpGradients::zeros_like(&critic);
        critic.backward(&cache, &[1.0], Some(&mut g)).unwrap();
        critic_w = critic_w.max(fd_worst(&critic, &g, |n| n.predict(&x).unwrap()[0]));

        let a_cache = actor.forward(&obs).unwrap();
        let mut x = obs.clone();
        x.extend_from_slice(a_cache.output());
        let dq = critic
            .backward(&critic.forward(&x).unwrap(), &[1.0], None)
            .unwrap();
        let mut g = MlpGradients::zeros_like(&actor);
        actor.backward(&a_cache, &dq[s..], Some(&mut g)).unwrap();
        let q = |n: &Mlp<f64>| {
            let mut x = obs.clone();
            x.extend(n.predict(&obs).unwrap());
            critic.predict(&x).unwrap()[0]
        };
        chain_w = chain_w.max(fd_worst(&actor, &g, q));
    }
    verdict(
        actor_w < 1e-4 && critic_w < 1e-4 && chain_w < 1e-4,
        format!(
            "worst relative error actor {actor_w:.1e} critic {critic_w:.1e} chained {chain_w:.1e}"
        ),
    )
}

fn ddpg_algebra() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(80);
    let online = Mlp::<f64>::random(&[4, 8, 2], Activation::Tanh, 1.0, &mut rng);
    let mut target = Mlp::<f64>::random(&[4, 8, 2], Activation::Tanh, 1.0, &mut rng);
    soft_update(&mut target, &online, 1.0);
    let copies = target == online;

    let cfg = DdpgConfig {
        gamma: 0.0,
        reward_scale: 1.0,
        batch: 8,
        ..DdpgConfig::default()
    };
    let mut agent = DdpgAgent::new(3, vec![-0.1; 2], vec![0.1; 2], cfg, 1).unwrap();
    for i in 0..16 {
        let x = i as f64 * 0.1;
        agent.observe(Transition {
            obs: vec![x, -x, 1.0],
            action: vec![0.01 * x, -0.02],
            reward: -3.7 * x,
            next_obs: vec![x + 0.1, 0.0, -1.0],
            done: i % 5 == 4,
        });
    }
    let batch: Vec<_> = agent.buffer().iter_oldest_first().collect();
    let gamma_zero = agent
        .td_targets(&batch)
        .unwrap()
        .iter()
        .zip(&batch)
        .all(|(y, t)| *y == t.reward);

    let mut env = Env::from_config(EnvCfg::default()).unwrap();
    let (lo, hi) = env.action_bounds();
    let cfg = DdpgConfig {
        episodes: 10,
        ..DdpgConfig::default()
    };
    let mut agent = DdpgAgent::new(env.observation_dim(), lo, hi, cfg, 2).unwrap();
    let before = agent.clone();
    train(
        &mut agent,
        &mut env,
        TrainOptions {
            seed: 2,
            record_rewards: false,
        },
    )
    .unwrap();
    let frozen = agent.steps() == 200
        && agent.actor == before.actor
        && agent.critic == before.critic
        && agent.target_actor == before.target_actor
        && agent.target_critic == before.target_critic;
    verdict(
        copies && gamma_zero && frozen,
        format!("tau=1 copy {copies}, gamma=0 targets {gamma_zero}, frozen before learning_start {frozen}"),
    )
}

fn train_setting(
    label: &str,
    seed_block: u64,
    tweak: impl Fn(&mut ExperimentConfig),
) -> Vec<RunOutcome> {
    let mut cfg = ExperimentConfig::default();
    tweak(&mut cfg);
    (0..SEEDS)
        .map(|r| {
            let start = Instant::now();
            let o = run_training(&cfg, label, r, 1000 * seed_block + r as u64);
            println!(
                "  trained {label} run {r} seed {} in {:.1} s",
                o.seed,
                start.elapsed().as_secs_f64()
            );
            o
        })
        .collect()
}

/// Mean |f(T_f) - 60| over the last `WINDOW` training episodes of one run.
fn last_window(o: &RunOutcome) -> Option<f64> {
    if !o.succeeded() || o.log.records.len() < WINDOW {
        return None;
    }
    let tail = &o.log.records[o.log.records.len() - WINDOW..];
    Some(tail.iter().map(|r| (r.f_final_hz - F0).abs()).sum::<f64>() / WINDOW as f64)
}

/// Tail deviations of every run pooled into one mean; any failed run
/// disqualifies the setting.
fn pooled(runs: &[RunOutcome]) -> Option<f64> {
    let per: Option<Vec<f64>> = runs.iter().map(last_window).collect();
    per.map(|v| v.iter().sum::<f64>() / v.len() as f64)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or("failed".to_string(), |v| format!("{v:.4}"))
}

fn trend_a(default: &[RunOutcome]) -> Verdict {
    let per: Vec<Option<f64>> = default.iter().map(last_window).collect();
    let within = per.iter().filter(|d| d.is_some_and(|d| d <= 0.02)).count();
    let shown: Vec<String> = per.iter().map(|d| fmt_opt(*d)).collect();
    verdict(
        within >= 2,
        format!(
            "last-{WINDOW} mean |df| per seed [{}] Hz, {within}/3 within 0.02",
            shown.join(", ")
        ),
    )
}

fn ordering(a: &[RunOutcome], b: &[RunOutcome], a_name: &str, b_name: &str) -> Verdict {
    let (pa, pb) = (pooled(a), pooled(b));
    let pass = matches!((pa, pb), (Some(x), Some(y)) if x < y);
    verdict(
        pass,
        format!("{a_name} {} Hz vs {b_name} {} Hz", fmt_opt(pa), fmt_opt(pb)),
    )
}

fn validation(default: &[RunOutcome]) -> Verdict {
    // best by training tail deviation, then evaluated greedily
    let best = default
        .iter()
        .filter_map(|o| last_window(o).map(|d| (d, o)))
        .min_by(|x, y| x.0.total_cmp(&y.0));
    let Some((_, o)) = best else {
        return verdict(false, "no successful run");
    };
    let r = evaluate(
        o.checkpoint.as_ref().unwrap(),
        &ExperimentConfig::default().env,
    )
    .unwrap();
    verdict(
        r.dev_hz <= 0.05,
        format!("run {} greedy |f(10 s) - 60| = {:.4} Hz", o.run, r.dev_hz),
    )
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut logs = Vec::new();
    for name in ["first", "second"] {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_lfc-gym"))
            .args(["train", "--seed", "7", "--out-dir"])
            .arg(&out)
            .status()
            .unwrap();
        if !status.success() {
            return verdict(false, format!("train exited with {status}"));
        }
        logs.push(std::fs::read(out.join("train_log.csv")).unwrap());
    }
    verdict(
        logs[0] == logs[1],
        format!("{} bytes, identical {}", logs[0].len(), logs[0] == logs[1]),
    )
}

fn main() {
    let mut results: Vec<(&str, Verdict)> = vec![
        ("power flow", power_flow()),
        ("equilibrium", equilibrium()),
        ("integrator order", integrator_order()),
        ("droop oracle", droop()),
        ("reward values", reward()),
        ("episode protocol", episode_protocol()),
        ("gradient checks", gradients()),
        ("ddpg algebra", ddpg_algebra()),
    ];
    let default = train_setting("default", 0, |_| {});
    let coarse = train_setting("n_actions=60", 1, |c| c.env.n_actions = 60);
    let eager = train_setting("learning_start=0", 2, |c| c.agent.learning_start = 0);
    results.push(("training tail deviation", trend_a(&default)));
    results.push((
        "fewer actions train better",
        ordering(&default, &coarse, "n_actions=20", "n_actions=60"),
    ));
    results.push((
        "delayed learning trains better",
        ordering(&default, &eager, "learning_start=200", "learning_start=0"),
    ));
    results.push(("greedy validation rollout", validation(&default)));
    results.push(("train determinism", determinism()));

    let mut failed = 0;
    for (i, (name, v)) in results.iter().enumerate() {
        failed += usize::from(!v.pass);
        println!(
            "{} {:>2} {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
