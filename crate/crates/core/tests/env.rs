use lfc_gym::env::{ActionMode, EnvError};
use lfc_gym::{Env, EnvCfg};
use proptest::prelude::*;

const F0: f64 = 60.0;

fn env(cfg: EnvCfg) -> Env {
    Env::from_config(cfg).unwrap()
}

#[test]
fn default_episode_has_twenty_steps_ending_at_t_final() {
    let mut e = env(EnvCfg::default());
    let obs = e.reset().unwrap();
    assert_eq!(obs.len(), 5);
    assert_eq!(e.time(), Some(5.0));
    let mut sum = 0.0;
    for k in 1..=20 {
        let s = e.step(&[0.01; 5]).unwrap();
        sum += s.reward;
        assert_eq!(s.done, k == 20, "step {k}");
        assert_eq!(s.info.cumulative_reward, sum);
        assert!(s.reward <= 0.0);
        if k == 20 {
            assert_eq!(s.info.t, 10.0);
        }
    }
    assert!(matches!(e.step(&[0.0; 5]), Err(EnvError::EpisodeDone)));
}

#[test]
fn step_before_reset_is_rejected() {
    let mut e = env(EnvCfg::default());
    assert!(matches!(e.step(&[0.0; 5]), Err(EnvError::NotReset)));
}

#[test]
fn load_increase_gives_under_frequency_observations() {
    let mut e = env(EnvCfg::default());
    let obs = e.reset().unwrap();
    assert!(obs.iter().all(|o| *o < 0.0), "{obs:?}");
}

#[test]
fn no_disturbance_observes_nominal_frequency() {
    let mut cfg = EnvCfg::default();
    cfg.disturbance.dp = 0.0;
    let mut e = env(cfg);
    let obs = e.reset().unwrap();
    assert!(obs.iter().all(|o| o.abs() < 1e-6), "{obs:?}");
}

#[test]
fn zero_action_mid_rewards_track_quasi_steady_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lossless.case");
    let case = lfc_gym::netmodel::builtin::ieee14::<f64>()
        .unwrap()
        .lossless();
    std::fs::write(&path, case.to_case_text()).unwrap();
    let mut cfg = EnvCfg::default();
    cfg.case_path = Some(path);
    let mut e = env(cfg);
    e.reset().unwrap();
    let beta: f64 = case.governors.iter().map(|g| 1.0 / g.r_droop).sum::<f64>()
        + case.generators.iter().map(|g| g.d).sum::<f64>();
    let expected = -100.0 * 0.6 / beta * F0;
    let rewards: Vec<f64> = (0..19).map(|_| e.step(&[0.0; 5]).unwrap().reward).collect();
    // the lightly damped frequency mode still rings at 5 s, decaying towards the droop value
    for (k, r) in rewards.iter().enumerate() {
        assert!(
            (r - expected).abs() < 0.12 * expected.abs(),
            "step {k}: {r} vs {expected}"
        );
    }
    for r in &rewards[14..] {
        assert!(
            (r - expected).abs() < 0.02 * expected.abs(),
            "{r} vs {expected}"
        );
    }
}

#[test]
fn reset_is_repeatable_under_one_seed() {
    let mut e = env(EnvCfg::default());
    assert_eq!(e.seed(7), 7);
    let a = e.reset().unwrap();
    e.step(&[0.05; 5]).unwrap();
    let b = e.reset().unwrap();
    assert_eq!(a, b);
    assert_eq!(e.offsets().unwrap(), &[0.0; 5]);
}

#[test]
fn random_disturbance_mode_depends_on_seed() {
    let mut cfg = EnvCfg::default();
    cfg.random_dp = Some((0.2, 0.8));
    let mut e = env(cfg);
    e.seed(7);
    let a = e.reset().unwrap();
    e.seed(8);
    let b = e.reset().unwrap();
    assert_ne!(a, b);
    e.seed(7);
    assert_eq!(e.reset().unwrap(), a);
}

#[test]
fn offsets_accumulate_and_saturate() {
    let mut e = env(EnvCfg::default());
    e.reset().unwrap();
    for _ in 0..3 {
        e.step(&[0.1, -0.1, 0.05, 0.0, 0.1]).unwrap();
    }
    let off = e.offsets().unwrap().to_vec();
    let expected = [0.3, -0.3, 0.15, 0.0, 0.3];
    for (o, x) in off.iter().zip(expected) {
        assert!((o - x).abs() < 1e-12);
    }
}

#[test]
fn absolute_mode_replaces_offsets() {
    let mut cfg = EnvCfg::default();
    cfg.action_mode = ActionMode::Absolute;
    let mut e = env(cfg);
    e.reset().unwrap();
    e.step(&[0.1; 5]).unwrap();
    e.step(&[0.02; 5]).unwrap();
    assert_eq!(e.offsets().unwrap(), &[0.02; 5]);
}

#[test]
fn wrong_action_length_is_rejected() {
    let mut e = env(EnvCfg::default());
    e.reset().unwrap();
    assert!(matches!(
        e.step(&[0.0; 4]),
        Err(EnvError::InvalidAction { expected: 5, .. })
    ));
    assert!(matches!(
        e.step(&[f64::NAN; 5]),
        Err(EnvError::InvalidAction { .. })
    ));
}

#[test]
fn trace_covers_the_whole_episode() {
    let mut e = env(EnvCfg::default());
    e.set_record_trace(true);
    e.reset().unwrap();
    while !e.step(&[0.0; 5]).unwrap().done {}
    let tr = e.trace();
    assert_eq!(tr.len(), 1001);
    assert_eq!(tr[0].t, 0.0);
    assert_eq!(tr.last().unwrap().t, 10.0);
}

#[test]
fn config_file_case_path_is_read() {
    let mut cfg = EnvCfg::default();
    cfg.case_path = Some("does/not/exist.case".into());
    assert!(matches!(Env::from_config(cfg), Err(EnvError::Io { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn applied_actions_stay_in_the_box(raw in proptest::collection::vec(-5.0f64..5.0, 5)) {
        let mut e = env(EnvCfg::default());
        e.reset().unwrap();
        let s = e.step(&raw).unwrap();
        let off = e.offsets().unwrap();
        for (o, r) in off.iter().zip(&raw) {
            prop_assert!(*o >= -0.1 && *o <= 0.1);
            prop_assert_eq!(*o, r.clamp(-0.1, 0.1));
        }
        prop_assert_eq!(s.info.clipped, raw.iter().any(|r| r.abs() > 0.1));
    }
}
