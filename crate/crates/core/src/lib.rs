//! Load-frequency control environment for reinforcement learning.
//!
//! A multi-machine power system simulator ([`netmodel`], [`dynamics`]) is
//! wrapped in a reset/step/seed episode protocol ([`env`]) and trained
//! against with a from-scratch DDPG learner ([`agent`]). [`expcli`] holds the
//! experiment harness behind the `lfc-gym` binary.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the experiments use.

// `!(x > 0.0)` style checks also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod dynamics;
pub mod env;
pub mod expcli;
pub mod linalg;
pub mod netmodel;
pub mod scalar;
pub mod sections;

pub use scalar::Scalar;

pub type Case = netmodel::CaseData<f64>;
pub type PowerFlow = netmodel::PowerFlowSolution<f64>;
pub type State = dynamics::DynamicState<f64>;
pub type Sim = dynamics::Simulator<f64>;
pub type Env = env::LfcEnv<f64>;
pub type EnvCfg = env::EnvConfig<f64>;
pub type Agent = agent::DdpgAgent<f64>;
pub type AgentCfg = agent::DdpgConfig<f64>;
