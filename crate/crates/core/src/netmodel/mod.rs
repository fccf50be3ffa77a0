//! Static network model: case files, admittance matrix, power flow and
//! equilibrium initialization of the machines.

mod admittance;
pub mod builtin;
mod case;
mod init;
mod powerflow;

pub use admittance::{
    build_admittance, network_injections, network_jacobian, Admittance, NetworkJacobian,
};
pub use case::{parse_case, Branch, Bus, BusKind, CaseData, Generator, Governor};
pub use init::{init_dynamics, MachineInit};
pub use powerflow::{solve_power_flow, PowerFlowOptions, PowerFlowSolution};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetError {
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid case: {0}")]
    Validation(String),
    #[error(
        "power flow did not converge after {iterations} iterations (max mismatch {mismatch:e} pu)"
    )]
    NonConvergence { iterations: usize, mismatch: f64 },
    #[error("dynamic initialization failed: {0}")]
    Init(String),
}
