//! Multi-machine frequency dynamics: classical machines with droop governors
//! on a constant-power-load network, integrated as a differential-algebraic
//! system with the implicit trapezoidal rule.

mod integrator;
mod model;
mod sim;

pub use integrator::{reinit_algebraic, trapezoidal_step};
pub use model::{dynamic_residual, DaeModel};
pub use sim::{Simulator, TraceRow};

use crate::netmodel::{CaseData, NetError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicState<T> {
    pub t: T,
    pub delta: Vec<T>,
    /// Rotor speed deviation in pu.
    pub domega: Vec<T>,
    /// Governor valve position.
    pub pv: Vec<T>,
    /// Turbine mechanical power.
    pub pm: Vec<T>,
    pub v_mag: Vec<T>,
    pub v_ang: Vec<T>,
}

impl<T: Scalar> DynamicState<T> {
    pub fn n_gen(&self) -> usize {
        self.delta.len()
    }

    pub fn n_bus(&self) -> usize {
        self.v_mag.len()
    }

    /// Differential states in `[delta, domega, pv, pm]` order.
    pub fn differential(&self) -> Vec<T> {
        let mut x = Vec::with_capacity(4 * self.n_gen());
        x.extend_from_slice(&self.delta);
        x.extend_from_slice(&self.domega);
        x.extend_from_slice(&self.pv);
        x.extend_from_slice(&self.pm);
        x
    }

    /// Algebraic states in `[v_ang, v_mag]` order.
    pub fn algebraic(&self) -> Vec<T> {
        let mut y = Vec::with_capacity(2 * self.n_bus());
        y.extend_from_slice(&self.v_ang);
        y.extend_from_slice(&self.v_mag);
        y
    }

    pub fn set_differential(&mut self, x: &[T]) {
        let n = self.n_gen();
        self.delta.copy_from_slice(&x[..n]);
        self.domega.copy_from_slice(&x[n..2 * n]);
        self.pv.copy_from_slice(&x[2 * n..3 * n]);
        self.pm.copy_from_slice(&x[3 * n..4 * n]);
    }

    pub fn set_algebraic(&mut self, y: &[T]) {
        let n = self.n_bus();
        self.v_ang.copy_from_slice(&y[..n]);
        self.v_mag.copy_from_slice(&y[n..2 * n]);
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && [
                &self.delta,
                &self.domega,
                &self.pv,
                &self.pm,
                &self.v_mag,
                &self.v_ang,
            ]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig<T> {
    pub h_nominal: T,
    pub newton_tol: T,
    pub newton_max_iter: usize,
}

impl<T: Scalar> Default for SimConfig<T> {
    fn default() -> Self {
        Self {
            h_nominal: T::lit(0.01),
            newton_tol: T::lit(1e-8),
            newton_max_iter: 20,
        }
    }
}

/// Step change of constant-power load at a bus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event<T> {
    pub time: T,
    pub bus: usize,
    pub dp: T,
    pub dq: T,
}

impl<T: Scalar> Event<T> {
    pub fn load_step(time: T, bus: usize, dp: T) -> Self {
        Self {
            time,
            bus,
            dp,
            dq: T::zero(),
        }
    }
}

/// Cumulative secondary offsets on the governor references, in generator order.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlInput<T> {
    pub p_offset: Vec<T>,
}

impl<T: Scalar> ControlInput<T> {
    pub fn zeros(n_gen: usize) -> Self {
        Self {
            p_offset: vec![T::zero(); n_gen],
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynError {
    #[error("Newton iteration diverged after {iterations} iterations (residual {residual:e})")]
    NewtonDivergence { iterations: usize, residual: f64 },
    #[error("event references unknown bus {0}")]
    UnknownBus(usize),
    #[error("invalid simulation request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Returns a copy of `case` with the event's load step applied.
pub fn apply_event<T: Scalar>(
    case: &CaseData<T>,
    event: &Event<T>,
) -> Result<CaseData<T>, DynError> {
    let idx = case
        .bus_index(event.bus)
        .ok_or(DynError::UnknownBus(event.bus))?;
    let mut out = case.clone();
    out.buses[idx].p_load += event.dp;
    out.buses[idx].q_load += event.dq;
    Ok(out)
}

/// Center-of-inertia frequency in Hz.
pub fn coi_frequency<T: Scalar>(state: &DynamicState<T>, case: &CaseData<T>) -> T {
    let (num, den) = case
        .generators
        .iter()
        .zip(&state.domega)
        .fold((T::zero(), T::zero()), |(n, d), (g, w)| {
            (n + g.h * *w, d + g.h)
        });
    case.f_nominal * (T::one() + num / den)
}

/// Per-machine electrical frequency in Hz.
pub fn machine_frequencies<T: Scalar>(state: &DynamicState<T>, case: &CaseData<T>) -> Vec<T> {
    state
        .domega
        .iter()
        .map(|w| case.f_nominal * (T::one() + *w))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::parse_case;

    fn two_machine() -> CaseData<f64> {
        parse_case(
            "[BUS]\n1 slack 0 0 1 0\n2 pv 0 0 1 0\n[BRANCH]\n1 2 0 0.1 0 1\n\
             [GEN]\n1 0 1 1 2 0.3\n2 0 1 3 2 0.3\n[GOV]\n1 0.05 0.2 0.5 1\n2 0.05 0.2 0.5 1\n",
        )
        .unwrap()
    }

    fn state_with(domega: Vec<f64>) -> DynamicState<f64> {
        let n = domega.len();
        DynamicState {
            t: 0.0,
            delta: vec![0.0; n],
            domega,
            pv: vec![0.0; n],
            pm: vec![0.0; n],
            v_mag: vec![1.0; 2],
            v_ang: vec![0.0; 2],
        }
    }

    #[test]
    fn coi_nominal_at_zero_deviation() {
        let case = two_machine();
        assert_eq!(coi_frequency(&state_with(vec![0.0, 0.0]), &case), 60.0);
    }

    #[test]
    fn coi_is_inertia_weighted() {
        let case = two_machine();
        let f = coi_frequency(&state_with(vec![0.004, 0.0]), &case);
        assert!((f - 60.06).abs() < 1e-12, "{f}");
    }

    #[test]
    fn apply_event_is_value_semantics() {
        let case = two_machine();
        let ev = Event::load_step(1.0, 2, 0.6);
        let out = apply_event(&case, &ev).unwrap();
        assert_eq!(out.buses[1].p_load, 0.6);
        assert_eq!(case.buses[1].p_load, 0.0);
        assert_eq!(out.buses[0], case.buses[0]);
        assert_eq!(
            apply_event(&case, &Event::load_step(1.0, 9, 0.1)),
            Err(DynError::UnknownBus(9))
        );
    }
}
