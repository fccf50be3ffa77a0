use num_traits::ToPrimitive;

use crate::netmodel::{init_dynamics, solve_power_flow, CaseData, MachineInit, PowerFlowOptions};
use crate::scalar::Scalar;

use super::{
    apply_event, coi_frequency, machine_frequencies, reinit_algebraic, trapezoidal_step,
    ControlInput, DaeModel, DynError, DynamicState, Event, SimConfig,
};

/// One sampled point of a simulation trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow<T> {
    pub t: T,
    pub f_coi_hz: T,
    pub f_hz: Vec<T>,
    pub pm: Vec<T>,
}

/// A running simulation: current loads, machine constants, state, and the
/// events still to fire.
#[derive(Debug, Clone)]
pub struct Simulator<T> {
    model: DaeModel<T>,
    base_case: CaseData<T>,
    init: MachineInit<T>,
    state: DynamicState<T>,
    cfg: SimConfig<T>,
    pending: Vec<Event<T>>,
}

// Breakpoints closer than this fraction of a step are merged.
const STEP_COUNT_SLACK: f64 = 1e-9;

impl<T: Scalar> Simulator<T> {
    /// Solves the power flow and starts from the equilibrium at t = 0.
    pub fn new(case: &CaseData<T>, cfg: SimConfig<T>) -> Result<Self, DynError> {
        if !(cfg.h_nominal > T::zero()) {
            return Err(DynError::InvalidRequest(
                "h_nominal must be positive".into(),
            ));
        }
        let pf = solve_power_flow(
            case,
            PowerFlowOptions {
                tol: cfg.newton_tol,
                max_iter: cfg.newton_max_iter,
            },
        )?;
        let (init, state) = init_dynamics(case, &pf)?;
        Ok(Self {
            model: DaeModel::new(case, &init),
            base_case: case.clone(),
            init,
            state,
            cfg,
            pending: Vec::new(),
        })
    }

    /// Schedules events; they fire in time order.
    pub fn with_events(
        mut self,
        events: impl IntoIterator<Item = Event<T>>,
    ) -> Result<Self, DynError> {
        for ev in events {
            if self.base_case.bus_index(ev.bus).is_none() {
                return Err(DynError::UnknownBus(ev.bus));
            }
            if !(ev.time >= T::zero()) {
                return Err(DynError::InvalidRequest(format!(
                    "event time must be >= 0, got {}",
                    ev.time
                )));
            }
            self.pending.push(ev);
        }
        self.pending
            .sort_by(|a, b| a.time.partial_cmp(&b.time).expect("finite event times"));
        Ok(self)
    }

    pub fn state(&self) -> &DynamicState<T> {
        &self.state
    }

    pub fn case(&self) -> &CaseData<T> {
        self.model.case()
    }

    pub fn model(&self) -> &DaeModel<T> {
        &self.model
    }

    pub fn machine_init(&self) -> &MachineInit<T> {
        &self.init
    }

    pub fn config(&self) -> &SimConfig<T> {
        &self.cfg
    }

    pub fn sample(&self) -> TraceRow<T> {
        let case = self.model.case();
        TraceRow {
            t: self.state.t,
            f_coi_hz: coi_frequency(&self.state, case),
            f_hz: machine_frequencies(&self.state, case),
            pm: self.state.pm.clone(),
        }
    }

    fn fire_due_events(&mut self) -> Result<(), DynError> {
        let mut fired = false;
        while self.pending.first().is_some_and(|e| e.time <= self.state.t) {
            let ev = self.pending.remove(0);
            let updated = apply_event(self.model.case(), &ev)?;
            self.model.set_case_loads(&updated);
            fired = true;
        }
        if fired {
            self.state = reinit_algebraic(&self.state, &self.model, &self.cfg)?;
        }
        Ok(())
    }

    /// Number of equal steps of at most `h_nominal` covering `span`.
    pub fn steps_for(&self, span: T) -> usize {
        let ratio = (span / self.cfg.h_nominal).to_f64_lossy();
        ((ratio - STEP_COUNT_SLACK).ceil().max(1.0))
            .to_usize()
            .unwrap_or(1)
    }

    /// Integrates to `t_target`, landing exactly on every event instant and
    /// on the target. Returns one trace row per accepted step.
    pub fn run_until(
        &mut self,
        u: &ControlInput<T>,
        t_target: T,
    ) -> Result<Vec<TraceRow<T>>, DynError> {
        if !(t_target >= self.state.t) {
            return Err(DynError::InvalidRequest(format!(
                "target time {} precedes current time {}",
                t_target, self.state.t
            )));
        }
        if u.p_offset.len() != self.model.n_gen() {
            return Err(DynError::InvalidRequest(
                "control input length mismatch".into(),
            ));
        }
        let mut trace = Vec::new();
        loop {
            self.fire_due_events()?;
            if self.state.t >= t_target {
                break;
            }
            let stop = match self.pending.first() {
                Some(ev) if ev.time < t_target => ev.time,
                _ => t_target,
            };
            let t0 = self.state.t;
            let span = stop - t0;
            let n = self.steps_for(span);
            let h = span / T::from_usize_exact(n);
            for k in 1..=n {
                let t_next = if k == n {
                    stop
                } else {
                    t0 + h * T::from_usize_exact(k)
                };
                let mut next = trapezoidal_step(
                    &self.state,
                    u,
                    &self.model,
                    &self.cfg,
                    t_next - self.state.t,
                )?;
                next.t = t_next;
                self.state = next;
                trace.push(self.sample());
            }
        }
        Ok(trace)
    }
}
