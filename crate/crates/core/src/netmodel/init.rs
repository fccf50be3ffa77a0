use num_complex::Complex;

use crate::dynamics::DynamicState;
use crate::scalar::Scalar;

use super::{CaseData, NetError, PowerFlowSolution};

/// Classical-model machine constants fixed at initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineInit<T> {
    /// Internal EMF magnitude behind the transient reactance.
    pub e_mag: Vec<T>,
    pub delta0: Vec<T>,
    pub pm0: Vec<T>,
    /// Governor load reference; equal to `pm0` at equilibrium.
    pub pref0: Vec<T>,
}

const INIT_POWER_TOL: f64 = 1e-8;

/// Places every machine at equilibrium on the power-flow operating point.
pub fn init_dynamics<T: Scalar>(
    case: &CaseData<T>,
    pf: &PowerFlowSolution<T>,
) -> Result<(MachineInit<T>, DynamicState<T>), NetError> {
    let n_gen = case.n_gen();
    let mut init = MachineInit {
        e_mag: Vec::with_capacity(n_gen),
        delta0: Vec::with_capacity(n_gen),
        pm0: Vec::with_capacity(n_gen),
        pref0: Vec::with_capacity(n_gen),
    };
    for (k, g) in case.generators.iter().enumerate() {
        let b = g.bus - 1;
        let bus = &case.buses[b];
        let s = Complex::new(pf.p_inj[b] + bus.p_load, pf.q_inj[b] + bus.q_load);
        let v = Complex::from_polar(pf.v_mag[b], pf.v_ang[b]);
        let current = (s / v).conj();
        let e = v + Complex::new(T::zero(), g.xdp) * current;
        let (e_mag, delta) = e.to_polar();

        let pe = e_mag * pf.v_mag[b] * (delta - pf.v_ang[b]).sin() / g.xdp;
        let gap = (pe - s.re).abs();
        if !(gap.to_f64_lossy() <= INIT_POWER_TOL) {
            return Err(NetError::Init(format!(
                "generator {}: machine power {} differs from power-flow injection {} by {}",
                k + 1,
                pe,
                s.re,
                gap
            )));
        }
        init.e_mag.push(e_mag);
        init.delta0.push(delta);
        init.pm0.push(s.re);
        init.pref0.push(s.re);
    }

    let state = DynamicState {
        t: T::zero(),
        delta: init.delta0.clone(),
        domega: vec![T::zero(); n_gen],
        pv: init.pm0.clone(),
        pm: init.pm0.clone(),
        v_mag: pf.v_mag.clone(),
        v_ang: pf.v_ang.clone(),
    };
    Ok((init, state))
}
