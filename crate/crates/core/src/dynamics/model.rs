use crate::linalg::DenseMatrix;
use crate::netmodel::{
    build_admittance, network_injections, network_jacobian, Admittance, CaseData, MachineInit,
};
use crate::scalar::Scalar;

use super::{ControlInput, DynamicState};

#[derive(Debug, Clone, PartialEq)]
struct MachineParams<T> {
    bus: usize,
    h: T,
    d: T,
    xdp: T,
    e: T,
    pref0: T,
    r_droop: T,
    tg: T,
    tt: T,
}

/// The assembled DAE: machine and governor parameters bound to a network.
///
/// Per machine i:
///
/// ```text
/// d(delta)/dt  = ws * dw
/// 2H d(dw)/dt  = pm - pe - D dw
/// Tg d(pv)/dt  = pref0 + offset - dw / R - pv
/// Tt d(pm)/dt  = pv - pm
/// ```
///
/// with constant-power load balance at every bus as the algebraic part.
#[derive(Debug, Clone)]
pub struct DaeModel<T> {
    case: CaseData<T>,
    admittance: Admittance<T>,
    machines: Vec<MachineParams<T>>,
    omega_s: T,
}

struct Electrical<T> {
    /// Machine active power.
    pe: Vec<T>,
    sin: Vec<T>,
    cos: Vec<T>,
    p_net: Vec<T>,
    q_net: Vec<T>,
}

impl<T: Scalar> DaeModel<T> {
    pub fn new(case: &CaseData<T>, init: &MachineInit<T>) -> Self {
        let machines = case
            .generators
            .iter()
            .enumerate()
            .map(|(k, g)| {
                let gov = case.governor_of(k);
                MachineParams {
                    bus: g.bus - 1,
                    h: g.h,
                    d: g.d,
                    xdp: g.xdp,
                    e: init.e_mag[k],
                    pref0: init.pref0[k],
                    r_droop: gov.r_droop,
                    tg: gov.tg,
                    tt: gov.tt,
                }
            })
            .collect();
        Self {
            admittance: build_admittance(case),
            case: case.clone(),
            machines,
            omega_s: T::lit(2.0 * std::f64::consts::PI) * case.f_nominal,
        }
    }

    pub fn case(&self) -> &CaseData<T> {
        &self.case
    }

    /// Replaces bus loads; the network itself must not change.
    pub fn set_case_loads(&mut self, case: &CaseData<T>) {
        for (dst, src) in self.case.buses.iter_mut().zip(&case.buses) {
            dst.p_load = src.p_load;
            dst.q_load = src.q_load;
        }
    }

    pub fn n_gen(&self) -> usize {
        self.machines.len()
    }

    pub fn n_bus(&self) -> usize {
        self.case.n_bus()
    }

    pub fn n_differential(&self) -> usize {
        4 * self.n_gen()
    }

    pub fn n_algebraic(&self) -> usize {
        2 * self.n_bus()
    }

    fn electrical(&self, st: &DynamicState<T>) -> Electrical<T> {
        let ng = self.n_gen();
        let mut el = Electrical {
            pe: Vec::with_capacity(ng),
            sin: Vec::with_capacity(ng),
            cos: Vec::with_capacity(ng),
            p_net: Vec::new(),
            q_net: Vec::new(),
        };
        for (k, m) in self.machines.iter().enumerate() {
            let (s, c) = (st.delta[k] - st.v_ang[m.bus]).sin_cos();
            el.pe.push(m.e * st.v_mag[m.bus] * s / m.xdp);
            el.sin.push(s);
            el.cos.push(c);
        }
        let (p, q) = network_injections(&self.admittance, &st.v_mag, &st.v_ang);
        el.p_net = p;
        el.q_net = q;
        el
    }

    fn derivatives_with(
        &self,
        st: &DynamicState<T>,
        u: &ControlInput<T>,
        el: &Electrical<T>,
    ) -> Vec<T> {
        let ng = self.n_gen();
        let two = T::lit(2.0);
        let mut f = vec![T::zero(); 4 * ng];
        for (k, m) in self.machines.iter().enumerate() {
            let dw = st.domega[k];
            f[k] = self.omega_s * dw;
            f[ng + k] = (st.pm[k] - el.pe[k] - m.d * dw) / (two * m.h);
            f[2 * ng + k] = (m.pref0 + u.p_offset[k] - dw / m.r_droop - st.pv[k]) / m.tg;
            f[3 * ng + k] = (st.pv[k] - st.pm[k]) / m.tt;
        }
        f
    }

    fn algebraic_with(&self, st: &DynamicState<T>, el: &Electrical<T>) -> Vec<T> {
        let nb = self.n_bus();
        let mut g = vec![T::zero(); 2 * nb];
        for (i, bus) in self.case.buses.iter().enumerate() {
            g[i] = -bus.p_load - el.p_net[i];
            g[nb + i] = -bus.q_load - el.q_net[i];
        }
        for (k, m) in self.machines.iter().enumerate() {
            let v = st.v_mag[m.bus];
            g[m.bus] += el.pe[k];
            g[nb + m.bus] += (m.e * v * el.cos[k] - v * v) / m.xdp;
        }
        g
    }

    /// Time derivatives of the differential states.
    pub fn derivatives(&self, st: &DynamicState<T>, u: &ControlInput<T>) -> Vec<T> {
        let el = self.electrical(st);
        self.derivatives_with(st, u, &el)
    }

    /// Bus power mismatch: active rows then reactive rows.
    pub fn algebraic(&self, st: &DynamicState<T>) -> Vec<T> {
        let el = self.electrical(st);
        self.algebraic_with(st, &el)
    }

    pub fn residual(&self, st: &DynamicState<T>, u: &ControlInput<T>) -> (Vec<T>, Vec<T>) {
        let el = self.electrical(st);
        (
            self.derivatives_with(st, u, &el),
            self.algebraic_with(st, &el),
        )
    }

    /// Jacobian blocks `(df/dx, df/dy, dg/dx, dg/dy)`.
    pub fn jacobian(
        &self,
        st: &DynamicState<T>,
    ) -> (
        DenseMatrix<T>,
        DenseMatrix<T>,
        DenseMatrix<T>,
        DenseMatrix<T>,
    ) {
        let ng = self.n_gen();
        let nb = self.n_bus();
        let el = self.electrical(st);
        let two = T::lit(2.0);
        let mut fx = DenseMatrix::zeros(4 * ng, 4 * ng);
        let mut fy = DenseMatrix::zeros(4 * ng, 2 * nb);
        let mut gx = DenseMatrix::zeros(2 * nb, 4 * ng);
        let mut gy = DenseMatrix::zeros(2 * nb, 2 * nb);

        let net = network_jacobian(&self.admittance, &st.v_mag, &st.v_ang, &el.p_net, &el.q_net);
        for i in 0..nb {
            for j in 0..nb {
                gy[(i, j)] = -net.dp_dva[(i, j)];
                gy[(i, nb + j)] = -net.dp_dvm[(i, j)];
                gy[(nb + i, j)] = -net.dq_dva[(i, j)];
                gy[(nb + i, nb + j)] = -net.dq_dvm[(i, j)];
            }
        }

        for (k, m) in self.machines.iter().enumerate() {
            let b = m.bus;
            let v = st.v_mag[b];
            let (s, c) = (el.sin[k], el.cos[k]);
            let dpe_ddelta = m.e * v * c / m.xdp;
            let dpe_dv = m.e * s / m.xdp;
            let dq_ddelta = -m.e * v * s / m.xdp;
            let dq_dv = (m.e * c - two * v) / m.xdp;
            let two_h = two * m.h;

            fx[(k, ng + k)] = self.omega_s;
            fx[(ng + k, k)] = -dpe_ddelta / two_h;
            fx[(ng + k, ng + k)] = -m.d / two_h;
            fx[(ng + k, 3 * ng + k)] = T::one() / two_h;
            fx[(2 * ng + k, ng + k)] = -T::one() / (m.r_droop * m.tg);
            fx[(2 * ng + k, 2 * ng + k)] = -T::one() / m.tg;
            fx[(3 * ng + k, 2 * ng + k)] = T::one() / m.tt;
            fx[(3 * ng + k, 3 * ng + k)] = -T::one() / m.tt;

            // pe depends on the bus angle with the opposite sign of delta
            fy[(ng + k, b)] = dpe_ddelta / two_h;
            fy[(ng + k, nb + b)] = -dpe_dv / two_h;

            gx[(b, k)] += dpe_ddelta;
            gx[(nb + b, k)] += dq_ddelta;

            gy[(b, b)] += -dpe_ddelta;
            gy[(b, nb + b)] += dpe_dv;
            gy[(nb + b, b)] += -dq_ddelta;
            gy[(nb + b, nb + b)] += dq_dv;
        }
        (fx, fy, gx, gy)
    }
}

/// Concatenated differential derivatives and algebraic mismatches.
///
/// Length is `4 * n_gen + 2 * n_bus`; zero at an equilibrium.
pub fn dynamic_residual<T: Scalar>(
    state: &DynamicState<T>,
    u: &ControlInput<T>,
    case: &CaseData<T>,
    init: &MachineInit<T>,
) -> Vec<T> {
    let model = DaeModel::new(case, init);
    let (mut f, g) = model.residual(state, u);
    f.extend(g);
    f
}
