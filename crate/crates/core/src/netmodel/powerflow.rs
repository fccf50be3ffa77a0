use crate::linalg::{solve_in_place, DenseMatrix};
use crate::scalar::{inf_norm, Scalar};

use super::admittance::{build_admittance, network_injections, network_jacobian, Admittance};
use super::{BusKind, CaseData, NetError};

#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowSolution<T> {
    pub v_mag: Vec<T>,
    pub v_ang: Vec<T>,
    /// Net injection into the network at each bus.
    pub p_inj: Vec<T>,
    pub q_inj: Vec<T>,
    /// Newton updates performed.
    pub iterations: usize,
    pub max_mismatch: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFlowOptions<T> {
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for PowerFlowOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-8),
            max_iter: 20,
        }
    }
}

/// Newton-Raphson power flow in polar coordinates from a flat start.
///
/// Unknowns are the angles of every non-slack bus followed by the magnitudes
/// of every pq bus; pv and slack magnitudes stay at their setpoints.
pub fn solve_power_flow<T: Scalar>(
    case: &CaseData<T>,
    opts: PowerFlowOptions<T>,
) -> Result<PowerFlowSolution<T>, NetError> {
    let y = build_admittance(case);
    solve_with_admittance(case, &y, opts)
}

pub(crate) fn solve_with_admittance<T: Scalar>(
    case: &CaseData<T>,
    y: &Admittance<T>,
    opts: PowerFlowOptions<T>,
) -> Result<PowerFlowSolution<T>, NetError> {
    let n = case.n_bus();
    let mut p_sched = vec![T::zero(); n];
    let mut q_sched = vec![T::zero(); n];
    for (i, b) in case.buses.iter().enumerate() {
        p_sched[i] = -b.p_load;
        q_sched[i] = -b.q_load;
    }
    for g in &case.generators {
        p_sched[g.bus - 1] += g.p_set;
    }

    let angle_idx: Vec<usize> = (0..n)
        .filter(|&i| case.buses[i].kind != BusKind::Slack)
        .collect();
    let mag_idx: Vec<usize> = (0..n)
        .filter(|&i| case.buses[i].kind == BusKind::Pq)
        .collect();
    let n_eq = angle_idx.len() + mag_idx.len();

    let mut vm: Vec<T> = case
        .buses
        .iter()
        .map(|b| {
            if b.kind == BusKind::Pq {
                T::one()
            } else {
                b.v_set
            }
        })
        .collect();
    let mut va = vec![T::zero(); n];

    let mismatch = |p: &[T], q: &[T]| -> Vec<T> {
        angle_idx
            .iter()
            .map(|&i| p_sched[i] - p[i])
            .chain(mag_idx.iter().map(|&i| q_sched[i] - q[i]))
            .collect()
    };

    let mut iterations = 0;
    loop {
        let (p, q) = network_injections(y, &vm, &va);
        let mut f = mismatch(&p, &q);
        let norm = inf_norm(&f);
        if norm <= opts.tol {
            return Ok(PowerFlowSolution {
                v_mag: vm,
                v_ang: va,
                p_inj: p,
                q_inj: q,
                iterations,
                max_mismatch: norm,
            });
        }
        if iterations >= opts.max_iter || !norm.is_finite() {
            return Err(NetError::NonConvergence {
                iterations,
                mismatch: norm.to_f64_lossy(),
            });
        }

        let jac = network_jacobian(y, &vm, &va, &p, &q);
        let mut a = DenseMatrix::zeros(n_eq, n_eq);
        let na = angle_idx.len();
        for (r, &i) in angle_idx.iter().enumerate() {
            for (c, &j) in angle_idx.iter().enumerate() {
                a[(r, c)] = jac.dp_dva[(i, j)];
            }
            for (c, &j) in mag_idx.iter().enumerate() {
                a[(r, na + c)] = jac.dp_dvm[(i, j)];
            }
        }
        for (r, &i) in mag_idx.iter().enumerate() {
            for (c, &j) in angle_idx.iter().enumerate() {
                a[(na + r, c)] = jac.dq_dva[(i, j)];
            }
            for (c, &j) in mag_idx.iter().enumerate() {
                a[(na + r, na + c)] = jac.dq_dvm[(i, j)];
            }
        }
        if solve_in_place(a, &mut f).is_err() {
            return Err(NetError::NonConvergence {
                iterations,
                mismatch: norm.to_f64_lossy(),
            });
        }
        for (k, &i) in angle_idx.iter().enumerate() {
            va[i] += f[k];
        }
        for (k, &i) in mag_idx.iter().enumerate() {
            vm[i] += f[na + k];
        }
        iterations += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::parse_case;

    #[test]
    fn slack_only_zero_load_is_flat() {
        let case: CaseData<f64> = parse_case(
            "[BUS]\n1 slack 0 0 1 0\n2 pq 0 0 1 0\n[BRANCH]\n1 2 0.01 0.1 0 1\n[GEN]\n1 0 1 5 2 0.3\n[GOV]\n1 0.05 0.2 0.5 1\n",
        )
        .unwrap();
        let pf = solve_power_flow(&case, PowerFlowOptions::default()).unwrap();
        assert!(pf.iterations <= 1);
        assert!(pf.v_mag.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(pf.v_ang.iter().all(|a| a.abs() < 1e-12));
    }

    #[test]
    fn infeasible_load_fails() {
        let mut case: CaseData<f64> = parse_case(include_str!("../../cases/twobus.case")).unwrap();
        case.buses[1].p_load = 100.0;
        let err = solve_power_flow(&case, PowerFlowOptions::default()).unwrap_err();
        assert!(matches!(err, NetError::NonConvergence { .. }), "{err}");
    }

    #[test]
    fn works_in_single_precision() {
        let case: CaseData<f32> = parse_case(include_str!("../../cases/ieee14.case")).unwrap();
        let pf = solve_power_flow(
            &case,
            PowerFlowOptions {
                tol: 1e-4,
                max_iter: 20,
            },
        )
        .unwrap();
        assert!(pf.max_mismatch <= 1e-4);
    }
}
