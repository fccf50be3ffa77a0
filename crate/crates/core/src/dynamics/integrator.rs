use crate::linalg::{solve_in_place, DenseMatrix};
use crate::scalar::{inf_norm, Scalar};

use super::{ControlInput, DaeModel, DynError, DynamicState, SimConfig};

/// Advances the DAE by `h` with the implicit trapezoidal rule.
///
/// Differential states satisfy `x1 = x0 + h/2 (f0 + f1)`; the network
/// equations hold at the new time. Newton starts from `state`.
pub fn trapezoidal_step<T: Scalar>(
    state: &DynamicState<T>,
    u: &ControlInput<T>,
    model: &DaeModel<T>,
    cfg: &SimConfig<T>,
    h: T,
) -> Result<DynamicState<T>, DynError> {
    if !(h > T::zero()) {
        return Err(DynError::InvalidRequest(format!(
            "step size must be positive, got {h}"
        )));
    }
    let nx = model.n_differential();
    let ny = model.n_algebraic();
    let half_h = h / T::lit(2.0);
    let x0 = state.differential();
    let f0 = model.derivatives(state, u);

    let mut next = state.clone();
    next.t = state.t + h;
    let mut iterations = 0;
    loop {
        let (f1, g1) = model.residual(&next, u);
        let x1 = next.differential();
        let mut rhs: Vec<T> = (0..nx)
            .map(|i| x1[i] - x0[i] - half_h * (f0[i] + f1[i]))
            .chain(g1)
            .collect();
        let norm = inf_norm(&rhs);
        if norm <= cfg.newton_tol {
            return Ok(next);
        }
        if iterations >= cfg.newton_max_iter || !norm.is_finite() {
            return Err(DynError::NewtonDivergence {
                iterations,
                residual: norm.to_f64_lossy(),
            });
        }

        let (fx, fy, gx, gy) = model.jacobian(&next);
        let mut jac = DenseMatrix::zeros(nx + ny, nx + ny);
        for i in 0..nx {
            for j in 0..nx {
                jac[(i, j)] = -half_h * fx[(i, j)];
            }
            jac[(i, i)] += T::one();
            for j in 0..ny {
                jac[(i, nx + j)] = -half_h * fy[(i, j)];
            }
        }
        for i in 0..ny {
            for j in 0..nx {
                jac[(nx + i, j)] = gx[(i, j)];
            }
            for j in 0..ny {
                jac[(nx + i, nx + j)] = gy[(i, j)];
            }
        }
        if solve_in_place(jac, &mut rhs).is_err() {
            return Err(DynError::NewtonDivergence {
                iterations,
                residual: norm.to_f64_lossy(),
            });
        }
        let mut x = x1;
        for (xi, d) in x.iter_mut().zip(&rhs[..nx]) {
            *xi -= *d;
        }
        let mut y = next.algebraic();
        for (yi, d) in y.iter_mut().zip(&rhs[nx..]) {
            *yi -= *d;
        }
        next.set_differential(&x);
        next.set_algebraic(&y);
        iterations += 1;
    }
}

/// Re-solves the network equations with differential states frozen.
///
/// Used after a discontinuity such as a load step.
pub fn reinit_algebraic<T: Scalar>(
    state: &DynamicState<T>,
    model: &DaeModel<T>,
    cfg: &SimConfig<T>,
) -> Result<DynamicState<T>, DynError> {
    let mut out = state.clone();
    let mut iterations = 0;
    loop {
        let mut g = model.algebraic(&out);
        let norm = inf_norm(&g);
        if norm <= cfg.newton_tol {
            return Ok(out);
        }
        if iterations >= cfg.newton_max_iter || !norm.is_finite() {
            return Err(DynError::NewtonDivergence {
                iterations,
                residual: norm.to_f64_lossy(),
            });
        }
        let (_, _, _, gy) = model.jacobian(&out);
        if solve_in_place(gy, &mut g).is_err() {
            return Err(DynError::NewtonDivergence {
                iterations,
                residual: norm.to_f64_lossy(),
            });
        }
        let mut y = out.algebraic();
        for (yi, d) in y.iter_mut().zip(&g) {
            *yi -= *d;
        }
        out.set_algebraic(&y);
        iterations += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::apply_event;
    use crate::dynamics::Event;
    use crate::netmodel::{
        init_dynamics, parse_case, solve_power_flow, CaseData, PowerFlowOptions,
    };

    fn setup() -> (CaseData<f64>, DaeModel<f64>, DynamicState<f64>) {
        let case: CaseData<f64> = parse_case(include_str!("../../cases/ieee14.case")).unwrap();
        let pf = solve_power_flow(&case, PowerFlowOptions::default()).unwrap();
        let (init, st) = init_dynamics(&case, &pf).unwrap();
        let model = DaeModel::new(&case, &init);
        (case, model, st)
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let (_, model, st) = setup();
        let cfg = SimConfig::default();
        for h in [1e-4, 0.01, 0.5] {
            let next = trapezoidal_step(&st, &ControlInput::zeros(5), &model, &cfg, h).unwrap();
            let dx = inf_norm(
                &next
                    .differential()
                    .iter()
                    .zip(st.differential())
                    .map(|(a, b)| a - b)
                    .collect::<Vec<_>>(),
            );
            assert!(dx <= 1e-8, "h={h}: {dx:e}");
        }
    }

    #[test]
    fn tiny_step_after_disturbance_is_continuous() {
        let (case, mut model, st) = setup();
        let cfg = SimConfig::default();
        let disturbed = apply_event(&case, &Event::load_step(0.0, 4, 0.6)).unwrap();
        model.set_case_loads(&disturbed);
        let st = reinit_algebraic(&st, &model, &cfg).unwrap();
        let next = trapezoidal_step(&st, &ControlInput::zeros(5), &model, &cfg, 1e-6).unwrap();
        let mut diff: Vec<f64> = next
            .differential()
            .iter()
            .zip(st.differential())
            .map(|(a, b)| a - b)
            .collect();
        diff.extend(
            next.algebraic()
                .iter()
                .zip(st.algebraic())
                .map(|(a, b)| a - b),
        );
        let norm = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
        assert!(norm < 1e-4, "{norm:e}");
    }

    #[test]
    fn rejects_nonpositive_step() {
        let (_, model, st) = setup();
        let r = trapezoidal_step(
            &st,
            &ControlInput::zeros(5),
            &model,
            &SimConfig::default(),
            0.0,
        );
        assert!(matches!(r, Err(DynError::InvalidRequest(_))));
    }
}
