use num_complex::Complex;

use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

use super::CaseData;

/// Dense complex bus-admittance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Admittance<T> {
    n: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> Admittance<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex::new(T::zero(), T::zero()); n * n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.n + j]
    }

    #[inline]
    fn add(&mut self, i: usize, j: usize, v: Complex<T>) {
        self.data[i * self.n + j] += v;
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

/// Assembles Y from branch pi-models (tap on the from side) and bus shunts.
pub fn build_admittance<T: Scalar>(case: &CaseData<T>) -> Admittance<T> {
    let n = case.n_bus();
    let mut y = Admittance::zeros(n);
    let two = T::lit(2.0);
    for br in &case.branches {
        let f = br.from_bus - 1;
        let t = br.to_bus - 1;
        let series = Complex::new(T::one(), T::zero()) / Complex::new(br.r, br.x);
        let half_charge = Complex::new(T::zero(), br.b_charging / two);
        let tap = br.tap;
        y.add(f, f, (series + half_charge) / (tap * tap));
        y.add(t, t, series + half_charge);
        y.add(f, t, -series / tap);
        y.add(t, f, -series / tap);
    }
    for (i, bus) in case.buses.iter().enumerate() {
        y.add(i, i, Complex::new(T::zero(), bus.shunt_b));
    }
    y
}

/// Active and reactive power leaving each bus into the network.
pub fn network_injections<T: Scalar>(y: &Admittance<T>, vm: &[T], va: &[T]) -> (Vec<T>, Vec<T>) {
    let n = y.size();
    let mut p = vec![T::zero(); n];
    let mut q = vec![T::zero(); n];
    for i in 0..n {
        let mut pi = T::zero();
        let mut qi = T::zero();
        for j in 0..n {
            let yij = y.get(i, j);
            if yij.re == T::zero() && yij.im == T::zero() {
                continue;
            }
            let (s, c) = (va[i] - va[j]).sin_cos();
            pi += vm[j] * (yij.re * c + yij.im * s);
            qi += vm[j] * (yij.re * s - yij.im * c);
        }
        p[i] = vm[i] * pi;
        q[i] = vm[i] * qi;
    }
    (p, q)
}

/// Partial derivatives of [`network_injections`] with respect to bus angles and magnitudes.
pub struct NetworkJacobian<T> {
    pub dp_dva: DenseMatrix<T>,
    pub dp_dvm: DenseMatrix<T>,
    pub dq_dva: DenseMatrix<T>,
    pub dq_dvm: DenseMatrix<T>,
}

pub fn network_jacobian<T: Scalar>(
    y: &Admittance<T>,
    vm: &[T],
    va: &[T],
    p: &[T],
    q: &[T],
) -> NetworkJacobian<T> {
    let n = y.size();
    let mut jac = NetworkJacobian {
        dp_dva: DenseMatrix::zeros(n, n),
        dp_dvm: DenseMatrix::zeros(n, n),
        dq_dva: DenseMatrix::zeros(n, n),
        dq_dvm: DenseMatrix::zeros(n, n),
    };
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let yij = y.get(i, j);
            if yij.re == T::zero() && yij.im == T::zero() {
                continue;
            }
            let (s, c) = (va[i] - va[j]).sin_cos();
            let a = yij.re * s - yij.im * c;
            let b = yij.re * c + yij.im * s;
            jac.dp_dva[(i, j)] = vm[i] * vm[j] * a;
            jac.dp_dvm[(i, j)] = vm[i] * b;
            jac.dq_dva[(i, j)] = -vm[i] * vm[j] * b;
            jac.dq_dvm[(i, j)] = vm[i] * a;
        }
        let yii = y.get(i, i);
        let v2 = vm[i] * vm[i];
        jac.dp_dva[(i, i)] = -q[i] - yii.im * v2;
        jac.dp_dvm[(i, i)] = p[i] / vm[i] + yii.re * vm[i];
        jac.dq_dva[(i, i)] = p[i] - yii.re * v2;
        jac.dq_dvm[(i, i)] = q[i] / vm[i] - yii.im * vm[i];
    }
    jac
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::parse_case;

    fn one_branch(b: f64) -> CaseData<f64> {
        parse_case(&format!(
            "[BUS]\n1 slack 0 0 1 0\n2 pq 0 0 1 0\n[BRANCH]\n1 2 0 0.1 {b} 1\n[GEN]\n1 0 1 5 2 0.3\n[GOV]\n1 0.05 0.2 0.5 1\n"
        ))
        .unwrap()
    }

    #[test]
    fn single_reactive_branch() {
        let y = build_admittance(&one_branch(0.0));
        let close = |a: Complex<f64>, re: f64, im: f64| {
            (a.re - re).abs() < 1e-12 && (a.im - im).abs() < 1e-12
        };
        assert!(close(y.get(0, 0), 0.0, -10.0));
        assert!(close(y.get(1, 1), 0.0, -10.0));
        assert!(close(y.get(0, 1), 0.0, 10.0));
        assert!(close(y.get(1, 0), 0.0, 10.0));
        assert!(y.is_symmetric());
    }

    #[test]
    fn charging_adds_half_to_each_end() {
        let y0 = build_admittance(&one_branch(0.0));
        let y1 = build_admittance(&one_branch(0.2));
        for i in 0..2 {
            assert!((y1.get(i, i).im - y0.get(i, i).im - 0.1).abs() < 1e-12);
        }
        assert_eq!(y1.get(0, 1), y0.get(0, 1));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let case: CaseData<f64> = parse_case(include_str!("../../cases/ieee14.case")).unwrap();
        let y = build_admittance(&case);
        let n = case.n_bus();
        let vm: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * (i as f64).sin()).collect();
        let va: Vec<f64> = (0..n).map(|i| -0.05 * i as f64).collect();
        let (p, q) = network_injections(&y, &vm, &va);
        let jac = network_jacobian(&y, &vm, &va, &p, &q);
        let eps = 1e-7;
        for j in 0..n {
            let mut va2 = va.clone();
            va2[j] += eps;
            let (pp, qp) = network_injections(&y, &vm, &va2);
            va2[j] -= 2.0 * eps;
            let (pm, qm) = network_injections(&y, &vm, &va2);
            let mut vm2 = vm.clone();
            vm2[j] += eps;
            let (pvp, qvp) = network_injections(&y, &vm2, &va);
            vm2[j] -= 2.0 * eps;
            let (pvm, qvm) = network_injections(&y, &vm2, &va);
            for i in 0..n {
                let fd = |a: f64, b: f64| (a - b) / (2.0 * eps);
                assert!((jac.dp_dva[(i, j)] - fd(pp[i], pm[i])).abs() < 1e-6);
                assert!((jac.dq_dva[(i, j)] - fd(qp[i], qm[i])).abs() < 1e-6);
                assert!((jac.dp_dvm[(i, j)] - fd(pvp[i], pvm[i])).abs() < 1e-6);
                assert!((jac.dq_dvm[(i, j)] - fd(qvp[i], qvm[i])).abs() < 1e-6);
            }
        }
    }
}
