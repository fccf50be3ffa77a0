//! Dense row-major matrices and an LU solver with partial pivoting.

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| *a * *b).sum())
            .collect()
    }
}

impl<T> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.cols + c]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.cols + c]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("matrix is singular at pivot column {column}")]
pub struct SingularMatrix {
    pub column: usize,
}

/// Solves `a * x = b` in place; `b` is overwritten with `x`.
pub fn solve_in_place<T: Scalar>(mut a: DenseMatrix<T>, b: &mut [T]) -> Result<(), SingularMatrix> {
    let n = a.rows;
    assert_eq!(a.cols, n, "square system required");
    assert_eq!(b.len(), n);

    for k in 0..n {
        let mut piv = k;
        let mut best = a[(k, k)].abs();
        for r in (k + 1)..n {
            let v = a[(r, k)].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if !(best > T::zero()) || !best.is_finite() {
            return Err(SingularMatrix { column: k });
        }
        if piv != k {
            for c in 0..n {
                a.data.swap(k * n + c, piv * n + c);
            }
            b.swap(k, piv);
        }
        let inv = T::one() / a[(k, k)];
        for r in (k + 1)..n {
            let factor = a[(r, k)] * inv;
            if factor == T::zero() {
                continue;
            }
            a[(r, k)] = T::zero();
            for c in (k + 1)..n {
                let akc = a[(k, c)];
                a[(r, c)] -= factor * akc;
            }
            let bk = b[k];
            b[r] -= factor * bk;
        }
    }

    for k in (0..n).rev() {
        let mut s = b[k];
        for c in (k + 1)..n {
            s -= a[(k, c)] * b[c];
        }
        b[k] = s / a[(k, k)];
    }
    Ok(())
}
