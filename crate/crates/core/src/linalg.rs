//! Dense complex LU factorization with partial pivoting. The time
//! integrator's implicit sub-steps are direct solves at desk scale, so a
//! simple dense factorization is all that is needed.

use crate::scalar::Real;
use crate::{Error, Result};
use num_complex::Complex;

#[derive(Debug, Clone)]
pub struct ComplexLu<T: Real> {
    n: usize,
    lu: Vec<Complex<T>>,
    piv: Vec<usize>,
}

impl<T: Real> ComplexLu<T> {
    /// Factor a row-major `n × n` matrix.
    pub fn factor(mut a: Vec<Complex<T>>, n: usize) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::LinearSolve(format!(
                "matrix has {} entries, expected {}",
                a.len(),
                n * n
            )));
        }
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].norm_sqr();
            for i in k + 1..n {
                let m = a[i * n + k].norm_sqr();
                if m > best {
                    best = m;
                    p = i;
                }
            }
            if !(best > T::zero()) {
                return Err(Error::LinearSolve(format!("singular at column {k}")));
            }
            piv[k] = p;
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let m = a[i * n + k] / pivot;
                a[i * n + k] = m;
                for j in k + 1..n {
                    let akj = a[k * n + j];
                    a[i * n + j] = a[i * n + j] - m * akj;
                }
            }
        }
        Ok(Self { n, lu: a, piv })
    }

    pub fn solve(&self, b: &mut [Complex<T>]) -> Result<()> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::LinearSolve(format!(
                "rhs has length {}, expected {n}",
                b.len()
            )));
        }
        for k in 0..n {
            b.swap(k, self.piv[k]);
        }
        for i in 0..n {
            let mut acc = b[i];
            for j in 0..i {
                acc = acc - self.lu[i * n + j] * b[j];
            }
            b[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in i + 1..n {
                acc = acc - self.lu[i * n + j] * b[j];
            }
            b[i] = acc / self.lu[i * n + i];
        }
        Ok(())
    }
}
