use std::fmt;

use nalgebra::{DMatrix, DVector};

/// A twice continuously differentiable piece with closed-form derivatives.
pub trait SmoothPiece: Send + Sync + fmt::Debug {
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64>;
}

/// `q(x) = 1/2 x^T Q x + c^T x + d` with symmetric `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    q: DMatrix<f64>,
    c: DVector<f64>,
    d: f64,
}

impl Quadratic {
    pub fn new(q: DMatrix<f64>, c: DVector<f64>, d: f64) -> Self {
        assert_eq!(q.nrows(), q.ncols(), "Q must be square");
        assert_eq!(q.nrows(), c.len(), "Q and c disagree on dimension");
        let q = (&q + q.transpose()) * 0.5;
        Self { q, c, d }
    }

    /// `sum_i h_i x_i^2 / 2 + c^T x + d`.
    pub fn diagonal(hess_diag: &[f64], c: &[f64], d: f64) -> Self {
        Self::new(
            DMatrix::from_diagonal(&DVector::from_column_slice(hess_diag)),
            DVector::from_column_slice(c),
            d,
        )
    }

    pub fn zero(n: usize) -> Self {
        Self::new(DMatrix::zeros(n, n), DVector::zeros(n), 0.0)
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }
}

impl SmoothPiece for Quadratic {
    fn value(&self, x: &DVector<f64>) -> f64 {
        let n = self.c.len();
        let mut quad = 0.0;
        for j in 0..n {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for i in 0..n {
                let qij = self.q[(i, j)];
                if qij != 0.0 {
                    quad += qij * x[i] * xj;
                }
            }
        }
        let mut lin = 0.0;
        for i in 0..n {
            lin += self.c[i] * x[i];
        }
        0.5 * quad + lin + self.d
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.q * x + &self.c
    }

    fn hessian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.q.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_derivatives_match_differences() {
        let q = Quadratic::new(
            DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, -1.0]),
            DVector::from_vec(vec![0.3, -0.7]),
            1.5,
        );
        let x = DVector::from_vec(vec![0.4, -1.1]);
        let g = q.gradient(&x);
        let h = 1e-6;
        for i in 0..2 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (q.value(&xp) - q.value(&xm)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-8);
        }
        assert_eq!(q.hessian(&x)[(0, 1)], 0.5);
    }
}
