//! Solver for A X + X Aᵀ = R via the complex Schur form of A.
//!
//! With A = Q T Q†, the substitution X = Q Y Qᵀ gives T Y + Y Tᵀ = Q† R Q̄,
//! solved column by column from the right with triangular back-substitution.
//! No eigenvectors are needed, so degenerate collective modes are harmless.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SchurSylvester {
    q: DMatrix<Complex64>,
    t: DMatrix<Complex64>,
}

impl SchurSylvester {
    pub fn new(a: &DMatrix<Complex64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch { expected: a.nrows(), found: a.ncols() });
        }
        let (q, t) = Schur::try_new(a.clone(), 1e-15, 10_000)
            .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?
            .unpack();
        Ok(Self { q, t })
    }

    pub fn eigenvalues(&self) -> DVector<Complex64> {
        self.t.diagonal()
    }

    pub fn len(&self) -> usize {
        self.t.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.t.nrows() == 0
    }

    /// X with A X + X Aᵀ = R.
    pub fn solve(&self, r: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let rp = self.q.adjoint() * r * self.q.map(|z| z.conj());
        let y = self.solve_triangular(rp);
        &self.q * y * self.q.transpose()
    }

    fn solve_triangular(&self, mut rp: DMatrix<Complex64>) -> DMatrix<Complex64> {
        let n = self.len();
        let t = &self.t;
        let mut y = DMatrix::<Complex64>::zeros(n, n);
        for j in (0..n).rev() {
            let mut rhs = rp.column(j).into_owned();
            for k in j + 1..n {
                let tjk = t[(j, k)];
                if tjk != Complex64::new(0.0, 0.0) {
                    rhs.axpy(-tjk, &y.column(k), Complex64::new(1.0, 0.0));
                }
            }
            let shift = t[(j, j)];
            // (T + T_jj I) y_j = rhs, upper triangular
            for i in (0..n).rev() {
                let mut s = rhs[i];
                for l in i + 1..n {
                    s -= t[(i, l)] * rhs[l];
                }
                rhs[i] = s / (t[(i, i)] + shift);
            }
            y.set_column(j, &rhs);
            rp.column_mut(j).fill(Complex64::new(0.0, 0.0));
        }
        y
    }

    /// Matrix M with M_ij = [X(E_jj)]_ii, the diagonal response to a unit
    /// diagonal source on site j. One independent solve per column.
    pub fn diagonal_response(&self) -> DMatrix<Complex64> {
        let n = self.len();
        let qc = self.q.map(|z| z.conj());
        let cols: Vec<DVector<Complex64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                // Q† E_jj Q̄ = (row j of Q)† ⊗ (row j of Q)^*  as an outer product
                let u = self.q.row(j).adjoint();
                let v = qc.row(j).transpose();
                let rp = &u * v.transpose();
                let y = self.solve_triangular(rp);
                // diag(Q Y Qᵀ)_i = Σ_ab Q_ia Y_ab Q_ib
                let qy = &self.q * y;
                DVector::from_fn(n, |i, _| {
                    let mut s = Complex64::new(0.0, 0.0);
                    for b in 0..n {
                        s += qy[(i, b)] * self.q[(i, b)];
                    }
                    s
                })
            })
            .collect();
        DMatrix::from_columns(&cols)
    }
}
