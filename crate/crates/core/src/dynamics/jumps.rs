//! Collective decay channels L_k = √(2λ_k) Σ_n V_nk σ_n from Γ = V diag(λ) Vᵀ.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::dynamics::basis::{unpack_pairs, TruncatedBasis};
use crate::greens::CouplingMatrices;

/// Channels with λ_k below this carry no weight and are dropped.
const ZERO_RATE: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct JumpOperators {
    /// √(2λ_k) v_k as columns.
    weights: DMatrix<Complex64>,
    rates: Vec<f64>,
}

impl JumpOperators {
    pub fn from_couplings(couplings: &CouplingMatrices) -> Self {
        let vals = couplings.decay_eigenvalues();
        let vecs = couplings.decay_eigenvectors();
        let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > ZERO_RATE).collect();
        let n = couplings.len();
        let weights = DMatrix::from_fn(n, keep.len(), |i, j| {
            let k = keep[j];
            Complex64::new((2.0 * vals[k]).sqrt() * vecs[(i, k)], 0.0)
        });
        Self { weights, rates: keep.iter().map(|&k| 2.0 * vals[k]).collect() }
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// Decay rate 2λ_k of each channel.
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// σ_n-weights of channel k.
    pub fn channel(&self, k: usize) -> DVector<Complex64> {
        self.weights.column(k).into_owned()
    }

    /// L_k x on flat truncated-basis vectors.
    pub fn apply(&self, basis: &TruncatedBasis, k: usize, x: &DVector<Complex64>) -> DVector<Complex64> {
        let n = basis.atoms;
        let w = self.weights.column(k);
        let mut y = DVector::zeros(basis.dim());
        // σ_n |m⟩ = δ_nm |0⟩, σ_n |m l⟩ = δ_nm |l⟩ + δ_nl |m⟩
        y[0] = w.dot(&x.rows(1, n));
        if basis.max_excitations == 2 && n > 1 {
            let c = unpack_pairs(x, n, 2);
            let single: DVector<Complex64> = c * w;
            y.rows_mut(1, n).copy_from(&single);
        }
        y
    }

    /// ‖L_k x‖² for every channel.
    pub fn channel_weights(&self, basis: &TruncatedBasis, x: &DVector<Complex64>) -> Vec<f64> {
        let n = basis.atoms;
        let c1 = x.rows(1, n);
        let vac = self.weights.transpose() * c1;
        let mut w: Vec<f64> = vac.iter().map(|z| z.norm_sqr()).collect();
        if basis.max_excitations == 2 && n > 1 {
            let c = unpack_pairs(x, n, 2);
            let s = c * &self.weights;
            for (k, wk) in w.iter_mut().enumerate() {
                *wk += s.column(k).norm_squared();
            }
        }
        w
    }

    /// Dense L_k on the truncated basis.
    pub fn dense(&self, basis: &TruncatedBasis, k: usize) -> DMatrix<Complex64> {
        let d = basis.dim();
        let mut m = DMatrix::zeros(d, d);
        let mut e = DVector::zeros(d);
        for j in 0..d {
            e[j] = Complex64::new(1.0, 0.0);
            m.set_column(j, &self.apply(basis, k, &e));
            e[j] = Complex64::new(0.0, 0.0);
        }
        m
    }
}
