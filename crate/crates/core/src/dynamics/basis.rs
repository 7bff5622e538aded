//! Vacuum + single + double excitation amplitudes over N two-level atoms.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncatedBasis {
    pub atoms: usize,
    pub max_excitations: usize,
}

impl TruncatedBasis {
    pub fn new(atoms: usize, max_excitations: usize) -> Result<Self> {
        if !(1..=2).contains(&max_excitations) {
            return Err(Error::Precondition(format!(
                "excitation truncation must be 1 or 2, got {max_excitations}"
            )));
        }
        Ok(Self { atoms, max_excitations })
    }

    pub fn pairs(&self) -> usize {
        if self.max_excitations == 2 {
            self.atoms * self.atoms.saturating_sub(1) / 2
        } else {
            0
        }
    }

    pub fn dim(&self) -> usize {
        1 + self.atoms + self.pairs()
    }

    pub fn single(&self, n: usize) -> usize {
        1 + n
    }

    /// Flat index of the pair state σ_n†σ_m†|0⟩ (order of n, m irrelevant).
    pub fn pair(&self, n: usize, m: usize) -> usize {
        debug_assert!(n != m && self.max_excitations == 2);
        let (n, m) = if n < m { (n, m) } else { (m, n) };
        let big_n = self.atoms;
        1 + big_n + n * (2 * big_n - n - 1) / 2 + (m - n - 1)
    }

    /// Excitation number of flat index `i`.
    pub fn excitations(&self, i: usize) -> usize {
        if i == 0 {
            0
        } else if i <= self.atoms {
            1
        } else {
            2
        }
    }
}

/// Amplitude vector on a [`TruncatedBasis`]; unnormalized in general.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    pub basis: TruncatedBasis,
    pub amplitudes: DVector<Complex64>,
}

impl QuantumState {
    pub fn vacuum(basis: TruncatedBasis) -> Self {
        let mut amplitudes = DVector::zeros(basis.dim());
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self { basis, amplitudes }
    }

    pub fn from_vector(basis: TruncatedBasis, amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), found: amplitudes.len() });
        }
        Ok(Self { basis, amplitudes })
    }

    /// Assemble from sector blocks; `pairs` is symmetric with ignored diagonal.
    pub fn from_blocks(
        basis: TruncatedBasis,
        vacuum: Complex64,
        singles: &DVector<Complex64>,
        pairs: Option<&DMatrix<Complex64>>,
    ) -> Result<Self> {
        let n = basis.atoms;
        if singles.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: singles.len() });
        }
        let mut amplitudes = DVector::zeros(basis.dim());
        amplitudes[0] = vacuum;
        amplitudes.rows_mut(1, n).copy_from(singles);
        if basis.max_excitations == 2 {
            if let Some(c) = pairs {
                if c.nrows() != n || c.ncols() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: c.nrows() });
                }
                let mut idx = 1 + n;
                for a in 0..n {
                    for b in a + 1..n {
                        amplitudes[idx] = c[(a, b)];
                        idx += 1;
                    }
                }
            }
        }
        Ok(Self { basis, amplitudes })
    }

    pub fn vacuum_amplitude(&self) -> Complex64 {
        self.amplitudes[0]
    }

    pub fn singles(&self) -> DVector<Complex64> {
        self.amplitudes.rows(1, self.basis.atoms).into_owned()
    }

    /// Symmetric pair matrix with zero diagonal (all zeros if max_exc = 1).
    pub fn pair_matrix(&self) -> DMatrix<Complex64> {
        unpack_pairs(&self.amplitudes, self.basis.atoms, self.basis.max_excitations)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.amplitudes.norm();
        if !(n > 0.0) {
            return Err(Error::Numerical("cannot normalize a zero state".into()));
        }
        Ok(Self { basis: self.basis, amplitudes: &self.amplitudes / Complex64::new(n, 0.0) })
    }

    /// Populations of each excitation sector.
    pub fn sector_populations(&self) -> [f64; 3] {
        let mut p = [0.0; 3];
        for (i, a) in self.amplitudes.iter().enumerate() {
            p[self.basis.excitations(i)] += a.norm_sqr();
        }
        p
    }

    /// ⟨σ_n†σ_n⟩ per atom for the normalized state.
    pub fn atom_populations(&self) -> Vec<f64> {
        let n = self.basis.atoms;
        let norm = self.norm_sqr();
        let mut pops: Vec<f64> = (0..n).map(|k| self.amplitudes[1 + k].norm_sqr()).collect();
        if self.basis.max_excitations == 2 {
            let mut idx = 1 + n;
            for a in 0..n {
                for b in a + 1..n {
                    let p = self.amplitudes[idx].norm_sqr();
                    pops[a] += p;
                    pops[b] += p;
                    idx += 1;
                }
            }
        }
        pops.iter().map(|p| p / norm).collect()
    }
}

pub(crate) fn unpack_pairs(flat: &DVector<Complex64>, n: usize, max_exc: usize) -> DMatrix<Complex64> {
    let mut c = DMatrix::zeros(n, n);
    if max_exc == 2 {
        let mut idx = 1 + n;
        for a in 0..n {
            for b in a + 1..n {
                c[(a, b)] = flat[idx];
                c[(b, a)] = flat[idx];
                idx += 1;
            }
        }
    }
    c
}
