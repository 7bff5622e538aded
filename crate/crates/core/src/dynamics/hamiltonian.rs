//! Effective non-Hermitian Hamiltonian on the truncated basis.
//!
//! Single sector: ⟨n|H|m⟩ = −Δδ_nm − 𝒢_nm with 𝒢_nn = iγ. Drive: ⟨n|H|0⟩ = −Ω_n.
//! The double sector acts on the symmetric pair matrix C as
//! P_offdiag(H₁C + CH₁ᵀ), so it is never stored densely.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::beams::DriveVector;
use crate::dynamics::basis::{unpack_pairs, QuantumState, TruncatedBasis};
use crate::error::{Error, Result};
use crate::greens::CouplingMatrices;

#[derive(Debug, Clone)]
pub struct EffectiveHamiltonian {
    pub basis: TruncatedBasis,
    pub detuning: f64,
    /// Single-excitation block H₁ = −Δ − 𝒢.
    pub single: DMatrix<Complex64>,
    pub drive: DVector<Complex64>,
    pub drive_strength: f64,
}

pub fn build_hamiltonian(
    couplings: &CouplingMatrices,
    drive: &DriveVector,
    detuning: f64,
    max_excitations: usize,
) -> Result<EffectiveHamiltonian> {
    let n = couplings.len();
    if drive.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: drive.len() });
    }
    let basis = TruncatedBasis::new(n, max_excitations)?;
    let mut single = -couplings.complex().clone();
    for i in 0..n {
        single[(i, i)] -= detuning;
    }
    Ok(EffectiveHamiltonian {
        basis,
        detuning,
        single,
        drive: DVector::from_column_slice(&drive.amplitudes),
        drive_strength: drive.strength,
    })
}

impl EffectiveHamiltonian {
    pub fn atoms(&self) -> usize {
        self.basis.atoms
    }

    pub fn without_drive(&self) -> Self {
        Self {
            drive: DVector::zeros(self.atoms()),
            drive_strength: 0.0,
            ..self.clone()
        }
    }

    pub fn with_max_excitations(&self, max_excitations: usize) -> Result<Self> {
        Ok(Self { basis: TruncatedBasis::new(self.atoms(), max_excitations)?, ..self.clone() })
    }

    /// y = H x on flat amplitude vectors.
    pub fn apply(&self, x: &DVector<Complex64>) -> DVector<Complex64> {
        let n = self.atoms();
        let omega = &self.drive;
        let c0 = x[0];
        let c1 = x.rows(1, n);
        let mut y = DVector::zeros(self.basis.dim());
        y[0] = -omega.dotc(&c1);
        let mut y1 = &self.single * c1 - omega * c0;
        if self.basis.max_excitations == 2 && n > 1 {
            let c = unpack_pairs(x, n, 2);
            // (H₁₂ C)_k = −Σ_n Ω_n* C_nk
            y1 -= c.transpose() * omega.conjugate();
            let hc = &self.single * &c;
            let mut idx = 1 + n;
            for a in 0..n {
                for b in a + 1..n {
                    y[idx] = hc[(a, b)] + hc[(b, a)] - (omega[a] * c1[b] + omega[b] * c1[a]);
                    idx += 1;
                }
            }
        }
        y.rows_mut(1, n).copy_from(&y1);
        y
    }

    pub fn apply_state(&self, state: &QuantumState) -> Result<QuantumState> {
        if state.basis != self.basis {
            return Err(Error::DimensionMismatch { expected: self.basis.dim(), found: state.basis.dim() });
        }
        QuantumState::from_vector(self.basis, self.apply(&state.amplitudes))
    }

    /// Dense matrix, for small systems and oracles.
    pub fn dense(&self) -> DMatrix<Complex64> {
        let d = self.basis.dim();
        let mut m = DMatrix::zeros(d, d);
        let mut e = DVector::zeros(d);
        for j in 0..d {
            e[j] = Complex64::new(1.0, 0.0);
            m.set_column(j, &self.apply(&e));
            e[j] = Complex64::new(0.0, 0.0);
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beams::{drive_vector, DriveMode};
    use crate::greens::assemble_couplings;
    use crate::lattice::{build_dual_array, build_single_array, Geometry, LatticeSpec};
    use nalgebra::SymmetricEigen;

    #[test]
    fn single_atom_matrix() {
        let atoms = build_single_array(1, 1, 0.6).unwrap();
        let c = assemble_couplings(&atoms).unwrap();
        let d = drive_vector(&atoms, &DriveMode::PlaneWave, 0.1).unwrap();
        let h = build_hamiltonian(&c, &d, 0.7, 1).unwrap().dense();
        let i = Complex64::i();
        assert_eq!(h[(0, 0)], Complex64::new(0.0, 0.0));
        assert!((h[(0, 1)] + Complex64::new(0.1, 0.0)).norm() < 1e-15);
        assert!((h[(1, 0)] + Complex64::new(0.1, 0.0)).norm() < 1e-15);
        assert!((h[(1, 1)] - (-0.7 - i)).norm() < 1e-15);
    }

    fn small_dual() -> (CouplingMatrices, DriveVector) {
        let spec = LatticeSpec::new(2, 1, 0.4, 0.7, Geometry::Flat).unwrap();
        let atoms = build_dual_array(&spec, None).unwrap();
        let c = assemble_couplings(&atoms).unwrap();
        let d = drive_vector(&atoms, &DriveMode::PlaneWave, 0.2).unwrap();
        (c, d)
    }

    #[test]
    fn structure_of_double_sector() {
        let (c, d) = small_dual();
        let h = build_hamiltonian(&c, &d, 0.3, 2).unwrap();
        let m = h.dense();
        let b = h.basis;
        // drive off: block diagonal by excitation number
        let m0 = h.without_drive().dense();
        for i in 0..b.dim() {
            for j in 0..b.dim() {
                if b.excitations(i) != b.excitations(j) {
                    assert_eq!(m0[(i, j)], Complex64::new(0.0, 0.0));
                }
            }
        }
        // pair diagonal = sum of the two single-atom diagonals
        let p = b.pair(0, 2);
        assert!((m[(p, p)] - (h.single[(0, 0)] + h.single[(2, 2)])).norm() < 1e-14);
        // hopping |0 2⟩ → |1 2⟩ carries H₁[1,0]
        assert!((m[(b.pair(1, 2), p)] - h.single[(1, 0)]).norm() < 1e-14);
        // drive |2⟩ → |0 2⟩ is −Ω_0
        assert!((m[(p, b.single(2))] + d.amplitudes[0]).norm() < 1e-14);
        assert!((m[(b.single(2), p)] + d.amplitudes[0].conj()).norm() < 1e-14);
        // H + iΓ-part Hermitian; anti-Hermitian part negative semidefinite
        let anti = (&m - m.adjoint()) / Complex64::new(0.0, 2.0);
        let herm = (&m + m.adjoint()) / Complex64::new(2.0, 0.0);
        let with_decay = &herm + &anti * Complex64::i();
        assert!((&with_decay - &m).norm() < 1e-13);
        let eig = SymmetricEigen::new(anti.map(|z| z.re));
        assert!(anti.map(|z| z.im).norm() < 1e-13);
        assert!(eig.eigenvalues.max() <= 1e-10);
    }
}
