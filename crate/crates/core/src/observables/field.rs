//! Field operator in a detection mode: Ê = e_in E_in + Σ_n β_n σ_n.
//!
//! Amplitudes are reported in units of the input-mode amplitude. Because the
//! drive enters as Ω_n = Ω₀ f(R_n), β_n carries 1/Ω₀ so that ⟨Ê⟩ is
//! independent of the drive strength at linear order.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::beams::GaussianBeam;
use crate::dynamics::basis::{unpack_pairs, QuantumState, TruncatedBasis};
use crate::error::{Error, Result};
use crate::lattice::AtomSet;
use crate::params::K;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldOperatorCoeffs {
    /// Weight of the incident field (1 forward, 0 backward).
    pub input: Complex64,
    pub coefficients: DVector<Complex64>,
}

fn check_drive(omega0: f64) -> Result<()> {
    if !(omega0 > 0.0) {
        return Err(Error::Precondition(format!("field coefficients need Ω₀ > 0, got {omega0}")));
    }
    Ok(())
}

impl FieldOperatorCoeffs {
    /// Transmitted field projected on the drive mode: β_n = i3π f*(R_n) / (k² η Ω₀).
    pub fn forward(atoms: &AtomSet, beam: &GaussianBeam, omega0: f64) -> Result<Self> {
        check_drive(omega0)?;
        let scale = 3.0 * PI / (K * K * beam.mode_norm(0.0) * omega0);
        let coefficients = DVector::from_iterator(
            atoms.len(),
            atoms.positions().iter().map(|&r| Complex64::i() * scale * beam.mode_value(r).conj()),
        );
        Ok(Self { input: Complex64::new(1.0, 0.0), coefficients })
    }

    /// Reflected field in the time-reversed mode; the input does not contribute.
    pub fn backward(atoms: &AtomSet, beam: &GaussianBeam, omega0: f64) -> Result<Self> {
        check_drive(omega0)?;
        let scale = 3.0 * PI / (K * K * beam.mode_norm(0.0) * omega0);
        let coefficients = DVector::from_iterator(
            atoms.len(),
            atoms.positions().iter().map(|&r| Complex64::i() * scale * beam.mode_value(r)),
        );
        Ok(Self { input: Complex64::new(0.0, 0.0), coefficients })
    }

    /// Plane-wave detection for periodic systems with `area` per supercell:
    /// β_n = i3π e^{∓ikz_n} / (k² A Ω₀).
    pub fn plane_wave(atoms: &AtomSet, area: f64, omega0: f64, forward: bool) -> Result<Self> {
        check_drive(omega0)?;
        if !(area > 0.0) {
            return Err(Error::Precondition(format!("detection area must be positive, got {area}")));
        }
        let scale = 3.0 * PI / (K * K * area * omega0);
        let sign = if forward { -1.0 } else { 1.0 };
        let coefficients = DVector::from_iterator(
            atoms.len(),
            atoms.positions().iter().map(|r| Complex64::i() * Complex64::from_polar(scale, sign * K * r[2])),
        );
        let input = Complex64::new(if forward { 1.0 } else { 0.0 }, 0.0);
        Ok(Self { input, coefficients })
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Ê applied to a truncated-basis vector. The incident field is a coherent
    /// amplitude, so it acts as the scalar `input` on every sector.
    pub fn apply(&self, basis: &TruncatedBasis, x: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        let n = basis.atoms;
        if n != self.len() || x.len() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), found: x.len() });
        }
        let b = &self.coefficients;
        let mut y = x * self.input;
        y[0] += b.dot(&x.rows(1, n));
        if basis.max_excitations == 2 && n > 1 {
            let c: DMatrix<Complex64> = unpack_pairs(x, n, 2);
            let s: DVector<Complex64> = c * b;
            let mut singles = y.rows_mut(1, n);
            singles += s;
        }
        Ok(y)
    }

    /// ⟨Ê⟩ in a (not necessarily normalized) state.
    pub fn expectation(&self, state: &QuantumState) -> Result<Complex64> {
        let ex = self.apply(&state.basis, &state.amplitudes)?;
        Ok(state.amplitudes.dotc(&ex) / state.norm_sqr())
    }

    /// ⟨Ê†Ê⟩ in a (not necessarily normalized) state.
    pub fn intensity(&self, state: &QuantumState) -> Result<f64> {
        let ex = self.apply(&state.basis, &state.amplitudes)?;
        Ok(ex.norm_squared() / state.norm_sqr())
    }
}

/// T = ⟨Ê⟩ / E_in.
pub fn transmission_finite(state: &QuantumState, coeffs: &FieldOperatorCoeffs) -> Result<Complex64> {
    if coeffs.is_empty() {
        return Ok(coeffs.input);
    }
    coeffs.expectation(state)
}
