//! Unit conventions.
//!
//! Every length in the crate is measured in units of the transition
//! wavelength λ and every rate or detuning in units of the single-atom
//! amplitude decay rate γ. The wavenumber `K = 2π` therefore appears
//! explicitly in formulas. [`PhysicalParams`] converts between laboratory
//! values and these internal units at the boundaries.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// Wavenumber of the driven transition in internal units (λ = 1).
pub const K: f64 = 2.0 * PI;

/// Circular polarization vector e₊ = (1, i, 0)/√2.
pub const POLARIZATION: [Complex64; 3] = [
    Complex64::new(FRAC_1_SQRT_2, 0.0),
    Complex64::new(0.0, FRAC_1_SQRT_2),
    Complex64::new(0.0, 0.0),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Single-atom amplitude decay rate in laboratory rate units.
    pub gamma: f64,
    /// Transition wavelength in laboratory length units.
    pub wavelength: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self { gamma: 1.0, wavelength: 1.0 }
    }
}

impl PhysicalParams {
    pub fn new(gamma: f64, wavelength: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::Precondition(format!("gamma must be positive, got {gamma}")));
        }
        if !(wavelength > 0.0) {
            return Err(Error::Precondition(format!(
                "wavelength must be positive, got {wavelength}"
            )));
        }
        Ok(Self { gamma, wavelength })
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn polarization(&self) -> [Complex64; 3] {
        POLARIZATION
    }

    pub fn length_to_internal(&self, length: f64) -> f64 {
        length / self.wavelength
    }

    pub fn length_from_internal(&self, length: f64) -> f64 {
        length * self.wavelength
    }

    pub fn rate_to_internal(&self, rate: f64) -> f64 {
        rate / self.gamma
    }

    pub fn rate_from_internal(&self, rate: f64) -> f64 {
        rate * self.gamma
    }

    pub fn time_to_internal(&self, time: f64) -> f64 {
        time * self.gamma
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polarization_is_unit_norm() {
        let norm: f64 = POLARIZATION.iter().map(|c| c.norm_sqr()).sum();
        assert!((norm - 1.0).abs() <= f64::EPSILON);
    }

    #[test]
    fn rejects_non_positive_rates() {
        assert!(PhysicalParams::new(0.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, -2.0).is_err());
        let p = PhysicalParams::new(2.0, 0.5).unwrap();
        assert!((p.wavenumber() - 4.0 * PI).abs() < 1e-15);
        assert_eq!(p.rate_to_internal(4.0), 2.0);
        assert_eq!(p.length_to_internal(1.0), 2.0);
    }
}
