//! Gaussian drive and detection modes.
//!
//! The mode is the normalized paraxial Gaussian
//!
//! f(r, z) = √(2/π) (w / w(z)) exp(−r²/w(z)²) exp[i(kz + k r²/(2R(z)) − ψ(z))]
//!
//! with waist `w` at z = 0. Its transverse Fourier transform is
//! g̃(k⊥) e^{ik(1 − k⊥²/2k²)z}, g̃(k⊥) = √(2π) w² e^{−k⊥²w²/4}.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lattice::AtomSet;
use crate::params::K;
use crate::quadrature::GaussLegendre;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianBeam {
    waist: f64,
}

impl GaussianBeam {
    pub fn new(waist: f64) -> Result<Self> {
        if !(waist > 0.0) || !waist.is_finite() {
            return Err(Error::Precondition(format!("beam waist must be positive, got {waist}")));
        }
        Ok(Self { waist })
    }

    pub fn waist(&self) -> f64 {
        self.waist
    }

    /// z_R = πw²/λ.
    pub fn rayleigh_range(&self) -> f64 {
        PI * self.waist * self.waist
    }

    pub fn width_at(&self, z: f64) -> f64 {
        let zr = self.rayleigh_range();
        self.waist * (1.0 + (z / zr).powi(2)).sqrt()
    }

    /// 1/R(z), finite at the waist.
    pub fn inverse_curvature(&self, z: f64) -> f64 {
        let zr = self.rayleigh_range();
        z / (z * z + zr * zr)
    }

    pub fn gouy_phase(&self, z: f64) -> f64 {
        (z / self.rayleigh_range()).atan()
    }

    /// Phase of the mode at transverse radius² `r2` and axial position `z`.
    pub fn phase(&self, r2: f64, z: f64) -> f64 {
        K * z + 0.5 * K * r2 * self.inverse_curvature(z) - self.gouy_phase(z)
    }

    pub fn mode_value(&self, r: [f64; 3]) -> Complex64 {
        let [x, y, z] = r;
        let r2 = x * x + y * y;
        let wz = self.width_at(z);
        let amp = (2.0 / PI).sqrt() * self.waist / wz * (-r2 / (wz * wz)).exp();
        Complex64::from_polar(amp, self.phase(r2, z))
    }

    /// g̃(k⊥), the transverse profile at the waist plane.
    pub fn transverse_profile(&self, k_perp: [f64; 2]) -> f64 {
        let kp2 = k_perp[0] * k_perp[0] + k_perp[1] * k_perp[1];
        let w2 = self.waist * self.waist;
        (2.0 * PI).sqrt() * w2 * (-kp2 * w2 / 4.0).exp()
    }

    /// Paraxial transverse Fourier transform of the mode at plane `z`.
    pub fn mode_fourier(&self, k_perp: [f64; 2], z: f64) -> Complex64 {
        let kp2 = k_perp[0] * k_perp[0] + k_perp[1] * k_perp[1];
        let phase = K * (1.0 - kp2 / (2.0 * K * K)) * z;
        Complex64::from_polar(self.transverse_profile(k_perp), phase)
    }

    /// Fraction of the transverse-momentum weight beyond k_ε = √(2ε) k,
    /// i.e. where k⊥²/2k² exceeds `epsilon`.
    pub fn paraxial_tail_fraction(&self, epsilon: f64) -> Result<f64> {
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(Error::Precondition(format!(
                "paraxial cutoff must lie in (0, 1/2), got {epsilon}"
            )));
        }
        let k_eps = (2.0 * epsilon).sqrt() * K;
        Ok((-k_eps * k_eps * self.waist * self.waist / 2.0).exp())
    }

    /// η(z) = ∫d²r |f(r, z)|², evaluated by radial quadrature.
    pub fn mode_norm(&self, z: f64) -> f64 {
        let wz = self.width_at(z);
        let rule = GaussLegendre::new(64);
        let rmax = 8.0 * wz;
        2.0 * PI
            * rule.integrate(0.0, rmax, |r| {
                let f = self.mode_value([r, 0.0, z]);
                r * f.norm_sqr()
            })
    }
}

/// Spatial mode of the driving field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum DriveMode {
    Gaussian(GaussianBeam),
    PlaneWave,
}

impl DriveMode {
    pub fn value(&self, r: [f64; 3]) -> Complex64 {
        match self {
            DriveMode::Gaussian(beam) => beam.mode_value(r),
            DriveMode::PlaneWave => Complex64::from_polar(1.0, K * r[2]),
        }
    }
}

/// Per-atom Rabi amplitudes Ω_n = Ω₀ f(R_n); the product dE_in is folded into Ω₀.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveVector {
    pub amplitudes: Vec<Complex64>,
    pub strength: f64,
}

impl DriveVector {
    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            amplitudes: self.amplitudes.iter().map(|a| a * factor).collect(),
            strength: self.strength * factor,
        }
    }
}

pub fn drive_vector(atoms: &AtomSet, mode: &DriveMode, omega0: f64) -> Result<DriveVector> {
    if !(omega0 >= 0.0) {
        return Err(Error::Precondition(format!("drive strength must be non-negative, got {omega0}")));
    }
    let amplitudes = atoms.positions().iter().map(|&r| mode.value(r) * omega0).collect();
    Ok(DriveVector { amplitudes, strength: omega0 })
}
