//! Two-photon momentum densities of the transmitted light.
//!
//! In transverse momentum space the field operator is
//! Ẽ(k⊥) = g̃(k⊥) + Σ_n β_n(k⊥) σ_n with
//! β_n = i3π(2k² − k⊥²)/(2k³k_z Ω₀) e^{−ik⊥·r_n − ik_z z_n}.
//! Densities are divided by |g̃(0)|⁴, so the empty setup gives
//! e^{−(k₁² + k₂²)w²/2}.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::beams::GaussianBeam;
use crate::dynamics::hamiltonian::EffectiveHamiltonian;
use crate::dynamics::steady::SteadyState;
use crate::error::{Error, Result};
use crate::lattice::AtomSet;
use crate::observables::correlation::post_detection_singles;
use crate::params::K;

#[derive(Debug, Clone, PartialEq)]
pub struct MomentumFieldCoeffs {
    pub k_perp: [f64; 2],
    /// Incident-mode term g̃(k⊥).
    pub mode: Complex64,
    pub coefficients: DVector<Complex64>,
}

impl MomentumFieldCoeffs {
    pub fn new(atoms: &AtomSet, beam: &GaussianBeam, omega0: f64, k_perp: [f64; 2]) -> Result<Self> {
        let kp2 = k_perp[0] * k_perp[0] + k_perp[1] * k_perp[1];
        if kp2 >= K * K {
            return Err(Error::Domain(format!("|k⊥| = {} is not below k; k_z would be imaginary", kp2.sqrt())));
        }
        if !(omega0 > 0.0) {
            return Err(Error::Precondition(format!("field coefficients need Ω₀ > 0, got {omega0}")));
        }
        let kz = (K * K - kp2).sqrt();
        let scale = 3.0 * PI * (2.0 * K * K - kp2) / (2.0 * K.powi(3) * kz * omega0);
        let coefficients = DVector::from_iterator(
            atoms.len(),
            atoms.positions().iter().map(|r| {
                let phase = -(k_perp[0] * r[0] + k_perp[1] * r[1]) - kz * r[2];
                Complex64::i() * Complex64::from_polar(scale, phase)
            }),
        );
        Ok(Self { k_perp, mode: Complex64::new(beam.transverse_profile(k_perp), 0.0), coefficients })
    }
}

/// Square grid of transverse momenta; points outside |k⊥| ≤ radius are masked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumGrid {
    pub axis: Vec<f64>,
    pub radius: f64,
}

impl MomentumGrid {
    /// `points` samples over [−fraction·k, fraction·k].
    pub fn new(points: usize, fraction: f64) -> Result<Self> {
        if points < 2 {
            return Err(Error::Config("momentum grid needs at least two points".into()));
        }
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::Config(format!("momentum grid fraction must lie in (0, 1), got {fraction}")));
        }
        let kmax = fraction * K;
        let axis = (0..points).map(|i| -kmax + 2.0 * kmax * i as f64 / (points - 1) as f64).collect();
        Ok(Self { axis, radius: kmax })
    }

    pub fn spacing(&self) -> f64 {
        self.axis[1] - self.axis[0]
    }

    pub fn contains(&self, k: [f64; 2]) -> bool {
        k[0] * k[0] + k[1] * k[1] <= self.radius * self.radius * (1.0 + 1e-12)
    }
}

impl Default for MomentumGrid {
    fn default() -> Self {
        Self::new(41, 0.95).expect("valid default grid")
    }
}

/// Precomputed steady-state data for repeated density evaluations.
#[derive(Debug, Clone)]
pub struct PairCorrelator {
    atoms: AtomSet,
    beam: GaussianBeam,
    omega0: f64,
    hamiltonian: EffectiveHamiltonian,
    c1: DVector<Complex64>,
    pairs: DMatrix<Complex64>,
    norm: f64,
}

impl PairCorrelator {
    pub fn new(atoms: &AtomSet, beam: &GaussianBeam, steady: &SteadyState, h: &EffectiveHamiltonian) -> Result<Self> {
        if steady.state.basis.max_excitations != 2 {
            return Err(Error::Precondition("momentum densities need the two-excitation steady state".into()));
        }
        if atoms.len() != h.atoms() || steady.state.basis.atoms != h.atoms() {
            return Err(Error::DimensionMismatch { expected: h.atoms(), found: atoms.len() });
        }
        let g0 = beam.transverse_profile([0.0, 0.0]);
        Ok(Self {
            atoms: atoms.clone(),
            beam: *beam,
            omega0: h.drive_strength,
            hamiltonian: h.with_max_excitations(1)?,
            c1: steady.singles(),
            pairs: steady.pairs(),
            norm: g0.powi(4),
        })
    }

    pub fn coeffs(&self, k: [f64; 2]) -> Result<MomentumFieldCoeffs> {
        MomentumFieldCoeffs::new(&self.atoms, &self.beam, self.omega0, k)
    }

    /// State after detecting a photon at k₁: (φ₀, φ₁(t) for each t).
    fn detected(&self, first: &MomentumFieldCoeffs, times: &[f64]) -> Result<(Complex64, Vec<DVector<Complex64>>)> {
        let b = &first.coefficients;
        let phi0 = first.mode + b.dot(&self.c1);
        let phi1 = &self.c1 * first.mode + &self.pairs * b;
        if times.iter().all(|&t| t == 0.0) {
            return Ok((phi0, vec![phi1; times.len()]));
        }
        Ok((phi0, post_detection_singles(&self.hamiltonian, phi0, &phi1, times)?))
    }

    fn amplitude_from(second: &MomentumFieldCoeffs, phi0: Complex64, phi1: &DVector<Complex64>) -> Complex64 {
        second.mode * phi0 + second.coefficients.dot(phi1)
    }

    /// ρ̃(k₁, k₂, t) / |g̃(0)|⁴ with the first detection at k₁.
    pub fn density(&self, k1: [f64; 2], k2: [f64; 2], t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::Precondition(format!("delay must be non-negative, got {t}")));
        }
        // at equal times evaluate in a fixed order so the result is exactly symmetric
        let (k1, k2) = if t == 0.0 && (k2[0], k2[1]) < (k1[0], k1[1]) { (k2, k1) } else { (k1, k2) };
        let first = self.coeffs(k1)?;
        let second = self.coeffs(k2)?;
        let (phi0, phi1) = self.detected(&first, &[t])?;
        Ok(Self::amplitude_from(&second, phi0, &phi1[0]).norm_sqr() / self.norm)
    }
}

pub fn momentum_density(correlator: &PairCorrelator, k1: [f64; 2], k2: [f64; 2], t: f64) -> Result<f64> {
    correlator.density(k1, k2, t)
}

/// ρ̃ over pairs of momenta: rows index k₁, columns k₂; NaN outside the grid disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumMap {
    pub k1: Vec<[f64; 2]>,
    pub k2: Vec<[f64; 2]>,
    pub time: f64,
    pub values: Vec<Vec<f64>>,
}

impl MomentumMap {
    /// Position of the largest finite entry as (row, column).
    pub fn argmax(&self) -> Option<(usize, usize)> {
        let mut best = None;
        let mut top = f64::NEG_INFINITY;
        for (i, row) in self.values.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v.is_finite() && v > top {
                    top = v;
                    best = Some((i, j));
                }
            }
        }
        best
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.k1.len(), self.k2.len(), |i, j| {
            let v = self.values[i][j];
            if v.is_finite() { v } else { 0.0 }
        })
    }
}

/// Densities for every (k₁, k₂) pair at delay t, parallel over k₁.
pub fn momentum_map(correlator: &PairCorrelator, k1: &[[f64; 2]], k2: &[[f64; 2]], grid: &MomentumGrid, t: f64) -> Result<MomentumMap> {
    if t < 0.0 {
        return Err(Error::Precondition(format!("delay must be non-negative, got {t}")));
    }
    let seconds: Vec<Option<MomentumFieldCoeffs>> =
        k2.iter().map(|&k| if grid.contains(k) { correlator.coeffs(k).map(Some) } else { Ok(None) }).collect::<Result<_>>()?;
    let values = k1
        .par_iter()
        .map(|&ka| {
            if !grid.contains(ka) {
                return Ok(vec![f64::NAN; k2.len()]);
            }
            let first = correlator.coeffs(ka)?;
            let (phi0, phi1) = correlator.detected(&first, &[t])?;
            k2.iter()
                .zip(&seconds)
                .map(|(&kb, second)| match second {
                    None => Ok(f64::NAN),
                    Some(_) if t == 0.0 => correlator.density(ka, kb, 0.0),
                    Some(s) => Ok(PairCorrelator::amplitude_from(s, phi0, &phi1[0]).norm_sqr() / correlator.norm),
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(MomentumMap { k1: k1.to_vec(), k2: k2.to_vec(), time: t, values })
}

/// Cut with k₁,ₓ = k₂,ₓ = 0: rows k₁,ᵧ, columns k₂,ᵧ on the grid axis.
pub fn momentum_cut(correlator: &PairCorrelator, grid: &MomentumGrid, t: f64) -> Result<MomentumMap> {
    let line: Vec<[f64; 2]> = grid.axis.iter().map(|&k| [0.0, k]).collect();
    momentum_map(correlator, &line, &line, grid, t)
}

/// Fraction of a map's Frobenius weight outside its best rank-one
/// (factorizable) approximation: √(Σ_{i≥2} s_i² / Σ s_i²).
pub fn non_factorizable_fraction(map: &DMatrix<f64>) -> f64 {
    let s = map.clone().singular_values();
    let total: f64 = s.iter().map(|x| x * x).sum();
    if total == 0.0 {
        return 0.0;
    }
    let top = s.iter().cloned().fold(0.0, f64::max);
    ((total - top * top).max(0.0) / total).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beams::{drive_vector, DriveMode};
    use crate::dynamics::hamiltonian::build_hamiltonian;
    use crate::dynamics::steady::steady_state_weak_drive;
    use crate::greens::assemble_couplings;
    use crate::lattice::build_single_array;

    fn correlator(atoms: &AtomSet) -> PairCorrelator {
        let beam = GaussianBeam::new(1.5).unwrap();
        let c = assemble_couplings(atoms).unwrap();
        let d = drive_vector(atoms, &DriveMode::Gaussian(beam), 1e-3).unwrap();
        let h = build_hamiltonian(&c, &d, 0.1, 2).unwrap();
        let s = steady_state_weak_drive(&h).unwrap();
        PairCorrelator::new(atoms, &beam, &s, &h).unwrap()
    }

    #[test]
    fn rank_one_maps_factorize() {
        let u = DMatrix::from_fn(5, 1, |i, _| 1.0 + i as f64);
        let v = DMatrix::from_fn(1, 4, |_, j| 0.5 - j as f64);
        assert!(non_factorizable_fraction(&(u * v)) < 1e-12);
        assert!(non_factorizable_fraction(&DMatrix::identity(4, 4)) > 0.8);
    }

    #[test]
    fn equal_time_density_is_exchange_symmetric() {
        let atoms = build_single_array(3, 3, 0.6).unwrap();
        let c = correlator(&atoms);
        let (k1, k2) = ([1.33, -1.84], [-0.7, 2.1]);
        assert_eq!(c.density(k1, k2, 0.0).unwrap(), c.density(k2, k1, 0.0).unwrap());
        assert!(c.density([7.0, 0.0], k2, 0.0).is_err());
    }

    #[test]
    fn map_agrees_with_pointwise_evaluation() {
        let atoms = build_single_array(2, 2, 0.6).unwrap();
        let c = correlator(&atoms);
        let grid = MomentumGrid::new(7, 0.9).unwrap();
        let m = momentum_cut(&c, &grid, 1.5).unwrap();
        let (i, j) = (2, 5);
        let direct = c.density([0.0, grid.axis[i]], [0.0, grid.axis[j]], 1.5).unwrap();
        assert!((m.values[i][j] - direct).abs() < 1e-12 * direct);
    }
}
