//! Linear-response spectra of finite arrays.
//!
//! At linear order T(Δ) = e_in + βᵀ(−Δ − 𝒢)⁻¹Ω. One Schur factorization
//! −𝒢 = QRQ† turns every detuning into a triangular solve.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beams::{drive_vector, DriveMode, GaussianBeam};
use crate::error::{Error, Result};
use crate::greens::{assemble_couplings, CouplingMatrices};
use crate::lattice::{build_dual_array, Geometry, LatticeSpec};
use crate::linear_response::spectra::group_delay;
use crate::observables::field::FieldOperatorCoeffs;

/// Stencil step as a fraction of the local linewidth.
pub const DELAY_STEP_FRACTION: f64 = 1e-3;
const GOLDEN_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LinearSpectrum {
    t: DMatrix<Complex64>,
    /// Q†Ω
    source: DVector<Complex64>,
    /// βᵀQ
    detector: DVector<Complex64>,
    input: Complex64,
}

impl LinearSpectrum {
    /// `drive` and `coeffs` must use the same Ω₀; their product is what matters.
    pub fn new(couplings: &CouplingMatrices, drive: &DVector<Complex64>, coeffs: &FieldOperatorCoeffs) -> Result<Self> {
        let n = couplings.len();
        if drive.len() != n || coeffs.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: drive.len().min(coeffs.len()) });
        }
        let schur = Schur::try_new(-couplings.complex().clone(), 1e-15, 10_000)
            .ok_or_else(|| Error::Numerical("Schur decomposition of the coupling matrix did not converge".into()))?;
        let (q, t) = schur.unpack();
        Ok(Self {
            source: q.adjoint() * drive,
            detector: (coeffs.coefficients.transpose() * &q).transpose(),
            t,
            input: coeffs.input,
        })
    }

    /// Gaussian drive and matching forward (or backward) detection on `atoms`.
    pub fn gaussian(couplings: &CouplingMatrices, atoms: &crate::lattice::AtomSet, beam: &GaussianBeam, forward: bool) -> Result<Self> {
        let drive = drive_vector(atoms, &DriveMode::Gaussian(*beam), 1.0)?;
        let coeffs = if forward {
            FieldOperatorCoeffs::forward(atoms, beam, 1.0)?
        } else {
            FieldOperatorCoeffs::backward(atoms, beam, 1.0)?
        };
        Self::new(couplings, &DVector::from_column_slice(&drive.amplitudes), &coeffs)
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }

    pub fn eigenvalues(&self) -> DVector<Complex64> {
        self.t.diagonal()
    }

    /// Amplitude at detuning Δ (bare atomic line).
    pub fn amplitude(&self, delta: f64) -> Complex64 {
        if self.is_empty() {
            return self.input;
        }
        let mut m = self.t.clone();
        for i in 0..m.nrows() {
            m[(i, i)] -= delta;
        }
        match m.solve_upper_triangular(&self.source) {
            Some(x) => self.input + self.detector.dot(&x),
            None => Complex64::new(f64::NAN, f64::NAN),
        }
    }

    pub fn amplitudes(&self, deltas: &[f64]) -> Vec<Complex64> {
        deltas.par_iter().map(|&d| self.amplitude(d)).collect()
    }

    /// Exact dT/dΔ = βᵀ H₁⁻² Ω, for cross-checks of the stencil.
    pub fn derivative(&self, delta: f64) -> Complex64 {
        let mut m = self.t.clone();
        for i in 0..m.nrows() {
            m[(i, i)] -= delta;
        }
        let x = m.solve_upper_triangular(&self.source).and_then(|x| m.solve_upper_triangular(&x));
        x.map_or(Complex64::new(f64::NAN, f64::NAN), |x| self.detector.dot(&x))
    }

    /// Local maxima of |T| in [lo, hi] above `min_magnitude`, refined by golden section.
    pub fn peaks(&self, lo: f64, hi: f64, samples: usize, min_magnitude: f64) -> Result<Vec<TransmissionPeak>> {
        if !(hi > lo) || samples < 3 {
            return Err(Error::Precondition("peak search needs hi > lo and at least three samples".into()));
        }
        let grid: Vec<f64> = (0..samples).map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64).collect();
        let mags: Vec<f64> = self.amplitudes(&grid).iter().map(|t| t.norm()).collect();
        let spacing = grid[1] - grid[0];
        let mut out = Vec::new();
        for i in 1..samples - 1 {
            if mags[i] > mags[i - 1] && mags[i] >= mags[i + 1] && mags[i] > min_magnitude {
                let d = golden_max(|x| self.amplitude(x).norm(), grid[i - 1], grid[i + 1]);
                out.push(self.peak_at(d, spacing));
            }
        }
        Ok(out)
    }

    fn peak_at(&self, delta: f64, spacing: f64) -> TransmissionPeak {
        let t = self.amplitude(delta);
        let half = 0.5 * t.norm_sqr();
        let side = |dir: f64| -> Option<f64> {
            let mut step = spacing.max(1e-9);
            let mut inner = delta;
            for _ in 0..200 {
                let outer = delta + dir * step;
                if self.amplitude(outer).norm_sqr() < half {
                    let (mut a, mut b) = (inner, outer);
                    for _ in 0..100 {
                        let m = 0.5 * (a + b);
                        if self.amplitude(m).norm_sqr() < half {
                            b = m;
                        } else {
                            a = m;
                        }
                    }
                    return Some((0.5 * (a + b) - delta).abs());
                }
                inner = outer;
                step *= 1.5;
            }
            None
        };
        let linewidth = match (side(-1.0), side(1.0)) {
            (Some(a), Some(b)) => Some(0.5 * (a + b)),
            _ => None,
        };
        let delay = linewidth.and_then(|w| delay_time_finite(self, delta, w).ok());
        TransmissionPeak { delta, transmission: t, magnitude: t.norm(), linewidth, delay }
    }
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > GOLDEN_TOL * (1.0 + a.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionPeak {
    pub delta: f64,
    pub transmission: Complex64,
    pub magnitude: f64,
    /// Half width at half maximum of |T|².
    pub linewidth: Option<f64>,
    pub delay: Option<f64>,
}

/// τ = Im[(1/T) dT/dΔ], stencil step 10⁻³ of `linewidth`.
pub fn delay_time_finite(spectrum: &LinearSpectrum, delta: f64, linewidth: f64) -> Result<f64> {
    if !(linewidth > 0.0) {
        return Err(Error::Precondition(format!("linewidth must be positive, got {linewidth}")));
    }
    group_delay(|d| Ok(spectrum.amplitude(d)), delta, DELAY_STEP_FRACTION * linewidth)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayScanPoint {
    pub separation: f64,
    pub peak: Option<TransmissionPeak>,
}

/// Follows the strongest transmission peak in [lo, hi] across separations of
/// a curved dual array.
pub fn delay_scan(
    nx: usize,
    ny: usize,
    a: f64,
    beam: &GaussianBeam,
    separations: &[f64],
    window: (f64, f64),
    samples: usize,
) -> Result<Vec<DelayScanPoint>> {
    separations
        .par_iter()
        .map(|&l| {
            let spec = LatticeSpec::new(nx, ny, a, l, Geometry::Curved { waist: beam.waist() })?;
            let atoms = build_dual_array(&spec, Some(beam))?;
            let couplings = assemble_couplings(&atoms)?;
            let s = LinearSpectrum::gaussian(&couplings, &atoms, beam, true)?;
            let peaks = s.peaks(window.0, window.1, samples, 0.0)?;
            let peak = peaks.into_iter().max_by(|x, y| x.magnitude.total_cmp(&y.magnitude));
            Ok(DelayScanPoint { separation: l, peak })
        })
        .collect()
}
