//! Second-order correlation g²(t) of the detected field.
//!
//! After a detection the state is Ê|ψ⟩. At leading order in the drive its
//! vacuum amplitude φ₀ = T stays fixed while the single-excitation part obeys
//! dφ₁/dt = −i(H₁φ₁ − Ωφ₀) from φ₁(0) = e_in c⁽¹⁾ + Cβ, so
//! g²(t) = |e_in φ₀ + β·φ₁(t)|² / |T|⁴.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::hamiltonian::EffectiveHamiltonian;
use crate::dynamics::jumps::JumpOperators;
use crate::dynamics::mcwf::McwfOptions;
use crate::dynamics::propagate::{evolve_grid, DormandPrince};
use crate::dynamics::basis::QuantumState;
use crate::dynamics::steady::SteadyState;
use crate::error::{Error, Result};
use crate::observables::field::FieldOperatorCoeffs;

const MIN_INTENSITY: f64 = 1e-12;
const POST_DETECTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct G2Series {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Standard errors, for stochastic estimates.
    pub std_err: Option<Vec<f64>>,
    /// ⟨Ê⟩ in the steady state.
    pub transmission: Complex64,
}

impl G2Series {
    pub fn minimum(&self) -> (f64, f64) {
        self.times
            .iter()
            .zip(&self.values)
            .fold((f64::NAN, f64::INFINITY), |acc, (&t, &g)| if g < acc.1 { (t, g) } else { acc })
    }
}

/// φ₁(t) on a sorted grid under dφ₁/dt = −i(H₁φ₁ − Ωφ₀).
pub(crate) fn post_detection_singles(
    h: &EffectiveHamiltonian,
    phi0: Complex64,
    phi1: &DVector<Complex64>,
    times: &[f64],
) -> Result<Vec<DVector<Complex64>>> {
    let i = Complex64::i();
    let source = &h.drive * phi0;
    let f = |_: f64, x: &DVector<Complex64>| (&h.single * x - &source) * (-i);
    let mut rk = DormandPrince::new(POST_DETECTION_TOL);
    let mut t = 0.0;
    let mut y = phi1.clone();
    let mut out = Vec::with_capacity(times.len());
    for &tn in times {
        if tn < t {
            return Err(Error::Precondition("time grid must be sorted and non-negative".into()));
        }
        y = rk.integrate(f, t, &y, tn)?;
        t = tn;
        out.push(y.clone());
    }
    Ok(out)
}

fn require_pairs(steady: &SteadyState, h: &EffectiveHamiltonian, coeffs: &FieldOperatorCoeffs) -> Result<()> {
    if steady.state.basis.max_excitations != 2 {
        return Err(Error::Precondition("g² needs the two-excitation steady state".into()));
    }
    let n = h.atoms();
    if steady.state.basis.atoms != n || coeffs.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: coeffs.len() });
    }
    Ok(())
}

/// Leading-order projection route.
pub fn g2_projection(
    steady: &SteadyState,
    h: &EffectiveHamiltonian,
    coeffs: &FieldOperatorCoeffs,
    times: &[f64],
) -> Result<G2Series> {
    require_pairs(steady, h, coeffs)?;
    let b = &coeffs.coefficients;
    let c1 = steady.singles();
    let c: DMatrix<Complex64> = steady.pairs();
    let t_amp = coeffs.input + b.dot(&c1);
    let intensity = t_amp.norm_sqr();
    if intensity < MIN_INTENSITY {
        return Err(Error::UndefinedCorrelation { intensity });
    }
    let phi1 = &c1 * coeffs.input + c * b;
    let singles = post_detection_singles(h, t_amp, &phi1, times)?;
    let values = singles
        .iter()
        .map(|p| (coeffs.input * t_amp + b.dot(p)).norm_sqr() / (intensity * intensity))
        .collect();
    Ok(G2Series { times: times.to_vec(), values, std_err: None, transmission: t_amp })
}

/// Full truncated-basis route: Ê|ψ⟩ evolved under the driven H including the
/// two-excitation sector, g²(t) = ⟨Ê†Ê⟩_{ψ̄(t)} / ⟨Ê†Ê⟩_ψ.
pub fn g2_truncated(
    steady: &QuantumState,
    h: &EffectiveHamiltonian,
    coeffs: &FieldOperatorCoeffs,
    times: &[f64],
    tol: f64,
) -> Result<G2Series> {
    if steady.basis != h.basis {
        return Err(Error::DimensionMismatch { expected: h.basis.dim(), found: steady.basis.dim() });
    }
    let intensity = coeffs.intensity(steady)?;
    if intensity < MIN_INTENSITY * steady.amplitudes[0].norm_sqr() * h.drive_strength.powi(2).min(1.0) {
        return Err(Error::UndefinedCorrelation { intensity });
    }
    let detected = QuantumState::from_vector(steady.basis, coeffs.apply(&steady.basis, &steady.amplitudes)?)?;
    let states = evolve_grid(&detected, h, times, tol)?;
    let values = states.iter().map(|s| coeffs.intensity(s).map(|i| i / intensity)).collect::<Result<_>>()?;
    Ok(G2Series { times: times.to_vec(), values, std_err: None, transmission: coeffs.expectation(steady)? })
}

/// First time after the minimum at which the antibunching dip has recovered
/// to 1/e of its depth, linearly interpolated.
pub fn recovery_time(series: &G2Series) -> Option<f64> {
    let (imin, &gmin) = series.values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1))?;
    if !(gmin < 1.0) {
        return None;
    }
    let target = 1.0 - (1.0 - gmin) / std::f64::consts::E;
    for i in imin + 1..series.values.len() {
        let (g0, g1) = (series.values[i - 1], series.values[i]);
        if g1 >= target {
            let (t0, t1) = (series.times[i - 1], series.times[i]);
            let s = if g1 > g0 { (target - g0) / (g1 - g0) } else { 1.0 };
            return Some(t0 + s * (t1 - t0) - series.times[imin]);
        }
    }
    None
}

/// Stochastic cross-check by quantum regression on MCWF trajectories.
///
/// Each trajectory relaxes from vacuum for `settle` under drive, giving ψ_j
/// with weight w_j = ‖Êψ_j‖²; it then continues from Êψ_j/√w_j, recording
/// I_j(t) = ⟨Ê†Ê⟩. The estimate is g²(t) = ⟨wI(t)⟩ / ⟨w⟩².
#[allow(clippy::too_many_arguments)]
pub fn g2_mcwf(
    h: &EffectiveHamiltonian,
    jumps: &JumpOperators,
    coeffs: &FieldOperatorCoeffs,
    settle: f64,
    times: &[f64],
    seed: u64,
    count: usize,
    options: McwfOptions,
) -> Result<G2Series> {
    use crate::dynamics::mcwf::{mcwf_run, trajectory_rng};
    use rayon::prelude::*;
    if count < 2 {
        return Err(Error::Precondition("need at least two trajectories".into()));
    }
    let basis = h.basis;
    let vacuum = QuantumState::vacuum(basis);
    // (w·I(t), w, ⟨Ê⟩) per trajectory
    let samples: Vec<(Vec<f64>, f64, Complex64)> = (0..count)
        .into_par_iter()
        .map(|j| {
            let mut rng = trajectory_rng(seed, j as u64);
            let relax = mcwf_run(h, jumps, &vacuum, &[settle], &mut rng, options)?;
            let psi = &relax.snapshots[0];
            let field = coeffs.expectation(psi)?;
            let detected = coeffs.apply(&basis, &psi.amplitudes)?;
            let w = detected.norm_squared();
            if !(w > 0.0) {
                return Ok((vec![0.0; times.len()], 0.0, field));
            }
            let start = QuantumState::from_vector(basis, detected)?;
            let after = mcwf_run(h, jumps, &start, times, &mut rng, options)?;
            let values = after.snapshots.iter().map(|s| coeffs.intensity(s).map(|i| w * i)).collect::<Result<_>>()?;
            Ok((values, w, field))
        })
        .collect::<Result<_>>()?;
    let m = count as f64;
    let w_mean = samples.iter().map(|s| s.1).sum::<f64>() / m;
    if w_mean < 1e-300 {
        return Err(Error::UndefinedCorrelation { intensity: w_mean });
    }
    let field = samples.iter().map(|s| s.2).sum::<Complex64>() / m;
    let mut values = Vec::with_capacity(times.len());
    let mut std_err = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        let x_mean = samples.iter().map(|s| s.0[k]).sum::<f64>() / m;
        let g = x_mean / (w_mean * w_mean);
        // delta method for X̄ / Ȳ²
        let var = samples
            .iter()
            .map(|s| {
                let lin = s.0[k] / (w_mean * w_mean) - 2.0 * x_mean * s.1 / w_mean.powi(3);
                let mean_lin = x_mean / (w_mean * w_mean) - 2.0 * x_mean / (w_mean * w_mean);
                (lin - mean_lin).powi(2)
            })
            .sum::<f64>()
            / (m - 1.0);
        values.push(g);
        std_err.push((var / m).sqrt());
    }
    Ok(G2Series { times: times.to_vec(), values, std_err: Some(std_err), transmission: field })
}
