//! Regularized in-plane lattice sums Σ_{n≠0} 𝒢(r_n, 0) e^{−ik⊥·r_n}.
//!
//! The plain sum is conditionally convergent (terms fall as e^{ikr}/r). A
//! Gaussian window e^{−r²/R²} makes it absolutely convergent; the windowed
//! value is a power series in h = 1/R² up to exponentially small terms, so
//! polynomial extrapolation h → 0 through a few radii recovers the limit.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::planar_coupling;
use crate::linear_response::momentum::check_spacing;

/// Window radii in units of λ.
pub const DEFAULT_RADII: [f64; 6] = [4.0, 5.0, 6.0, 8.0, 10.0, 12.0];
/// Points per extrapolant.
pub const RICHARDSON_POINTS: usize = 5;
/// Sites beyond this many window radii are dropped (weight < e^{−36}).
const CUTOFF: f64 = 6.0;
const MAX_ERROR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSum {
    /// Extrapolated complex sum.
    pub value: Complex64,
    /// |difference| between the two most refined extrapolants.
    pub error: f64,
    pub radii: Vec<f64>,
    pub partials: Vec<Complex64>,
}

/// Precomputed site list and per-radius windows for repeated evaluation at many k⊥.
#[derive(Debug, Clone)]
pub struct WindowedLattice {
    radii: Vec<f64>,
    // half-plane representatives: 𝒢 depends only on |r|, so ±r pair into a cosine
    sites: Vec<[f64; 2]>,
    couplings: Vec<Complex64>,
    weights: Vec<Vec<f64>>,
}

impl WindowedLattice {
    pub fn new(a: f64, radii: &[f64]) -> Result<Self> {
        check_spacing(a)?;
        if radii.len() < RICHARDSON_POINTS + 1 {
            return Err(Error::Precondition(format!(
                "need at least {} window radii, got {}",
                RICHARDSON_POINTS + 1,
                radii.len()
            )));
        }
        if radii.iter().any(|&r| !(r > 0.0)) || radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Precondition("window radii must be positive and increasing".into()));
        }
        let rmax = CUTOFF * radii[radii.len() - 1];
        let m = (rmax / a).ceil() as i64;
        let mut sites = Vec::new();
        let mut couplings = Vec::new();
        let mut weights: Vec<Vec<f64>> = Vec::new();
        for i in 0..=m {
            for j in -m..=m {
                if i == 0 && j <= 0 {
                    continue;
                }
                let (x, y) = (i as f64 * a, j as f64 * a);
                let r = (x * x + y * y).sqrt();
                if r >= rmax {
                    continue;
                }
                // planar_coupling cannot fail at r > 0
                let g = planar_coupling(r, 0.0).expect("nonzero separation");
                let w = radii
                    .iter()
                    .map(|&rw| if r < CUTOFF * rw { 2.0 * (-(r * r) / (rw * rw)).exp() } else { 0.0 })
                    .collect();
                sites.push([x, y]);
                couplings.push(g);
                weights.push(w);
            }
        }
        Ok(Self { radii: radii.to_vec(), sites, couplings, weights })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Windowed sums S(R_w) for every radius.
    pub fn partials(&self, k_perp: [f64; 2]) -> Vec<Complex64> {
        let nr = self.radii.len();
        let chunk = 4096;
        self.sites
            .par_chunks(chunk)
            .zip(self.couplings.par_chunks(chunk))
            .zip(self.weights.par_chunks(chunk))
            .map(|((sites, couplings), weights)| {
                let mut acc = vec![Complex64::new(0.0, 0.0); nr];
                for ((s, g), w) in sites.iter().zip(couplings).zip(weights) {
                    let c = g * (k_perp[0] * s[0] + k_perp[1] * s[1]).cos();
                    for (a, &wi) in acc.iter_mut().zip(w) {
                        *a += c * wi;
                    }
                }
                acc
            })
            .collect::<Vec<_>>()
            .into_iter()
            // fixed summation order keeps results independent of scheduling
            .fold(vec![Complex64::new(0.0, 0.0); nr], |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            })
    }

    pub fn sum(&self, k_perp: [f64; 2]) -> LatticeSum {
        let partials = self.partials(k_perp);
        let h: Vec<f64> = self.radii.iter().map(|r| 1.0 / (r * r)).collect();
        let n = h.len();
        let p = RICHARDSON_POINTS;
        let best = extrapolate_to_zero(&h[n - p..], &partials[n - p..]);
        let prev = extrapolate_to_zero(&h[n - p - 1..n - 1], &partials[n - p - 1..n - 1]);
        LatticeSum { value: best, error: (best - prev).norm(), radii: self.radii.clone(), partials }
    }
}

/// Lagrange interpolation through (h_i, y_i) evaluated at h = 0.
fn extrapolate_to_zero(h: &[f64], y: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..h.len() {
        let mut l = 1.0;
        for j in 0..h.len() {
            if i != j {
                l *= h[j] / (h[j] - h[i]);
            }
        }
        acc += y[i] * l;
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntralayerShift {
    /// Δ̃ in units of γ.
    pub value: f64,
    pub error: f64,
    pub radii: Vec<f64>,
    pub partials: Vec<f64>,
}

/// Collective Lamb shift Δ̃ = −Re Σ_{n≠0} 𝒢_{n0} of an infinite square array.
pub fn intralayer_shift(a: f64, radii: &[f64]) -> Result<IntralayerShift> {
    let lattice = WindowedLattice::new(a, radii)?;
    let s = lattice.sum([0.0, 0.0]);
    let partials: Vec<f64> = s.partials.iter().map(|c| -c.re).collect();
    let error = s.error;
    if error > MAX_ERROR {
        return Err(Error::LatticeSumNotConverged { estimate: error, partials });
    }
    Ok(IntralayerShift { value: -s.value.re, error, radii: s.radii, partials })
}
