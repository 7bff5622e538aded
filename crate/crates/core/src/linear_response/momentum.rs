//! Lattice-Fourier couplings 𝒢̃_ℓ(k⊥) = Σ_n 𝒢(r_n, ℓ) e^{−ik⊥·r_n} = −Δ̃_ℓ + iΓ̃_ℓ.
//!
//! Evaluated in reciprocal space: each reciprocal vector q = (2π/a)(m_x, m_y)
//! contributes
//!
//!   iΓ̃ k (2k² − p²) / (2k² k_z) e^{ik_z ℓ},   p = |k⊥ − q|, k_z = √(k² − p²),
//!
//! which is oscillatory for propagating orders (p < k) and real, decaying as
//! e^{−κℓ}, for evanescent ones.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::K;

/// Default reciprocal-shell cap.
pub const DEFAULT_SHELLS: usize = 64;
const SHELL_TOL: f64 = 1e-12;
const EDGE_TOL: f64 = 1e-6;

/// Γ̃ = 3πγ / (k²a²).
pub fn collective_linewidth(a: f64) -> Result<f64> {
    check_spacing(a)?;
    Ok(3.0 * PI / (K * K * a * a))
}

pub(crate) fn check_spacing(a: f64) -> Result<()> {
    if !(a > 0.0) {
        return Err(Error::Precondition(format!("lattice spacing must be positive, got {a}")));
    }
    if a >= 1.0 {
        return Err(Error::Precondition(format!(
            "a = {a} λ: a ≥ λ opens diffraction orders at normal incidence"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumCoupling {
    pub k_perp: [f64; 2],
    pub ell: f64,
    pub delta_l: f64,
    pub gamma_l: f64,
    /// Outermost reciprocal shell included.
    pub truncation: usize,
    pub converged: bool,
}

impl MomentumCoupling {
    /// 𝒢̃ = −Δ̃_ℓ + iΓ̃_ℓ.
    pub fn complex(&self) -> Complex64 {
        Complex64::new(-self.delta_l, self.gamma_l)
    }
}

fn order_term(k_perp: [f64; 2], q: [f64; 2], ell: f64, gt: f64) -> Result<(Complex64, bool)> {
    let px = k_perp[0] - q[0];
    let py = k_perp[1] - q[1];
    let p2 = px * px + py * py;
    let dist = p2.sqrt() - K;
    if dist.abs() < EDGE_TOL * K {
        return Err(Error::DiffractionEdge { distance: dist });
    }
    let weight = gt * K * (2.0 * K * K - p2) / (2.0 * K * K);
    if p2 < K * K {
        let kz = (K * K - p2).sqrt();
        Ok((Complex64::i() * Complex64::from_polar(weight / kz, kz * ell), true))
    } else {
        let kappa = (p2 - K * K).sqrt();
        Ok((Complex64::new(weight / kappa * (-kappa * ell).exp(), 0.0), false))
    }
}

fn shell(m: i64) -> impl Iterator<Item = (i64, i64)> {
    let side = -m..=m;
    side.clone().flat_map(move |i| {
        let m = m;
        (-m..=m).filter_map(move |j| if i.abs() == m || j.abs() == m { Some((i, j)) } else { None })
    })
}

/// Full 𝒢̃_ℓ(k⊥) for ℓ > 0, summed shell by shell up to `max_shells`.
pub fn coupling_fourier(k_perp: [f64; 2], ell: f64, a: f64, max_shells: usize) -> Result<MomentumCoupling> {
    let gt = collective_linewidth(a)?;
    if ell == 0.0 {
        return Err(Error::UnsupportedRegularization(
            "the in-plane (ℓ = 0) real part diverges in reciprocal space; use intralayer_shift, \
             or linewidth_fourier for the imaginary part"
                .into(),
        ));
    }
    if !(ell > 0.0) {
        return Err(Error::Precondition(format!("layer separation must be positive, got {ell}")));
    }
    let b = 2.0 * PI / a;
    let mut total = Complex64::new(0.0, 0.0);
    let mut converged = false;
    let mut last = 0;
    for m in 0..=max_shells as i64 {
        let mut shell_sum = Complex64::new(0.0, 0.0);
        let mut any_propagating = false;
        for (i, j) in shell(m) {
            let (t, prop) = order_term(k_perp, [b * i as f64, b * j as f64], ell, gt)?;
            any_propagating |= prop;
            shell_sum += t;
        }
        total += shell_sum;
        last = m as usize;
        // a shell's contribution only bounds the tail once it lies entirely outside the light cone
        let inner = b * m as f64 - (k_perp[0].abs().max(k_perp[1].abs()));
        if !any_propagating && inner > K && shell_sum.norm() < SHELL_TOL {
            converged = true;
            break;
        }
    }
    Ok(MomentumCoupling {
        k_perp,
        ell,
        delta_l: -total.re,
        gamma_l: total.im,
        truncation: last,
        converged,
    })
}

/// Γ̃_ℓ(k⊥) alone: only propagating orders contribute, valid also at ℓ = 0.
pub fn linewidth_fourier(k_perp: [f64; 2], ell: f64, a: f64) -> Result<f64> {
    let gt = collective_linewidth(a)?;
    let b = 2.0 * PI / a;
    let kp = (k_perp[0] * k_perp[0] + k_perp[1] * k_perp[1]).sqrt();
    let reach = ((kp + K) / b).ceil() as i64 + 1;
    let mut total = 0.0;
    for i in -reach..=reach {
        for j in -reach..=reach {
            let (t, prop) = order_term(k_perp, [b * i as f64, b * j as f64], ell, gt)?;
            if prop {
                total += t.im;
            }
        }
    }
    Ok(total)
}

/// Radiative q = 0 part of Γ̃_0(k⊥): Γ̃ (2k² − k⊥²) / (2k k_z).
pub fn radiative_linewidth(k_perp: [f64; 2], a: f64) -> Result<f64> {
    let gt = collective_linewidth(a)?;
    let kp2 = k_perp[0] * k_perp[0] + k_perp[1] * k_perp[1];
    if kp2 >= K * K {
        return Err(Error::Domain("transverse momentum outside the light cone".into()));
    }
    Ok(gt * (2.0 * K * K - kp2) / (2.0 * K * (K * K - kp2).sqrt()))
}
