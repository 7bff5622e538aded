//! Transmission, transparency and group delay of infinite single and dual arrays.
//!
//! Detunings are `delta = Δ − Δ̃`, measured from the collectively shifted
//! single-array resonance.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::linear_response::momentum::{collective_linewidth, coupling_fourier, DEFAULT_SHELLS};
use crate::params::K;

const POLE_TOL: f64 = 1e-8;
const DELAY_MIN_AMPLITUDE: f64 = 1e-8;
/// Finite-difference step in units of Γ̃.
pub const DELAY_STEP: f64 = 1e-4;

/// Single-array (t, r) with r = −iΓ̃/(delta + iΓ̃), t = 1 + r.
pub fn single_array_tr(delta: f64, a: f64) -> Result<(Complex64, Complex64)> {
    let gt = collective_linewidth(a)?;
    let r = -Complex64::i() * gt / Complex64::new(delta, gt);
    Ok((1.0 + r, r))
}

/// How the interlayer coupling 𝒢̃_L(0) is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum InterlayerModel {
    /// Reciprocal sum including evanescent orders.
    Full { shells: usize },
    /// Propagating order only: Δ̃_L = Γ̃ sin kL, Γ̃_L = Γ̃ cos kL.
    Propagating,
}

impl Default for InterlayerModel {
    fn default() -> Self {
        InterlayerModel::Full { shells: DEFAULT_SHELLS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum DualForm {
    TwoResonance(InterlayerModel),
    /// t²/(1 − r² e^{2ikL}); exact only for propagating couplings.
    FabryPerot,
}

/// Symmetric/antisymmetric layer combinations of a dual array at k⊥ = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimerModel {
    pub linewidth: f64,
    pub delta_l: f64,
    pub gamma_l: f64,
    /// Mode shifts relative to Δ̃: (+Δ̃_L, −Δ̃_L).
    pub delta_pm: [f64; 2],
    /// Γ̃± = Γ̃ ± Γ̃_L.
    pub gamma_pm: [f64; 2],
    /// Drive couplings √2 Ω̃ cos(kL/2), √2 Ω̃ sin(kL/2).
    pub omega_pm: [f64; 2],
}

impl DimerModel {
    pub fn new(separation: f64, a: f64, model: InterlayerModel, omega: f64) -> Result<Self> {
        let gt = collective_linewidth(a)?;
        let kl = K * separation;
        let (delta_l, gamma_l) = match model {
            InterlayerModel::Propagating => (gt * kl.sin(), gt * kl.cos()),
            InterlayerModel::Full { shells } => {
                let c = coupling_fourier([0.0, 0.0], separation, a, shells)?;
                (c.delta_l, c.gamma_l)
            }
        };
        Ok(Self {
            linewidth: gt,
            delta_l,
            gamma_l,
            delta_pm: [delta_l, -delta_l],
            gamma_pm: match model {
                // 1 − cos kL without cancellation near kL = 2nπ
                InterlayerModel::Propagating => [gt + gamma_l, 2.0 * gt * (kl / 2.0).sin().powi(2)],
                InterlayerModel::Full { .. } => [gt + gamma_l, gt - gamma_l],
            },
            omega_pm: [SQRT_2 * omega * (kl / 2.0).cos(), SQRT_2 * omega * (kl / 2.0).sin()],
        })
    }

    /// T = 1 − i[Γ̃₊/(δ − Δ̃_L + iΓ̃₊) + Γ̃₋/(δ + Δ̃_L + iΓ̃₋)].
    pub fn transmission(&self, delta: f64) -> Complex64 {
        let i = Complex64::i();
        let [gp, gm] = self.gamma_pm;
        1.0 - i * (gp / Complex64::new(delta - self.delta_l, gp) + gm / Complex64::new(delta + self.delta_l, gm))
    }
}

pub fn dual_transmission(delta: f64, separation: f64, a: f64, form: DualForm) -> Result<Complex64> {
    match form {
        DualForm::TwoResonance(model) => Ok(DimerModel::new(separation, a, model, 1.0)?.transmission(delta)),
        DualForm::FabryPerot => {
            let (t, r) = single_array_tr(delta, a)?;
            Ok(t * t / (1.0 - r * r * Complex64::from_polar(1.0, 2.0 * K * separation)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub delta: f64,
    pub transmission: Complex64,
}

/// Perfect-transmission detuning delta* = −Γ̃ tan kL and T there (propagating couplings).
pub fn resonance_curve(separation: f64, a: f64) -> Result<Resonance> {
    let gt = collective_linewidth(a)?;
    let kl = K * separation;
    if kl.cos().abs() < POLE_TOL {
        return Err(Error::TanPole { kl });
    }
    let delta = -gt * kl.tan();
    // At kL = nπ the antisymmetric mode decouples (Γ̃₋ = 0) and the resonance
    // has zero width; T there is defined by continuity along the curve.
    let transmission = if kl.sin().abs() < POLE_TOL {
        -Complex64::from_polar(1.0, -2.0 * kl)
    } else {
        dual_transmission(delta, separation, a, DualForm::TwoResonance(InterlayerModel::Propagating))?
    };
    Ok(Resonance { delta, transmission })
}

/// Im[(1/f) df/dx] by a five-point central stencil.
pub fn group_delay<F>(f: F, x: f64, step: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let f0 = f(x)?;
    if f0.norm() < DELAY_MIN_AMPLITUDE {
        return Err(Error::UndefinedDelay { magnitude: f0.norm() });
    }
    let d = (-f(x + 2.0 * step)? + 8.0 * f(x + step)? - 8.0 * f(x - step)? + f(x - 2.0 * step)?) / (12.0 * step);
    Ok((d / f0).im)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum DelaySystem {
    /// Evaluated on the reflected amplitude, whose phase derivative equals the
    /// transmitted one wherever t ≠ 0 and stays defined at t = 0.
    Single,
    Dual { separation: f64, form: DualForm },
}

pub fn delay_time(delta: f64, a: f64, system: DelaySystem) -> Result<f64> {
    let gt = collective_linewidth(a)?;
    let h = DELAY_STEP * gt;
    match system {
        DelaySystem::Single => group_delay(|d| single_array_tr(d, a).map(|(_, r)| r), delta, h),
        DelaySystem::Dual { separation, form } => {
            if let DualForm::TwoResonance(model) = form {
                let m = DimerModel::new(separation, a, model, 1.0)?;
                group_delay(|d| Ok(m.transmission(d)), delta, h)
            } else {
                group_delay(|d| dual_transmission(d, separation, a, form), delta, h)
            }
        }
    }
}

/// τ = |r|²/Γ̃.
pub fn single_delay_closed_form(delta: f64, a: f64) -> Result<f64> {
    let gt = collective_linewidth(a)?;
    Ok(gt / (delta * delta + gt * gt))
}

/// τ = 2Γ̃/delta*² on the transparency curve.
pub fn resonant_delay_closed_form(separation: f64, a: f64) -> Result<f64> {
    let gt = collective_linewidth(a)?;
    let res = resonance_curve(separation, a)?;
    Ok(2.0 * gt / (res.delta * res.delta))
}

/// Phase of the on-resonance transmission, π − 2kL wrapped to (−π, π].
pub fn resonant_phase(separation: f64) -> f64 {
    wrap_phase(PI - 2.0 * K * separation)
}

pub fn wrap_phase(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_array_limits() {
        let (t, r) = single_array_tr(0.0, 0.6).unwrap();
        assert!((r + 1.0).norm() < 1e-15 && t.norm() < 1e-15);
        let gt = collective_linewidth(0.6).unwrap();
        let (_, r) = single_array_tr(gt, 0.6).unwrap();
        assert!((r.norm_sqr() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn transparency_points() {
        let res = resonance_curve(1.0, 0.6).unwrap();
        assert!(res.delta.abs() < 1e-12);
        assert!((res.transmission + 1.0).norm() < 1e-9);
        let gt = collective_linewidth(0.6).unwrap();
        let res = resonance_curve(0.125, 0.6).unwrap();
        assert!((res.delta + gt).abs() < 1e-12);
        assert!(matches!(resonance_curve(0.25, 0.6), Err(Error::TanPole { .. })));
    }

    #[test]
    fn single_delay_on_resonance() {
        let gt = collective_linewidth(0.6).unwrap();
        let tau = delay_time(0.0, 0.6, DelaySystem::Single).unwrap();
        assert!((tau - 1.0 / gt).abs() < 1e-6 / gt);
        for d in [-1.0, 0.4, 2.5] {
            let tau = delay_time(d, 0.6, DelaySystem::Single).unwrap();
            assert!((tau / single_delay_closed_form(d, 0.6).unwrap() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn dual_delay_on_transparency_curve() {
        for l in [1.45, 1.55, 1.6, 2.02] {
            let res = resonance_curve(l, 0.6).unwrap();
            let tau = delay_time(
                res.delta,
                0.6,
                DelaySystem::Dual { separation: l, form: DualForm::FabryPerot },
            )
            .unwrap();
            let closed = resonant_delay_closed_form(l, 0.6).unwrap();
            assert!((tau / closed - 1.0).abs() < 0.01, "L={l}: {tau} vs {closed}");
        }
    }

    #[test]
    fn small_separation_reflection_delays() {
        let kl: f64 = 0.3;
        let l = kl / K;
        let m = DimerModel::new(l, 0.6, InterlayerModel::Full { shells: 400 }, 1.0).unwrap();
        assert!(((m.gamma_pm[1] / (m.linewidth / 2.0 * kl * kl)) - 1.0).abs() < 0.02);
        for (pos, g) in [(m.delta_l, m.gamma_pm[0]), (-m.delta_l, m.gamma_pm[1])] {
            let tau = group_delay(|d| Ok(m.transmission(d)), pos, DELAY_STEP * m.linewidth).unwrap();
            let r2 = 1.0 - m.transmission(pos).norm_sqr();
            assert!((tau / (r2 / g) - 1.0).abs() < 0.01, "{tau} vs {}", r2 / g);
        }
    }

    #[test]
    fn subradiant_width_scaling() {
        // Γ̃₋ ∝ (kL)² as kL → 0
        let pts: Vec<(f64, f64)> = [0.02, 0.04, 0.08]
            .iter()
            .map(|&kl: &f64| {
                let m = DimerModel::new(kl / K, 0.6, InterlayerModel::Propagating, 1.0).unwrap();
                (kl.ln(), m.gamma_pm[1].ln())
            })
            .collect();
        let slope = (pts[2].1 - pts[0].1) / (pts[2].0 - pts[0].0);
        assert!((slope - 2.0).abs() < 0.02, "{slope}");
    }

    #[test]
    fn undefined_delay() {
        // t = 0 exactly at delta = 0
        let e = group_delay(|d| single_array_tr(d, 0.6).map(|(t, _)| t), 0.0, 1e-4).unwrap_err();
        assert!(matches!(e, Error::UndefinedDelay { .. }));
    }

    proptest! {
        #[test]
        fn lossless_single(delta in -50.0f64..50.0) {
            let (t, r) = single_array_tr(delta, 0.6).unwrap();
            prop_assert!((t.norm_sqr() + r.norm_sqr() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn two_resonance_equals_fabry_perot(delta in -5.0f64..5.0, l in 0.05f64..4.0, a in 0.3f64..0.95) {
            let tr = dual_transmission(delta, l, a, DualForm::TwoResonance(InterlayerModel::Propagating)).unwrap();
            let fp = dual_transmission(delta, l, a, DualForm::FabryPerot).unwrap();
            prop_assert!((tr - fp).norm() < 1e-10);
            prop_assert!(tr.norm() <= 1.0 + 1e-12);
        }

        #[test]
        fn full_model_bounded(delta in -5.0f64..5.0, l in 0.1f64..3.0) {
            let m = DimerModel::new(l, 0.6, InterlayerModel::default(), 1.0).unwrap();
            prop_assert!((m.gamma_pm[0] + m.gamma_pm[1] - 2.0 * m.linewidth).abs() < 1e-14);
            prop_assert!(m.gamma_pm.iter().all(|&g| g >= -1e-14));
            prop_assert!(m.transmission(delta).norm() <= 1.0 + 1e-12);
        }

        #[test]
        fn unit_transmission_on_curve(kl in 0.01f64..(6.0 * PI)) {
            prop_assume!(kl.cos().abs() > 1e-3 && kl.sin().abs() > 1e-3);
            let res = resonance_curve(kl / K, 0.6).unwrap();
            prop_assert!((res.transmission.norm() - 1.0).abs() < 1e-9);
            let dphi = wrap_phase(res.transmission.arg() - resonant_phase(kl / K));
            prop_assert!(dphi.abs() < 1e-9);
        }
    }
}
