//! Bright/dark reformulation of the dual array for well-separated layers.
//!
//! With bright state b = (e^{−ikL/2}, e^{ikL/2})/√2 (the driven combination)
//! and dark state d = (e^{−ikL/2}, −e^{ikL/2})/√2, the propagating-field
//! couplings give, with c = cos kL and s = sin kL,
//!
//!   H_bb = −δ + Γ̃sc − iΓ̃(1 + c²),   H_dd = −δ − Γ̃sc − iΓ̃s²,
//!
//! a coherent b–d exchange of magnitude Ω̃_d = Γ̃s², and a cross-decay Γ̃sc.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::linear_response::momentum::collective_linewidth;
use crate::params::K;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrightDarkModel {
    pub linewidth: f64,
    /// Ω̃_b = √2 Ω̃.
    pub omega_b: f64,
    /// Ω̃_d = Γ̃ sin²kL.
    pub omega_d: f64,
    pub bright_shift: f64,
    pub dark_shift: f64,
    pub bright_decay: f64,
    pub dark_decay: f64,
    pub cross_decay: f64,
}

impl BrightDarkModel {
    pub fn new(separation: f64, a: f64, omega: f64) -> Result<Self> {
        let gt = collective_linewidth(a)?;
        let (s, c) = (K * separation).sin_cos();
        Ok(Self {
            linewidth: gt,
            omega_b: SQRT_2 * omega,
            omega_d: gt * s * s,
            bright_shift: gt * s * c,
            dark_shift: -gt * s * c,
            bright_decay: gt * (1.0 + c * c),
            dark_decay: gt * s * s,
            cross_decay: gt * s * c,
        })
    }

    /// Amplitude equations H x = (Ω̃_b, 0) in the (b, d) basis.
    pub fn matrix(&self, delta: f64) -> Matrix2<Complex64> {
        let i = Complex64::i();
        let hbb = -delta + self.bright_shift - i * self.bright_decay;
        let hdd = -delta + self.dark_shift - i * self.dark_decay;
        let hbd = -i * self.omega_d - self.cross_decay;
        let hdb = i * self.omega_d + self.cross_decay;
        Matrix2::new(hbb, hbd, hdb, hdd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrightDarkResponse {
    pub model: BrightDarkModel,
    pub bright: Complex64,
    pub dark: Complex64,
    pub transmission: Complex64,
}

pub fn bright_dark_model(delta: f64, separation: f64, a: f64, omega: f64) -> Result<BrightDarkResponse> {
    if !(omega > 0.0) {
        return Err(Error::Precondition(format!("drive amplitude must be positive, got {omega}")));
    }
    let model = BrightDarkModel::new(separation, a, omega)?;
    let rhs = Vector2::new(Complex64::new(model.omega_b, 0.0), Complex64::new(0.0, 0.0));
    let x = model
        .matrix(delta)
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular bright/dark system".into()))?;
    let transmission = 1.0 + Complex64::i() * SQRT_2 * (model.linewidth / omega) * x[0];
    Ok(BrightDarkResponse { model, bright: x[0], dark: x[1], transmission })
}
