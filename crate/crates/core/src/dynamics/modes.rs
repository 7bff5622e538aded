//! Sub- and superradiant collective modes after a photon detection.
//!
//! Without drive, the single-excitation amplitudes relax onto the
//! least-damped collective mode |−⟩; the part of the initial state orthogonal
//! to it defines |+⟩. Driven projections c±(t) = ⟨±|ψ(t)⟩ then follow
//! c(t) = (c(0) + ig/ν) e^{νt} − ig/ν with ν = iΔ − γ.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::hamiltonian::EffectiveHamiltonian;
use crate::dynamics::propagate::DormandPrince;
use crate::error::{Error, Result};

/// Below this γ_fast/γ_slow the two modes are not cleanly separable.
pub const MIN_RATE_RATIO: f64 = 3.0;
/// Relaxation stops once t exceeds this many slow lifetimes.
pub const SETTLE_LIFETIMES: f64 = 10.0;
const MAX_SETTLE_TIME: f64 = 1e6;
const FIT_TOLERANCE: f64 = 1e-2;

#[derive(Debug, Clone)]
pub struct ModeExtraction {
    /// Long-lived mode |−⟩.
    pub minus: DVector<Complex64>,
    /// Short-lived mode |+⟩, orthogonal to |−⟩.
    pub plus: DVector<Complex64>,
    /// −Im⟨∓|H₁|∓⟩ for each mode.
    pub gamma_minus: f64,
    pub gamma_plus: f64,
    pub settle_time: f64,
    pub warning: Option<String>,
}

fn rayleigh_decay(h1: &DMatrix<Complex64>, v: &DVector<Complex64>) -> f64 {
    -v.dotc(&(h1 * v)).im
}

/// Relaxes the single-sector component of `initial` under H₁ (drive ignored).
///
/// `settle` fixes the relaxation time; `None` runs until
/// t ≥ 10/γ_inst with γ_inst the instantaneous amplitude decay rate.
pub fn extract_modes(h: &EffectiveHamiltonian, initial: &DVector<Complex64>, settle: Option<f64>) -> Result<ModeExtraction> {
    let n = h.atoms();
    if initial.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: initial.len() });
    }
    let norm0 = initial.norm();
    if !(norm0 > 0.0) {
        return Err(Error::Precondition("post-detection state has no single-excitation component".into()));
    }
    let h1 = &h.single;
    let i = Complex64::i();
    let f = |_: f64, x: &DVector<Complex64>| (h1 * x) * (-i);
    let mut rk = DormandPrince::new(1e-10);
    let mut psi = initial / Complex64::new(norm0, 0.0);
    let mut t = 0.0;
    let mut target = settle.unwrap_or(f64::INFINITY);
    if let Some(s) = settle {
        if !(s > 0.0) {
            return Err(Error::Precondition(format!("settle time must be positive, got {s}")));
        }
    }
    let mut chunk: f64 = 1.0;
    while t < target {
        let dt = chunk.min(target - t);
        let next = rk.integrate(f, t, &psi, t + dt)?;
        let nn = next.norm();
        if !(nn > 1e-300) {
            return Err(Error::NormUnderflow { time: t + dt });
        }
        let rate = -nn.ln() / dt;
        psi = next / Complex64::new(nn, 0.0);
        t += dt;
        if settle.is_none() {
            target = if rate > 0.0 { SETTLE_LIFETIMES / rate } else { MAX_SETTLE_TIME };
            target = target.min(MAX_SETTLE_TIME);
            chunk = (0.5 * t).max(1.0);
        }
    }
    let minus = psi;
    let u = initial / Complex64::new(norm0, 0.0);
    let residual = &u - &minus * minus.dotc(&u);
    let rn = residual.norm();
    if rn < 1e-12 {
        return Err(Error::Numerical("initial state already lies in the long-lived mode".into()));
    }
    let plus = residual / Complex64::new(rn, 0.0);
    let gamma_minus = rayleigh_decay(h1, &minus);
    let gamma_plus = rayleigh_decay(h1, &plus);
    let warning = (gamma_plus < MIN_RATE_RATIO * gamma_minus).then(|| {
        format!("decay rates {gamma_plus:.4e} and {gamma_minus:.4e} differ by less than a factor {MIN_RATE_RATIO}")
    });
    Ok(ModeExtraction { minus, plus, gamma_minus, gamma_plus, settle_time: t, warning })
}

/// Projections ⟨m|ψ(t)⟩ for each mode under dψ/dt = −i(H₁ψ − Ω c₀).
pub fn driven_mode_series(
    h: &EffectiveHamiltonian,
    initial: &DVector<Complex64>,
    c0: Complex64,
    modes: &[&DVector<Complex64>],
    times: &[f64],
) -> Result<Vec<Vec<Complex64>>> {
    let n = h.atoms();
    if initial.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: initial.len() });
    }
    let i = Complex64::i();
    let source = &h.drive * c0;
    let f = |_: f64, x: &DVector<Complex64>| (&h.single * x - &source) * (-i);
    let mut rk = DormandPrince::new(1e-10);
    let mut out = vec![Vec::with_capacity(times.len()); modes.len()];
    let mut y = initial.clone();
    let mut t = 0.0;
    for &tn in times {
        if tn < t {
            return Err(Error::Precondition("time grid must be sorted and non-negative".into()));
        }
        y = rk.integrate(f, t, &y, tn)?;
        t = tn;
        for (series, m) in out.iter_mut().zip(modes) {
            series.push(m.dotc(&y));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeFit {
    pub delta: f64,
    pub gamma: f64,
    pub g: Complex64,
    pub c0: Complex64,
    /// ‖data − model‖ / ‖data‖.
    pub relative_residual: f64,
}

impl ModeFit {
    pub fn nu(&self) -> Complex64 {
        Complex64::new(-self.gamma, self.delta)
    }

    pub fn plateau(&self) -> Complex64 {
        -Complex64::i() * self.g / self.nu()
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let b = self.plateau();
        (self.c0 - b) * (self.nu() * t).exp() + b
    }
}

/// Best (A, B) for c ≈ A e^{νt} + B and the residual vector.
fn project(nu: Complex64, times: &[f64], data: &[Complex64]) -> (Complex64, Complex64, Vec<Complex64>) {
    let e: Vec<Complex64> = times.iter().map(|&t| (nu * t).exp()).collect();
    let one = Complex64::new(1.0, 0.0);
    let mut gram = Matrix2::<Complex64>::zeros();
    let mut rhs = Vector2::<Complex64>::zeros();
    for (ej, cj) in e.iter().zip(data) {
        gram[(0, 0)] += ej.norm_sqr();
        gram[(0, 1)] += ej.conj();
        gram[(1, 0)] += *ej;
        gram[(1, 1)] += one;
        rhs[0] += ej.conj() * cj;
        rhs[1] += *cj;
    }
    let coef = gram.lu().solve(&rhs).unwrap_or_else(Vector2::zeros);
    let res = e.iter().zip(data).map(|(ej, cj)| cj - coef[0] * ej - coef[1]).collect();
    (coef[0], coef[1], res)
}

fn cost(r: &[Complex64]) -> f64 {
    r.iter().map(|z| z.norm_sqr()).sum()
}

/// Nonlinear least squares for (Δ, γ, g, c(0)) on a uniformly sampled series.
///
/// Prony's difference step seeds ν; Levenberg–Marquardt then refines ν
/// with the linear coefficients projected out.
pub fn fit_mode_parameters(times: &[f64], data: &[Complex64]) -> Result<ModeFit> {
    let m = times.len();
    if m != data.len() {
        return Err(Error::DimensionMismatch { expected: m, found: data.len() });
    }
    if m < 4 {
        return Err(Error::Precondition("mode fit needs at least four samples".into()));
    }
    let h = times[1] - times[0];
    if !(h > 0.0) || times.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0)) {
        return Err(Error::Precondition("mode fit needs a uniform, increasing time grid".into()));
    }
    let scale = cost(data).sqrt();
    if !(scale > 0.0) {
        return Err(Error::Precondition("mode fit on an identically zero series".into()));
    }
    let diffs: Vec<Complex64> = data.windows(2).map(|w| w[1] - w[0]).collect();
    let (mut num, mut den) = (Complex64::new(0.0, 0.0), 0.0);
    for w in diffs.windows(2) {
        num += w[1] * w[0].conj();
        den += w[0].norm_sqr();
    }
    let z = if den > 0.0 { num / den } else { Complex64::new(0.5, 0.0) };
    let mut nu = if z.norm() > 0.0 { z.ln() / h } else { Complex64::new(-1.0 / h, 0.0) };

    let mut current = cost(&project(nu, times, data).2);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        let step = 1e-7 * nu.norm().max(1e-3 / times[m - 1].max(h));
        let r0 = project(nu, times, data).2;
        let rx = project(nu + step, times, data).2;
        let ry = project(nu + Complex64::new(0.0, step), times, data).2;
        // real Jacobian columns for (Re ν, Im ν)
        let mut jtj = Matrix2::<f64>::zeros();
        let mut jtr = Vector2::<f64>::zeros();
        for ((a, b), c) in r0.iter().zip(&rx).zip(&ry) {
            let jx = (b - a) / step;
            let jy = (c - a) / step;
            jtj[(0, 0)] += jx.norm_sqr();
            jtj[(1, 1)] += jy.norm_sqr();
            let off = (jx.conj() * jy).re;
            jtj[(0, 1)] += off;
            jtj[(1, 0)] += off;
            jtr[0] += (jx.conj() * a).re;
            jtr[1] += (jy.conj() * a).re;
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut damped = jtj;
            damped[(0, 0)] *= 1.0 + lambda;
            damped[(1, 1)] *= 1.0 + lambda;
            let Some(delta) = damped.lu().solve(&(-jtr)) else { break };
            let trial = nu + Complex64::new(delta[0], delta[1]);
            let c = cost(&project(trial, times, data).2);
            if c < current {
                let rel = (current - c) / current.max(1e-300);
                nu = trial;
                current = c;
                lambda = (lambda * 0.3).max(1e-12);
                improved = rel > 1e-15;
                break;
            }
            lambda *= 10.0;
        }
        if !improved || current.sqrt() < 1e-15 * scale {
            break;
        }
    }
    let (a, b, res) = project(nu, times, data);
    let relative_residual = cost(&res).sqrt() / scale;
    if relative_residual > FIT_TOLERANCE {
        return Err(Error::FitFailure { relative_residual });
    }
    Ok(ModeFit {
        delta: nu.im,
        gamma: -nu.re,
        g: Complex64::i() * nu * b,
        c0: a + b,
        relative_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(fit: &ModeFit, n: usize, dt: f64) -> (Vec<f64>, Vec<Complex64>) {
        let t: Vec<f64> = (0..n).map(|j| j as f64 * dt).collect();
        let c = t.iter().map(|&x| fit.eval(x)).collect();
        (t, c)
    }

    #[test]
    fn recovers_synthetic_parameters() {
        let truth = ModeFit {
            delta: 0.31,
            gamma: 0.045,
            g: Complex64::new(0.02, -0.013),
            c0: Complex64::new(0.7, 0.2),
            relative_residual: 0.0,
        };
        let (t, c) = synthetic(&truth, 400, 0.25);
        let fit = fit_mode_parameters(&t, &c).unwrap();
        assert!((fit.delta - truth.delta).abs() < 1e-6);
        assert!((fit.gamma - truth.gamma).abs() < 1e-6);
        assert!((fit.g - truth.g).norm() < 1e-6);
        assert!((fit.c0 - truth.c0).norm() < 1e-6);
        assert!((fit.eval(1e4) - fit.plateau()).norm() < 1e-12);
    }

    #[test]
    fn rejects_non_exponential_data() {
        let t: Vec<f64> = (0..200).map(|j| j as f64 * 0.1).collect();
        let c: Vec<Complex64> = t.iter().map(|&x| Complex64::new((3.0 * x).sin() * (0.7 * x).cos(), 0.0)).collect();
        assert!(matches!(fit_mode_parameters(&t, &c), Err(Error::FitFailure { .. })));
    }
}
