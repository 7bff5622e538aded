//! Adaptive Dormand–Prince 5(4) integration of linear Schrödinger-type equations.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::dynamics::basis::QuantumState;
use crate::dynamics::hamiltonian::EffectiveHamiltonian;
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-8;

type Vector = DVector<Complex64>;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Step-size controlled integrator for dy/dt = f(t, y) on complex vectors.
///
/// The local error of each step is kept below `tol · h · max(‖y‖, floor)`, i.e.
/// `tol` per unit time relative to the state norm.
#[derive(Debug, Clone)]
pub struct DormandPrince {
    pub tol: f64,
    pub max_step: f64,
    /// Absolute norm floor below which errors are measured absolutely.
    pub floor: f64,
    h: f64,
}

impl DormandPrince {
    pub fn new(tol: f64) -> Self {
        Self { tol, max_step: f64::INFINITY, floor: 1e-300, h: 0.0 }
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step;
        self
    }

    /// One trial step; returns (5th-order solution, error norm, derivative at the end).
    pub fn trial<F>(&self, f: &F, t: f64, y: &Vector, k1: &Vector, h: f64) -> (Vector, f64, Vector)
    where
        F: Fn(f64, &Vector) -> Vector,
    {
        let mut k: Vec<Vector> = Vec::with_capacity(7);
        k.push(k1.clone());
        for s in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = A[s][j];
                if a != 0.0 {
                    ys.axpy(Complex64::new(h * a, 0.0), kj, Complex64::new(1.0, 0.0));
                }
            }
            k.push(f(t + C[s] * h, &ys));
        }
        let mut y5 = y.clone();
        let mut err = DVector::zeros(y.len());
        for s in 0..7 {
            if B5[s] != 0.0 {
                y5.axpy(Complex64::new(h * B5[s], 0.0), &k[s], Complex64::new(1.0, 0.0));
            }
            let e = B5[s] - B4[s];
            if e != 0.0 {
                err.axpy(Complex64::new(h * e, 0.0), &k[s], Complex64::new(1.0, 0.0));
            }
        }
        let scale = self.tol * h.abs().max(1e-3) * y.norm().max(y5.norm()).max(self.floor);
        let last = k.pop().expect("seven stages");
        (y5, err.norm() / scale, last)
    }

    /// Integrates from t0 to t1, returning y(t1).
    pub fn integrate<F>(&mut self, f: F, t0: f64, y0: &Vector, t1: f64) -> Result<Vector>
    where
        F: Fn(f64, &Vector) -> Vector,
    {
        let mut t = t0;
        let mut y = y0.clone();
        if t1 <= t0 {
            return Ok(y);
        }
        let mut k1 = f(t, &y);
        if self.h <= 0.0 {
            self.h = initial_step(&y, &k1, self.tol);
        }
        while t < t1 {
            let (new_t, new_y, new_k) = self.step(&f, t, &y, &k1, t1)?;
            t = new_t;
            y = new_y;
            k1 = new_k;
        }
        Ok(y)
    }

    /// One accepted step not exceeding `t_stop`.
    pub fn step<F>(&mut self, f: &F, t: f64, y: &Vector, k1: &Vector, t_stop: f64) -> Result<(f64, Vector, Vector)>
    where
        F: Fn(f64, &Vector) -> Vector,
    {
        if self.h <= 0.0 {
            self.h = initial_step(y, k1, self.tol);
        }
        loop {
            let remaining = t_stop - t;
            let h = self.h.min(self.max_step).min(remaining);
            let (y5, err, k7) = self.trial(f, t, y, k1, h);
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                if h < remaining || factor > 1.0 {
                    self.h = (h * factor).max(self.h.min(h));
                }
                let new_t = if h == remaining { t_stop } else { t + h };
                return Ok((new_t, y5, k7));
            }
            self.h = h * factor;
            if self.h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::Stiffness { time: t, step: self.h });
            }
        }
    }
}

fn initial_step(y: &Vector, dy: &Vector, tol: f64) -> f64 {
    let yn = y.norm().max(1e-300);
    let dn = dy.norm();
    if dn == 0.0 {
        return 1.0;
    }
    (0.1 * yn / dn * tol.powf(0.2).max(1e-3)).clamp(1e-8, 1.0)
}

/// exp(−iHt) applied to a state, for t ≥ 0.
pub fn evolve(state: &QuantumState, h: &EffectiveHamiltonian, t: f64, tol: f64) -> Result<QuantumState> {
    if t < 0.0 {
        return Err(Error::Precondition(format!("evolution time must be non-negative, got {t}")));
    }
    if state.basis != h.basis {
        return Err(Error::DimensionMismatch { expected: h.basis.dim(), found: state.basis.dim() });
    }
    let i = Complex64::i();
    let mut rk = DormandPrince::new(tol);
    let y = rk.integrate(|_, x| h.apply(x) * (-i), 0.0, &state.amplitudes, t)?;
    QuantumState::from_vector(state.basis, y)
}

/// Values at each requested (sorted, non-negative) time.
pub fn evolve_grid(state: &QuantumState, h: &EffectiveHamiltonian, times: &[f64], tol: f64) -> Result<Vec<QuantumState>> {
    let i = Complex64::i();
    let mut rk = DormandPrince::new(tol);
    let mut t = 0.0;
    let mut y = state.amplitudes.clone();
    let mut out = Vec::with_capacity(times.len());
    for &tn in times {
        if tn < t {
            return Err(Error::Precondition("time grid must be sorted and non-negative".into()));
        }
        y = rk.integrate(|_, x| h.apply(x) * (-i), t, &y, tn)?;
        t = tn;
        out.push(QuantumState::from_vector(state.basis, y.clone())?);
    }
    Ok(out)
}
