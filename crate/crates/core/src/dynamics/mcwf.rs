//! Monte-Carlo wave-function trajectories (waiting-time unraveling).
//!
//! Each trajectory draws r ∈ (0, 1), evolves the unnormalized state under the
//! non-Hermitian Hamiltonian until ‖ψ‖² = r, applies a channel chosen with
//! probability ∝ ‖L_k ψ‖², renormalizes and repeats. Trajectory `j` of a run
//! with seed `s` uses ChaCha8 stream `j` of key `s`, so results do not depend
//! on scheduling or thread count.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::dynamics::basis::QuantumState;
use crate::dynamics::hamiltonian::EffectiveHamiltonian;
use crate::dynamics::jumps::JumpOperators;
use crate::dynamics::propagate::DormandPrince;
use crate::error::{Error, Result};

const NORM_FLOOR: f64 = 1e-280;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub time: f64,
    pub channel: usize,
    /// Norm² of the unnormalized state just before the jump.
    pub norm: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub jumps: Vec<JumpRecord>,
    /// Normalized states at the requested sample times.
    pub snapshots: Vec<QuantumState>,
}

impl Trajectory {
    /// One JSON object per line: time, channel, norm.
    pub fn write_jumps<W: Write>(&self, mut out: W) -> Result<()> {
        for j in &self.jumps {
            serde_json::to_writer(&mut out, j)?;
            writeln!(out)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct McwfOptions {
    pub tol: f64,
    /// Cap on the integrator step (resolves the norm-crossing time).
    pub max_step: f64,
}

impl Default for McwfOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_step: 0.05 }
    }
}

pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Single trajectory from `initial` (normalized internally), sampled at sorted `times`.
pub fn mcwf_run(
    h: &EffectiveHamiltonian,
    jumps: &JumpOperators,
    initial: &QuantumState,
    times: &[f64],
    rng: &mut ChaCha8Rng,
    options: McwfOptions,
) -> Result<Trajectory> {
    if initial.basis != h.basis {
        return Err(Error::DimensionMismatch { expected: h.basis.dim(), found: initial.basis.dim() });
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::Precondition("sample times must be sorted and non-negative".into()));
    }
    let basis = h.basis;
    let i = Complex64::i();
    let f = |_: f64, x: &DVector<Complex64>| h.apply(x) * (-i);
    let mut rk = DormandPrince::new(options.tol).with_max_step(options.max_step);
    let mut y = initial.normalized()?.amplitudes;
    let mut t = 0.0;
    let mut threshold: f64 = rng.random::<f64>();
    let mut k1 = f(t, &y);
    let mut jumps_out = Vec::new();
    let mut snapshots = Vec::with_capacity(times.len());
    let t_end = times.last().copied().unwrap_or(0.0);
    let mut next_sample = 0;
    while next_sample < times.len() && times[next_sample] <= t {
        snapshots.push(QuantumState::from_vector(basis, &y / Complex64::new(y.norm(), 0.0))?);
        next_sample += 1;
    }
    while t < t_end {
        let stop = times[next_sample];
        let (t_new, y_new, k_new) = rk.step(&f, t, &y, &k1, stop)?;
        let n_new = y_new.norm_squared();
        if n_new < NORM_FLOOR {
            return Err(Error::NormUnderflow { time: t_new });
        }
        if n_new > threshold {
            t = t_new;
            y = y_new;
            k1 = k_new;
        } else {
            // locate the crossing inside [t, t_new] by bisection on the step length
            let (mut lo, mut hi) = (0.0, t_new - t);
            let mut y_hit = y_new;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let (ym, _, _) = rk.trial(&f, t, &y, &k1, mid);
                if ym.norm_squared() > threshold {
                    lo = mid;
                } else {
                    hi = mid;
                    y_hit = ym;
                }
                if hi - lo < 1e-12 {
                    break;
                }
            }
            t += hi;
            let norm = y_hit.norm_squared();
            let weights = jumps.channel_weights(&basis, &y_hit);
            let total: f64 = weights.iter().sum();
            if !(total > 0.0) {
                return Err(Error::Numerical(format!("no decay channel available at t = {t}")));
            }
            let mut pick = rng.random::<f64>() * total;
            let mut channel = weights.len() - 1;
            for (k, w) in weights.iter().enumerate() {
                if pick < *w {
                    channel = k;
                    break;
                }
                pick -= w;
            }
            let jumped = jumps.apply(&basis, channel, &y_hit);
            y = &jumped / Complex64::new(jumped.norm(), 0.0);
            k1 = f(t, &y);
            jumps_out.push(JumpRecord { time: t, channel, norm });
            threshold = rng.random::<f64>();
        }
        while next_sample < times.len() && times[next_sample] <= t {
            snapshots.push(QuantumState::from_vector(basis, &y / Complex64::new(y.norm(), 0.0))?);
            next_sample += 1;
        }
    }
    Ok(Trajectory { jumps: jumps_out, snapshots })
}

/// Mean and standard error of per-trajectory observable vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub trajectories: usize,
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
}

impl EnsembleStats {
    /// Reduction in sample order; deterministic for fixed inputs.
    pub fn from_samples(samples: &[Vec<f64>]) -> Result<Self> {
        let m = samples.len();
        if m < 2 {
            return Err(Error::Precondition("need at least two samples for error bars".into()));
        }
        let d = samples[0].len();
        let mut mean = vec![0.0; d];
        for s in samples {
            for (a, b) in mean.iter_mut().zip(s) {
                *a += b;
            }
        }
        mean.iter_mut().for_each(|a| *a /= m as f64);
        let mut var = vec![0.0; d];
        for s in samples {
            for ((v, b), mu) in var.iter_mut().zip(s).zip(&mean) {
                *v += (b - mu) * (b - mu);
            }
        }
        let std_err = var.iter().map(|v| (v / ((m - 1) as f64) / m as f64).sqrt()).collect();
        Ok(Self { trajectories: m, mean, std_err })
    }
}

/// Runs `count` trajectories in parallel and evaluates `observable` on each
/// one; results are returned in trajectory order.
pub fn mcwf_ensemble<O, T>(
    h: &EffectiveHamiltonian,
    jumps: &JumpOperators,
    initial: &QuantumState,
    times: &[f64],
    seed: u64,
    count: usize,
    options: McwfOptions,
    observable: O,
) -> Result<Vec<T>>
where
    O: Fn(&Trajectory) -> T + Sync,
    T: Send,
{
    if count == 0 {
        return Err(Error::Precondition("trajectory count must be positive".into()));
    }
    (0..count)
        .into_par_iter()
        .map(|j| {
            let mut rng = trajectory_rng(seed, j as u64);
            let traj = mcwf_run(h, jumps, initial, times, &mut rng, options)?;
            Ok(observable(&traj))
        })
        .collect()
}
