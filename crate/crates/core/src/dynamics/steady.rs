//! Weak-drive steady state, solved order by order in Ω.
//!
//! c⁽⁰⁾ = 1; H₁c⁽¹⁾ = Ω; the pair amplitudes solve
//! P_offdiag(H₁C + CH₁ᵀ) = (Ω c⁽¹⁾ᵀ + c⁽¹⁾Ωᵀ)_offdiag. The off-diagonal
//! projection is enforced by adding a diagonal source D chosen so that
//! diag C = 0.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::dynamics::basis::QuantumState;
use crate::dynamics::hamiltonian::EffectiveHamiltonian;
use crate::dynamics::sylvester::SchurSylvester;
use crate::error::{Error, Result};

/// Drive strengths above this are outside the perturbative regime.
pub const MAX_WEAK_DRIVE: f64 = 1e-2;
const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct SteadyState {
    /// Amplitudes with c⁽⁰⁾ = 1 (not normalized).
    pub state: QuantumState,
    /// ‖c⁽²⁾‖ / ‖c⁽¹⁾‖, the truncation monitor.
    pub truncation_ratio: f64,
}

impl SteadyState {
    pub fn singles(&self) -> DVector<Complex64> {
        self.state.singles()
    }

    pub fn pairs(&self) -> DMatrix<Complex64> {
        self.state.pair_matrix()
    }
}

pub fn steady_state_weak_drive(h: &EffectiveHamiltonian) -> Result<SteadyState> {
    if h.drive_strength > MAX_WEAK_DRIVE {
        return Err(Error::Precondition(format!(
            "weak-drive steady state needs Ω₀ ≤ {MAX_WEAK_DRIVE}γ, got {}",
            h.drive_strength
        )));
    }
    let n = h.atoms();
    let schur = SchurSylvester::new(&h.single)?;
    check_condition(&schur)?;
    let c1 = h
        .single
        .clone()
        .lu()
        .solve(&h.drive)
        .ok_or_else(|| Error::Numerical("singular single-excitation block".into()))?;
    let pairs = if h.basis.max_excitations == 2 && n > 1 {
        Some(solve_pairs(&schur, &h.drive, &c1)?)
    } else {
        None
    };
    let state = QuantumState::from_blocks(h.basis, Complex64::new(1.0, 0.0), &c1, pairs.as_ref())?;
    let c2_norm = pairs.as_ref().map_or(0.0, |c| (c.norm_squared() / 2.0).sqrt());
    let c1_norm = c1.norm();
    let truncation_ratio = if c1_norm > 0.0 { c2_norm / c1_norm } else { 0.0 };
    Ok(SteadyState { state, truncation_ratio })
}

fn check_condition(schur: &SchurSylvester) -> Result<()> {
    let ev = schur.eigenvalues();
    let (mut min, mut max) = (f64::INFINITY, 0.0f64);
    let mut worst = Complex64::new(0.0, 0.0);
    for z in ev.iter() {
        let m = z.norm();
        if m < min {
            min = m;
            worst = *z;
        }
        max = max.max(m);
    }
    let cond = if min > 0.0 { max / min } else { f64::INFINITY };
    if cond > MAX_CONDITION {
        return Err(Error::NearDarkState { eigenvalue: worst, condition: cond });
    }
    Ok(())
}

/// Pair amplitudes solving the second-order steady-state equation.
pub fn solve_pairs(
    schur: &SchurSylvester,
    omega: &DVector<Complex64>,
    c1: &DVector<Complex64>,
) -> Result<DMatrix<Complex64>> {
    let n = omega.len();
    let mut source = omega * c1.transpose() + c1 * omega.transpose();
    source.fill_diagonal(Complex64::new(0.0, 0.0));
    let c0 = schur.solve(&source);
    let m = schur.diagonal_response();
    let d = m
        .lu()
        .solve(&(-c0.diagonal()))
        .ok_or_else(|| Error::Numerical("singular diagonal-correction system".into()))?;
    let mut rhs = source;
    for i in 0..n {
        rhs[(i, i)] = d[i];
    }
    let mut c = schur.solve(&rhs);
    // diag is zero to solver precision; the pair basis has no such states
    c.fill_diagonal(Complex64::new(0.0, 0.0));
    Ok((&c + c.transpose()) / Complex64::new(2.0, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beams::{drive_vector, DriveMode, GaussianBeam};
    use crate::dynamics::hamiltonian::build_hamiltonian;
    use crate::greens::assemble_couplings;
    use crate::lattice::{build_dual_array, build_single_array, Geometry, LatticeSpec};

    #[test]
    fn single_atom_lorentzian() {
        let atoms = build_single_array(1, 1, 0.6).unwrap();
        let c = assemble_couplings(&atoms).unwrap();
        let d = drive_vector(&atoms, &DriveMode::PlaneWave, 1e-3).unwrap();
        for delta in [-2.0, 0.0, 0.5, 1.0] {
            let h = build_hamiltonian(&c, &d, delta, 2).unwrap();
            let s = steady_state_weak_drive(&h).unwrap();
            let expect = -Complex64::new(1e-3, 0.0) / Complex64::new(delta, 1.0);
            assert!((s.singles()[0] - expect).norm() < 1e-17);
        }
    }

    #[test]
    fn pair_equation_residual_and_scaling() {
        let beam = GaussianBeam::new(1.5).unwrap();
        let spec = LatticeSpec::new(3, 3, 0.6, 1.55, Geometry::Curved { waist: 1.5 }).unwrap();
        let atoms = build_dual_array(&spec, Some(&beam)).unwrap();
        let c = assemble_couplings(&atoms).unwrap();
        let mode = DriveMode::Gaussian(beam);
        let run = |omega: f64| {
            let d = drive_vector(&atoms, &mode, omega).unwrap();
            let h = build_hamiltonian(&c, &d, 0.45, 2).unwrap();
            (h.clone(), steady_state_weak_drive(&h).unwrap())
        };
        let (h, s) = run(1e-3);
        // steady state annihilated by H in the single and double sectors
        let r = h.apply(&s.state.amplitudes);
        let scale = s.state.amplitudes.rows(1, h.atoms()).norm();
        // single sector: exact at first order, the H₁₂C feed-back is third order
        assert!((&h.single * s.singles() - &h.drive).norm() < 1e-12 * h.drive.norm());
        assert!(r.rows(1, h.atoms()).norm() < 1e-4 * scale);
        let pair_res = r.rows(1 + h.atoms(), h.basis.pairs()).norm();
        assert!(pair_res < 1e-12 * s.pairs().norm(), "{pair_res}");
        let (_, s2) = run(1e-4);
        assert!((s.singles() / Complex64::new(10.0, 0.0) - s2.singles()).norm() < 1e-12 * s2.singles().norm());
        assert!((s.pairs() / Complex64::new(100.0, 0.0) - s2.pairs()).norm() < 1e-10 * s2.pairs().norm());
        assert!(s.truncation_ratio < 1e-2);
    }

    #[test]
    fn rejects_strong_drive() {
        let atoms = build_single_array(1, 1, 0.6).unwrap();
        let c = assemble_couplings(&atoms).unwrap();
        let d = drive_vector(&atoms, &DriveMode::PlaneWave, 0.1).unwrap();
        let h = build_hamiltonian(&c, &d, 0.0, 2).unwrap();
        assert!(matches!(steady_state_weak_drive(&h), Err(Error::Precondition(_))));
    }
}
