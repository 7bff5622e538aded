//! Dense density-matrix oracle for N ≤ 3 atoms.
//!
//! Built from site operators on bit-string states, with the site-basis
//! dissipator Σ 2Γ_nm (σ_m ρ σ_n† − ½{σ_n†σ_m, ρ}), so it shares nothing with
//! the collective jump channels or the pair-matrix Hamiltonian.
#![allow(dead_code)]

use atomic_arrays::beams::{drive_vector, DriveMode};
use atomic_arrays::dynamics::{build_hamiltonian, EffectiveHamiltonian, QuantumState, TruncatedBasis};
use atomic_arrays::greens::{assemble_couplings, CouplingMatrices};
use atomic_arrays::lattice::AtomSet;
use atomic_arrays::Complex64;
use nalgebra::{DMatrix, DVector};

type M = DMatrix<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub struct Lindblad {
    pub atoms: usize,
    /// Bit strings kept (popcount ≤ max excitations), in oracle order.
    pub states: Vec<u32>,
    pub lowering: Vec<M>,
    pub h_eff: M,
    gamma: DMatrix<f64>,
}

impl Lindblad {
    pub fn new(g: &DMatrix<Complex64>, drive: &[Complex64], detuning: f64, max_exc: u32) -> Self {
        let n = g.nrows();
        assert!(n <= 3);
        let states: Vec<u32> = (0..1u32 << n).filter(|s| s.count_ones() <= max_exc).collect();
        let d = states.len();
        let index = |s: u32| states.iter().position(|&x| x == s);
        let lowering: Vec<M> = (0..n)
            .map(|a| {
                let mut m = M::zeros(d, d);
                for (j, &s) in states.iter().enumerate() {
                    if s & (1 << a) != 0 {
                        let i = index(s & !(1 << a)).unwrap();
                        m[(i, j)] = c(1.0);
                    }
                }
                m
            })
            .collect();
        let mut h = M::zeros(d, d);
        for a in 0..n {
            let up = lowering[a].adjoint();
            h -= &up * drive[a] + &lowering[a] * drive[a].conj();
            for b in 0..n {
                let coef = -g[(a, b)] - if a == b { c(detuning) } else { c(0.0) };
                h += &up * &lowering[b] * coef;
            }
        }
        let gamma = g.map(|z| z.im);
        Self { atoms: n, states, lowering, h_eff: h, gamma }
    }

    pub fn from_setup(atoms: &AtomSet, couplings: &CouplingMatrices, drive: &[Complex64], detuning: f64) -> Self {
        assert_eq!(atoms.len(), couplings.len());
        Self::new(couplings.complex(), drive, detuning, 2)
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn rhs(&self, rho: &M) -> M {
        let i = Complex64::i();
        let mut out = (&self.h_eff * rho - rho * self.h_eff.adjoint()) * (-i);
        for a in 0..self.atoms {
            for b in 0..self.atoms {
                let g = self.gamma[(a, b)];
                if g != 0.0 {
                    out += &self.lowering[b] * rho * self.lowering[a].adjoint() * c(2.0 * g);
                }
            }
        }
        out
    }

    /// RK4 with fixed step; returns ρ at each requested sorted time.
    pub fn evolve(&self, rho0: &M, times: &[f64], dt: f64) -> Vec<M> {
        let mut rho = rho0.clone();
        let mut t = 0.0;
        let mut out = Vec::new();
        for &target in times {
            while t < target - 1e-12 {
                let h = dt.min(target - t);
                let k1 = self.rhs(&rho);
                let k2 = self.rhs(&(&rho + &k1 * c(h / 2.0)));
                let k3 = self.rhs(&(&rho + &k2 * c(h / 2.0)));
                let k4 = self.rhs(&(&rho + &k3 * c(h)));
                rho += (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(h / 6.0);
                t += h;
            }
            out.push(rho.clone());
        }
        out
    }

    pub fn vacuum(&self) -> M {
        let mut r = M::zeros(self.dim(), self.dim());
        r[(0, 0)] = c(1.0);
        r
    }

    /// Oracle-ordered vector of a truncated-basis state.
    pub fn from_state(&self, s: &QuantumState) -> DVector<Complex64> {
        let b = s.basis;
        DVector::from_iterator(
            self.dim(),
            self.states.iter().map(|&bits| {
                let set: Vec<usize> = (0..self.atoms).filter(|a| bits & (1 << a) != 0).collect();
                match set.len() {
                    0 => s.amplitudes[0],
                    1 => s.amplitudes[b.single(set[0])],
                    2 => s.amplitudes[b.pair(set[0], set[1])],
                    _ => unreachable!(),
                }
            }),
        )
    }

    /// Observables tracked against trajectories: atom populations,
    /// two-excitation population, Re and Im of ⟨σ_0⟩.
    pub fn observables(&self, rho: &M) -> Vec<f64> {
        let mut v: Vec<f64> = (0..self.atoms)
            .map(|a| (self.lowering[a].adjoint() * &self.lowering[a] * rho).trace().re)
            .collect();
        let doubles: f64 =
            self.states.iter().enumerate().filter(|(_, s)| s.count_ones() == 2).map(|(i, _)| rho[(i, i)].re).sum();
        v.push(doubles);
        let s0 = (&self.lowering[0] * rho).trace();
        v.push(s0.re);
        v.push(s0.im);
        v
    }

    pub fn pure_observables(&self, psi: &DVector<Complex64>) -> Vec<f64> {
        self.observables(&(psi * psi.adjoint()))
    }
}

pub struct Small {
    pub atoms: AtomSet,
    pub couplings: CouplingMatrices,
    pub hamiltonian: EffectiveHamiltonian,
    pub drive: Vec<Complex64>,
}

pub fn small_system(positions: Vec<[f64; 3]>, omega: f64, detuning: f64) -> Small {
    let layers = vec![1; positions.len()];
    let atoms = AtomSet::new(positions, layers).unwrap();
    let couplings = assemble_couplings(&atoms).unwrap();
    let d = drive_vector(&atoms, &DriveMode::PlaneWave, omega).unwrap();
    let hamiltonian = build_hamiltonian(&couplings, &d, detuning, 2).unwrap();
    Small { drive: d.amplitudes.clone(), atoms, couplings, hamiltonian }
}

pub fn vacuum(h: &EffectiveHamiltonian) -> QuantumState {
    QuantumState::vacuum(TruncatedBasis::new(h.atoms(), 2).unwrap())
}
