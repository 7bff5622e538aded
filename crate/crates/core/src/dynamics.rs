//! Finite-array quantum dynamics in the two-excitation truncated basis.

pub mod basis;
pub mod hamiltonian;
pub mod jumps;
pub mod mcwf;
pub mod modes;
pub mod propagate;
pub mod steady;
pub mod surrogate;
pub mod sylvester;

pub use basis::{QuantumState, TruncatedBasis};
pub use hamiltonian::{build_hamiltonian, EffectiveHamiltonian};
pub use steady::{steady_state_weak_drive, SteadyState};
pub use propagate::{evolve, evolve_grid, DormandPrince};
pub use jumps::JumpOperators;
pub use mcwf::{mcwf_ensemble, mcwf_run, EnsembleStats, McwfOptions, Trajectory};
pub use modes::{driven_mode_series, extract_modes, fit_mode_parameters, ModeExtraction, ModeFit};
pub use surrogate::PeriodicSurrogate;
