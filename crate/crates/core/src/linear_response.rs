//! Linear optics of infinite arrays in momentum space.

pub mod bright_dark;
pub mod finite_beam;
pub mod lattice_sum;
pub mod momentum;
pub mod spectra;

pub use lattice_sum::{intralayer_shift, DEFAULT_RADII, IntralayerShift, LatticeSum, WindowedLattice};
pub use momentum::{coupling_fourier, DEFAULT_SHELLS, collective_linewidth, linewidth_fourier, MomentumCoupling};
pub use bright_dark::{bright_dark_model, BrightDarkModel, BrightDarkResponse};
pub use spectra::{
    delay_time, dual_transmission, resonance_curve, single_array_tr, DelaySystem, DimerModel, DualForm,
    InterlayerModel, Resonance,
};
pub use finite_beam::{gaussian_transmission_infinite, FiniteBeamSpectrum, KGrid};
