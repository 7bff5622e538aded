//! Light scattering from single and dual sub-wavelength atomic arrays.
//!
//! Lengths are in units of the transition wavelength, rates and detunings in
//! units of the single-atom decay rate γ (see [`params`]).

pub mod beams;
pub mod dynamics;
pub mod error;
pub mod greens;
pub mod lattice;
pub mod linear_response;
pub mod observables;
pub mod params;
pub mod quadrature;
pub mod records;

pub use error::{Error, ErrorKind, Result};
pub use num_complex::Complex64;
