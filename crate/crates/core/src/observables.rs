//! Detected fields and everything measured from them: transmission and
//! reflection, group delays, photon correlations and momentum densities.

pub mod correlation;
pub mod field;
pub mod momentum;
pub mod transmission;

pub use correlation::{g2_mcwf, g2_projection, g2_truncated, recovery_time, G2Series};
pub use field::{transmission_finite, FieldOperatorCoeffs};
pub use momentum::{
    momentum_cut, momentum_density, momentum_map, non_factorizable_fraction, MomentumFieldCoeffs, MomentumGrid, MomentumMap,
    PairCorrelator,
};
pub use transmission::{delay_scan, delay_time_finite, DelayScanPoint, LinearSpectrum, TransmissionPeak};
