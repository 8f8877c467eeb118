//! Walsh-synthesized qubit control sequences and their noise filters.
//!
//! The crate builds piecewise-constant single-qubit control sequences from
//! Walsh spectra, evaluates the generalized filter-transfer functions for
//! dephasing and amplitude noise, and provides the tools needed to design
//! sequences that suppress noise: Taylor coefficients, filter order, band
//! costs, Nelder-Mead search, pulse shaping and Monte Carlo validation.
//!
//! The numerical core is generic over the scalar type through [`Real`].
//! The aliases below fix the scalar to `f64`, which is what most callers want.

pub mod catalog;
pub mod control;
mod error;
pub mod filters;
pub mod optimize;
mod scalar;
pub mod shaping;
pub mod simulate;
pub mod spectral;
pub mod walsh;

pub use error::{Error, Result};
pub use scalar::Real;

/// Complex number over `f64`.
pub type Complex = num_complex::Complex<f64>;
/// A control segment over `f64`.
pub type Segment = control::Segment<f64>;
/// A control sequence over `f64`.
pub type ControlSequence = control::ControlSequence<f64>;
/// A 2x2 unitary over `f64`.
pub type Unitary = control::Unitary2<f64>;
/// A control-history rotation matrix over `f64`.
pub type HistoryMatrix = control::HistoryMatrix<f64>;
/// A Walsh spectrum over `f64`.
pub type WalshSpectrum = walsh::WalshSpectrum<f64>;
/// A control vector over `f64`.
pub type ControlVector = filters::ControlVector<f64>;
/// Sampled filter functions over `f64`.
pub type FilterSamples = filters::FilterSamples<f64>;
/// A cost band over `f64`.
pub type CostBand = spectral::CostBand<f64>;
/// A catalog specification over `f64`.
pub type CatalogSpec = catalog::CatalogSpec<f64>;
