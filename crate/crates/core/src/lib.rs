//! Numerical laboratory for recovering a conductivity and its normal
//! derivative on the boundary of a 2-D domain from a single realization of
//! noise-corrupted Dirichlet-to-Neumann measurements.
//!
//! The crate is organized around the measurement pipeline:
//!
//! * [`geometry`] — star-shaped domains, local boundary charts and the
//!   oscillation direction `xi` of the probe family.
//! * [`conductivity`] — analytic conductivity fields with exact gradients.
//! * [`mesh`] — graded triangular meshes that resolve probe oscillations in
//!   a thin boundary layer.
//! * [`boundary`] — complex functions on the boundary: quadrature, Fourier
//!   coefficients against the arclength basis, pointwise algebra.
//! * [`solver`] — the clean Dirichlet-to-Neumann pairing: P1 finite elements
//!   for the conductivity equation plus a spectral oracle on the unit disk.
//! * [`noise`] — the frozen doubly-indexed complex Gaussian family and the
//!   corrupted bilinear form.
//! * [`probes`] — the compactly supported oscillating boundary data with the
//!   normalizations that make the measurements converge to point values.
//! * [`reconstruct`] — recovery drivers, sample-size planning, filtering
//!   statistics and rate fitting.

pub mod boundary;
pub mod conductivity;
pub mod error;
pub mod geometry;
pub mod mesh;
pub mod noise;
pub mod probes;
pub mod reconstruct;
pub mod rng;
pub mod solver;

pub use error::CoreError;

/// Ambient dimension. Meshes and experiments are 2-D; formulas keep the
/// dimension as a named constant so exponents like `(d-1)/2` stay legible.
pub const DIM: usize = 2;

/// `Result` alias used across the crate.
pub type Result<T> = std::result::Result<T, CoreError>;
