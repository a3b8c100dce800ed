//! Spectral solver laboratory for the Navier-Stokes Cauchy problem with
//! L3 initial data, realized on a periodic box.
//!
//! The crate provides:
//!
//! * [`ops`] — pseudo-spectral field algebra: transforms, derivatives,
//!   Leray projection, dealiased products, mollification;
//! * [`heat`] — the linear theory: heat semigroup flow of the data and the
//!   decay estimates it obeys;
//! * [`oseen`] — free-space Oseen kernel evaluation and its pointwise bound;
//! * [`mild`] — Duhamel operator and the Picard construction of mild
//!   solutions with the smallness horizon;
//! * [`perturb`] — the energy-class correction solver (mollified advection
//!   optional), pressure recovery, energy inequality audits and the
//!   four-way force decomposition;
//! * [`lab`] — cross-cutting experiments: scaling symmetry, embedding
//!   chains, solver agreement, weak-convergence families, modulus of
//!   continuity;
//! * [`presets`] — canonical divergence-free initial data families;
//! * [`config`] / [`snapshot`] — run configuration and the on-disk field
//!   snapshot format.

pub mod config;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod heat;
pub mod lab;
pub mod mild;
pub mod mollify;
pub mod norms;
pub mod ops;
pub mod oseen;
pub mod perturb;
pub mod presets;
pub mod report;
pub mod snapshot;
pub mod testkit;
pub mod tolerances;

pub use error::{CoreError, Result};
pub use field::{Field, FieldHistory, Representation};
pub use grid::Grid;
pub use mollify::{Mollifier, MollifierKind};
pub use norms::MixedNormSpec;
pub use ops::SpectralWorkspace;
pub use report::{ConvergenceTrace, EstimateReport};
