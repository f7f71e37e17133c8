//! Pseudo-spectral solution of the periodic time-dependent Schrödinger
//! equation on rank-1 and rank-r lattice point sets.
//!
//! The pipeline is: a [`LatticeSpec`] (from the bundled [`catalog`], from
//! [`cbc`] or from a file) → its minimal-ℓ2 [`AntiAliasSet`] → a
//! [`Discretization`] holding exact points and FFT plans → Strang-split time
//! stepping in coefficient space ([`tdse`]). [`experiment`] drives the
//! convergence, conservation and initial-error studies.

pub mod antialias;
pub mod catalog;
pub mod cbc;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod lattice;
pub mod problems;
pub mod spectral;
pub mod tdse;

pub use antialias::{verify_minimal, AntiAliasSet, LatticeDocument};
pub use cbc::{cbc_construct, wce_squared, CbcCriterion};
pub use error::{Error, Result};
pub use exec::Exec;
pub use lattice::{validate_canonical, LatticePoint, LatticeSpec};
pub use num_complex::Complex64;
pub use problems::{BenchmarkFunction, BenchmarkKind};
pub use spectral::{analyze, evaluate, synthesize, CoefficientField, Discretization, SampleField};
pub use tdse::{energy, propagate, ProblemSpec, StrangPropagator};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
