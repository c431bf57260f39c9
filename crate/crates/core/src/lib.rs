//! Discrete solver and analysis toolkit for cohesive-zone fracture in a
//! symmetric strip: the reduced odd problem on the crack face, its harmonic
//! extension, frequency and blow-up diagnostics, and free-boundary geometry.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the aliases at the
//! crate root fix the scalar to `f64`.

pub mod blowup;
pub mod boundary;
pub mod dst;
pub mod dtn;
pub mod error;
pub mod extension;
pub mod free_boundary;
pub mod frequency;
pub mod grid;
pub mod io;
pub mod law;
pub mod quadrature;
pub mod scalar;
pub mod solver;

pub use blowup::BlowupOptions;
pub use error::{Error, Result};
pub use frequency::{Classification, FrequencyOptions};
pub use law::{Density, ValidationOptions, ValidationReport};
pub use scalar::Real;
pub use solver::{SolverOptions, UniquenessReport};

pub type CohesiveLaw = law::CohesiveLaw<f64>;
pub type StripGrid = grid::StripGrid<f64>;
pub type Field = grid::Field<f64>;
pub type BoundaryProfile = boundary::BoundaryProfile<f64>;
pub type BoundaryData = boundary::BoundaryData<f64>;
pub type ReducedForm = dtn::ReducedForm<f64>;
pub type Solution = solver::Solution<f64>;
pub type ReflectedField = extension::ReflectedField<f64>;
pub type FrequencyProfile = frequency::FrequencyProfile<f64>;
pub type IdentityReport = frequency::IdentityReport<f64>;
pub type BlowupFit = blowup::BlowupFit<f64>;
pub type CrackGeometry = free_boundary::CrackGeometry<f64>;
