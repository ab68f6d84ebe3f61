//! Stochastic-Lagrangian Monte Carlo representations of the incompressible
//! Navier–Stokes equations on periodic and walled domains.
//!
//! The crate is organised bottom-up:
//!
//! * [`domain`]: geometry, membership and exit detection along path segments.
//! * [`field`]: grid fields, interpolation, finite-difference operators,
//!   Leray projection and Biot–Savart inversion.
//! * [`flow`]: backward noisy characteristics with exit times and Jacobians.
//! * [`estimator`]: Monte Carlo assembly of the expected-value formulas.
//! * [`solver`]: the periodic fixed-point loop, the `w̄` boundary-weight PDE
//!   and end-to-end verification against known solutions.
//! * [`reference`]: analytic and finite-difference oracles.
//! * [`experiment`]: config-driven experiment runner used by the CLI.
//!
//! All numerics are generic over the scalar type through [`Real`]; the
//! `*64`/`*32` aliases below pin the common choices.

// `!(x > 0)` is used on purpose to reject NaN; index loops mirror the stencils.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

pub mod domain;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod field;
pub mod flow;
pub mod reference;
pub mod scalar;
pub mod solver;

pub use domain::{boundary_crossing, contains, CrossingRecord, DomainKind, DomainSpec};
pub use error::{Error, Result};
pub use estimator::{BoundaryData, CurveSpec, McConfig, McEstimate};
pub use field::{FieldSeries, Grid, ScalarField, VectorField};
pub use flow::{ExitDetection, PathRecord, RngStream, VelocitySource};
pub use scalar::{Mat, Point, Real, MAX_DIM};
pub use solver::{SolverConfig, VerificationReport};

pub type DomainSpec64 = DomainSpec<f64>;
pub type DomainSpec32 = DomainSpec<f32>;
pub type ScalarField64 = ScalarField<f64>;
pub type ScalarField32 = ScalarField<f32>;
pub type VectorField64 = VectorField<f64>;
pub type VectorField32 = VectorField<f32>;
pub type FieldSeries64 = FieldSeries<f64>;
pub type FieldSeries32 = FieldSeries<f32>;
pub type PathRecord64 = PathRecord<f64>;
pub type McEstimate64 = McEstimate<f64>;
pub type BoundaryData64 = BoundaryData<f64>;
pub type SolverConfig64 = SolverConfig<f64>;
