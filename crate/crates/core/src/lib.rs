//! Simulation and verification toolkit for one-dimensional jump-diffusion
//! short-rate models of the form
//!
//! ```text
//! x(t) = x(0) + ∫ (b(s) + β x(s)) ds + ∫ σ(x(s)) dB(s) + ∫∫ g(x(s−), u) Ñ(ds, du)
//! ```
//!
//! driven by a Brownian motion and a compensated Poisson random measure with
//! finite-activity marks. The crate provides:
//!
//! * [`model`] — coefficient bundles, builtin model families (extended CIR,
//!   CIR with jumps, one-sided Lévy), and numeric validators for the growth
//!   and modulus-of-continuity conditions the convergence theory relies on;
//! * [`noise`] — deterministic, counter-keyed noise generation on a master
//!   grid so that every mesh of one path shares one realization;
//! * [`euler`] — the frozen-coefficient Euler scheme with exact
//!   within-interval drift/compensator accumulation and jump bookkeeping;
//! * [`analysis`] — L¹-supnorm error estimation across coupled meshes,
//!   moment curves against explicit bounds, and convergence-rate fits;
//! * [`yamada`] — the smooth approximation of |z| (bump functions and their
//!   double primitives) used by the uniqueness machinery, built as a
//!   numerically checkable object.

pub mod analysis;
pub mod error;
pub mod euler;
pub mod expr;
pub mod model;
pub mod noise;
pub mod quad;
pub mod rng;
pub mod stats;
pub mod yamada;

pub use analysis::{ConvergenceReport, MomentCurve, StudySetup};
pub use error::{Error, Result};
pub use euler::EulerPath;
pub use model::{
    DriftProcess, InitialLaw, JumpKernel, JumpMeasure, MarkLaw, ModelSpec, ModulusSpec,
};
pub use noise::{Net, NoiseRealization};
pub use yamada::{ModulusFamily, MollifierSequence};
