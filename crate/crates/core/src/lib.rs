//! Christoffel sparse approximation of polynomial chaos expansions.
//!
//! The crate recovers sparse coefficient vectors of orthonormal polynomial
//! expansions from few samples. Samples are drawn from (weighted) equilibrium
//! measures, rows of the Vandermonde-like design matrix are preconditioned
//! with the Christoffel function, and the resulting weighted basis pursuit
//! (denoising) problem is solved with a LARS-LASSO homotopy.
//!
//! Module map:
//!
//! - [`orthopoly`]: orthonormal Jacobi, Hermite and Laguerre families with
//!   overflow-safe evaluation.
//! - [`index_sets`]: total-degree multi-index dictionaries.
//! - [`sampling`]: equilibrium, orthogonality-density and asymptotic samplers.
//! - [`preconditioner`]: Christoffel weights and system assembly.
//! - [`l1_solver`]: LARS-LASSO homotopy for basis pursuit (denoising).
//! - [`diagnostics`]: Christoffel Gramian and coherence scans.
//! - [`pde_benchmark`]: 1D stochastic diffusion forward model.
//! - [`experiments`]: recovery transition and convergence studies, file I/O.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod index_sets;
pub mod l1_solver;
pub mod orthopoly;
pub mod pde_benchmark;
pub mod preconditioner;
pub mod quadrature;
pub mod rng;
pub mod sampling;

pub use error::{Error, Result};
pub use index_sets::MultiIndexSet;
pub use orthopoly::{BasisFamily, FamilyKind, WeightedEval};
pub use sampling::{SampleBatch, SamplerSpec, Strategy};
