//! Inpainting of masked, band-limited random fields on the unit sphere.
//!
//! The unknown field is represented by complex spherical-harmonic
//! coefficients up to degree `L`, grouped by degree. Recovery solves
//!
//! ```text
//! min  Σ_l β_l ‖α_{l·}‖^p     s.t.  ∫_Γ |T_α − T°|² + ∫_{Γᶜ} |T°|² ≤ ϱ
//! ```
//!
//! with `0 < p < 1`, using a smoothing penalty method whose subproblems are
//! handled by a nonmonotone proximal gradient iteration.
//!
//! Module map:
//! - [`harmonics`]: orthonormal harmonics, Gauss–Legendre rules, synthesis/analysis
//! - [`grid`]: quadrature grids and observation masks
//! - [`discretization`]: Gram matrix, moments and the [`DiscreteModel`]
//! - [`objective`], [`prox`], [`solver`]: the optimization
//! - [`diagnostics`], [`metrics`]: KKT certificates and recovery scores
//! - [`synth`], [`io`], [`render`]: experiment data, files and maps

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coeffs;
pub mod diagnostics;
pub mod discretization;
pub mod error;
pub mod grid;
pub mod harmonics;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod objective;
pub mod prox;
pub mod render;
pub mod solver;
pub mod synth;

pub use coeffs::CoefficientVector;
pub use discretization::{build_model, DegreeWeights, DiscreteModel};
pub use error::{Error, Result};
pub use grid::{build_grid, build_mask, Mask, MaskSpec, Shape, SphereGrid};
pub use harmonics::{BandLimit, HarmonicIndex};
pub use solver::{penalty_solve, NpgConfig, PenaltyConfig, SolveResult, SolveStatus};
