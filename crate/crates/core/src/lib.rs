//! Rank correlation matrices built from ξₙ, their spectra and independence tests.
//!
//! The crate covers the whole pipeline from raw observations to
//! high-dimensional independence tests:
//!
//! * [`permutations`]: rankings, relative ranks, uniform permutations and the
//!   forest predicate deciding when relative ranks are mutually independent.
//! * [`rankcorr`]: ξₙ, the matrices Ξₙ, Φₙ, Ψₙ and the Pearson, Spearman and
//!   Kendall matrices used by the comparison tests.
//! * [`spectra`]: a dense symmetric eigensolver, trace powers, empirical
//!   spectral distributions and histograms.
//! * [`limitlaws`]: semicircle and Marchenko-Pastur laws, the Gaussian
//!   covariance of trace powers of Ψₙ, exact finite-n moments and Catalan
//!   combinatorics.
//! * [`hightest`]: nine statistics for testing complete independence.
//! * [`montecarlo`]: data-generating models and the seeded parallel
//!   replication engine.
//! * [`exact_oracle`]: exact rational enumeration over ranking tuples for
//!   small n.

pub mod error;
pub mod exact_oracle;
pub mod hightest;
pub mod limitlaws;
pub mod matrix;
pub mod montecarlo;
pub mod normal;
pub mod permutations;
pub mod rankcorr;
pub mod seeding;
pub mod spectra;

pub use error::{Error, Result};
pub use matrix::DenseMatrix;
pub use permutations::{DependenceGraph, Permutation, TiePolicy};
pub use rankcorr::{CorrelationMatrix, DataMatrix, MatrixKind};

/// Arbitrary-precision rational in canonical form.
pub type Rational = num_rational::BigRational;
