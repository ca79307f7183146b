//! Exact, desk-scale analysis of junta approximation under function
//! composition.
//!
//! The crate is organised bottom-up:
//!
//! - [`boolfn`]: dense truth tables, randomized Boolean functions and
//!   distributions over the hypercube.
//! - [`fourier`]: μ-biased Fourier spectra and product-distribution means.
//! - [`stability`]: multivariate, unbalanced and (δ,ε) noise stability.
//! - [`junta`]: conditional means, optimal juntas and advantage curves.
//! - [`composition`]: composed functions `g∘f`, canonical composed-form
//!   approximators, budget partitions and the sandwich bounds.
//! - [`boosting`]: oracle-mediated tester boosting and the SetCover
//!   reduction.
//! - [`experiments`]: scripted counterexample reproductions.
//!
//! Input indexing is shared by every module: bit `i` of a table index is
//! coordinate `i` (0-based), and a set bit means the coordinate is `+1`.

pub mod bits;
pub mod boolfn;
pub mod boosting;
pub mod composition;
pub mod error;
pub mod experiments;
pub mod fourier;
pub mod junta;
pub mod stability;

pub use error::{Error, Result};

/// Numerical tolerances used across the crate.
pub mod tol {
    /// Slack for algebraic identities and theorem inequalities.
    pub const ALGEBRAIC: f64 = 1e-9;
    /// Slack for probability normalisation.
    pub const NORMALIZATION: f64 = 1e-12;
    /// Two advantages closer than this are treated as tied.
    pub const TIE: f64 = 1e-12;
    /// `|μ|` must stay below `1 - MU_MARGIN` for the biased basis to exist.
    pub const MU_MARGIN: f64 = 1e-9;
}
