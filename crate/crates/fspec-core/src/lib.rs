//! Numerical toolkit for the Fourier spectrum `dim_F^theta` of structured
//! fractal measures and for exceptional-set estimates of orthogonal
//! projections.
//!
//! The crate is organised around five pieces:
//!
//! * [`measure`] — symbolic measures (self-similar, atomic, products,
//!   convolution powers, projections) with an exact Fourier-transform
//!   evaluator built on the truncated refinement product.
//! * [`spectrum`] — dyadic-shell energy estimation and log-regression of
//!   `dim_F^theta`, truncated lattice sums, and the convolution shortcut
//!   `dim_F^{1/n} mu = dim_S(mu^{*n}) / n`.
//! * [`projection`] — orthonormal k-frames on the Grassmannian G(d,k),
//!   Haar sampling, frequency lifts, push-forwards and box counting.
//! * [`bounds`] — closed-form calculators for every projection bound a
//!   set profile supports (Kaufman, Bourgain–Oberlin, Ren–Wang, Mattila,
//!   Peres–Schlag, He, and the spectrum-driven family), improvement
//!   regions and semi-derivative criteria.
//! * [`constructions`] — the concrete objects: `E_alpha` Cantor measures,
//!   the triple-product example with its closed-form dimensions, and the
//!   grid sets behind the sharpness construction together with the exact
//!   projection-containment check.

pub mod bounds;
pub mod constructions;
pub mod measure;
pub mod projection;
pub mod sampling;
pub mod spectrum;
pub mod svg;

pub use measure::{AtomicMeasure, MeasureError, MeasureExpr, SelfSimilarMeasure1D};
pub use projection::Frame;
pub use spectrum::{SamplingPlan, ShellEstimate, SpectrumEstimate};

/// Default RNG seed used by every deterministic estimate.
pub const DEFAULT_SEED: u64 = 0x5EED;
