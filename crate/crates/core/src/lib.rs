//! Autocorrelation, diffraction and dynamical spectrum of weighted Dirac combs.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod autocorrelation;
pub mod averaging;
pub mod cli;
pub mod diffraction;
pub mod error;
pub mod generators;
pub mod geometry;
pub mod measure;
pub mod numerics;
pub mod observable;
pub mod perturbation;
pub mod spectral;
pub mod testfn;

pub use error::{Error, ErrorCategory, Result};
pub use geometry::{Point, Window};
pub use measure::{Atom, AtomicMeasure};
pub use num_complex::Complex64;
