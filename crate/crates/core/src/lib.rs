//! Kernel interpolation with spectrum-based error bounds.
//!
//! Dense, desk-scale toolkit: kernel families (Gaussian, Sobolev
//! spline), symmetric eigendecomposition, random point-set geometry,
//! effective-dimension and error functionals, operator-difference
//! estimators, and a reproducible experiment harness.

pub mod bessel;
pub mod bounds;
pub mod error;
pub mod experiments;
pub mod gamma;
pub mod gram;
pub mod interpolation;
pub mod kernels;
pub mod linalg;
pub mod operator_diag;
pub mod quad;
pub mod rng;
pub mod sampling;
pub mod spectrum;

pub use error::{CoreError, Result};
pub use interpolation::{KernelModel, LabeledSet, RidgeScaling};
pub use kernels::{Kernel, KernelFamily};
pub use linalg::{EigenDecomposition, SymmetricMatrix};
pub use sampling::SampleSet;
pub use spectrum::SpectralProfile;
