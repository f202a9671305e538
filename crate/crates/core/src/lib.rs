//! Sketch-orthogonal factorizations of tall matrices.
//!
//! A sketching operator `S: R^m -> R^s` defines the semi-inner product
//! `<x, y> = (Sx)^T (Sy)`. This crate computes the SVD-like factorization
//! `A = W Θ V^T` whose left factor is orthonormal in that inner product,
//! truncations of it, and the nearest sketch-orthogonal matrix to `A`
//! (the orthogonal factor of a randomized polar decomposition). Every
//! probabilistic bound relating these objects to their classical
//! counterparts can be checked on concrete instances through an
//! [`EmbeddingCertificate`], which measures the distortion a particular
//! operator actually achieves on a particular subspace.
//!
//! Module map:
//!
//! * [`sketch`]: operator construction (Gaussian, subsampled cosine
//!   transform, sparse sign), application and distortion audits.
//! * [`kernels`]: Householder QR, one-sided Jacobi SVD, pseudo-inverse,
//!   polar factors and norms.
//! * [`stssvd`]: the sketch-orthogonal SVD by two routes, truncation and
//!   sketched norms.
//! * [`nearest`]: nearest sketch-orthogonal / orthogonal matrices and the
//!   bound reports that go with them.
//! * [`matgen`], [`mmio`]: test matrix generators and Matrix Market I/O.

pub mod dct;
pub mod error;
pub mod kernels;
pub mod matgen;
pub mod matrix;
pub mod mmio;
pub mod nearest;
pub mod sketch;
pub mod stssvd;

pub use error::{Error, Result};
pub use kernels::{PolarMode, PolarPair, SvdFactors};
pub use matrix::{CsrMatrix, Dense, MatrixHandle};
pub use nearest::{BoundId, BoundReport, SandwichReport};
pub use sketch::{EmbeddingCertificate, EmbeddingSpec, SketchKind, SketchOperator};
pub use stssvd::{SpectrumComparison, StsSvdFactors};
