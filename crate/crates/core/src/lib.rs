//! Semidefinite spectral clustering.
//!
//! The central operation projects an affinity matrix `K`, in Frobenius norm,
//! onto the set of doubly-stochastic positive-semidefinite matrices. The
//! projection is computed through the Lagrange dual of the semidefinite
//! program, either by block coordinate descent ([`ldssc::ld_ssc1`]) or by a
//! joint bound-constrained quasi-Newton solve ([`ldssc::ld_ssc2`]). The
//! normalized matrix is then embedded with its leading eigenvectors and
//! clustered with k-means.
//!
//! Modules:
//!
//! * [`symmat`]: dense symmetric matrices, eigendecomposition, spectral split.
//! * [`affinity`]: datasets, PCA, Gaussian/polynomial kernels.
//! * [`normalize`]: baseline normalizers (none, ratio cut, Sinkhorn, Frobenius QP).
//! * [`ldssc`]: the dual solvers.
//! * [`oracle`]: Dykstra's projection, used as independent ground truth.
//! * [`cluster`]: spectral embedding, k-means, error rate, pipeline.
//!
//! With the default `parallel` feature the O(n³) inner loops run on the rayon
//! global pool. Without it everything runs sequentially; results are identical
//! either way.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod affinity;
pub mod cluster;
mod error;
pub mod ldssc;
pub mod normalize;
pub mod oracle;
pub mod par;
pub mod symmat;
pub mod synthetic;

pub use error::{Result, SscError};
pub use symmat::{EigenPair, SymMatrix};
