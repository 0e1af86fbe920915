//! Tree-based low-rank approximation of multivariate black-box functions.
//!
//! The approximation is learned leaves-to-root over a dimension partition
//! tree: each active node runs an empirical principal component analysis of
//! interpolated partial evaluations, then selects magic points inside the
//! grid of its sons so that interpolation operators stay nested. The result
//! is a [`tnet::TreeTensor`] whose number of parameters equals the number of
//! function evaluations when one sample per retained component is used.
//!
//! Modules:
//! - [`dimtree`]: dimension partition trees, active sets, storage counts.
//! - [`bases`]: univariate measures and orthonormal bases.
//! - [`interp`]: magic-point selection and interpolation solves.
//! - [`tnet`]: the tree tensor representation and dense validation oracles.
//! - [`hopca`]: the learning algorithm and evaluation accounting.
//! - [`bench`]: test functions, error estimation and experiment runner.

pub mod bases;
pub mod bench;
pub mod dimtree;
pub mod hopca;
pub mod interp;
mod linalg;
mod rng;
mod tensor_ops;
pub mod tnet;

pub use rng::RngStream;
