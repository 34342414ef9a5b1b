//! Finite-element solver for `A^eps u = f`, the fractional power of a
//! second-order elliptic operator with homogeneous Dirichlet conditions on a
//! polygonal domain, `0 < eps < 1`.
//!
//! The fractional solve is obtained by integrating a pseudo-time evolution
//! problem on `t in [0, 1]` with a weighted two-level scheme. Meshes are
//! adapted to a boundary-flux goal functional before time stepping.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases at the crate root fix the scalar to `f64`.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adapt;
pub mod error;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod oracle;
pub mod pseudotime;
pub mod quadrature;
pub mod rd;
pub mod scalar;
pub mod sparse;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Mesh64 = mesh::Mesh<f64>;
pub type FeSpace64 = fem::FeSpace<f64>;
pub type FeFunction64 = fem::FeFunction<f64>;
pub type Coefficient64 = fem::Coefficient<f64>;
pub type SparseSym64 = sparse::SparseSym<f64>;
pub type SchemeParams64 = pseudotime::SchemeParams<f64>;
