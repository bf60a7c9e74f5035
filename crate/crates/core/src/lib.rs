//! Isogeometric collocation boundary element method for 2D elastostatics
//! with hierarchical matrix compression.
//!
//! The boundary (and the Cauchy data on it) is described by NURBS curves.
//! System matrices of the single and double layer operators are assembled
//! in the H-matrix format: near-field blocks densely by Gauss quadrature,
//! far-field blocks as low-rank outer products obtained from Chebyshev
//! Lagrange interpolation of the fundamental solution.

pub mod assembly;
pub mod boundary;
pub mod clustering;
pub mod error;
pub mod geom;
pub mod hmatrix;
pub mod input;
pub mod interp;
pub mod kernels;
pub mod nurbs;
pub mod quadrature;
pub mod solver;
pub mod study;

pub use error::{Error, Result};
pub use geom::{BoundingBox, Point2};
