//! Finite-dimensional workbench for diagonals of matrix algebras, finite
//! irreducible matrix groups, biorthogonal lifts into operators on normed
//! coordinate spaces, and the approximate-diagonal constructions built from
//! them.
//!
//! Algebraic identities are decided over exact rationals; analytic bounds go
//! through the interval-valued operator-norm engine in [`spaces`].

pub mod constructions;
pub mod error;
pub mod groups;
pub mod lifts;
pub mod linalg;
pub mod spaces;
pub mod tensor;

pub use error::{Error, Result};
pub use linalg::{Matrix, Rational, Scalar};
