//! Numerical-range analysis for small complex matrices.
//!
//! The crate computes the Kippenhahn generating polynomial
//! `p_A(u, v, w) = det(u·Re A + v·Im A + w·I)` of a 4×4 matrix, locates the
//! real singularities of its curve, decides which of them produce flat
//! portions (line segments) on the boundary of the numerical range `W(A)`,
//! and cross-checks every answer against an eigenvalue sweep of
//! `Re(e^{-iφ}A)`. It also builds the explicit family of 4×4 nilpotent
//! matrices whose numerical ranges carry two non-parallel flat portions at
//! equal distance from the origin, with their predicted geometry.
//!
//! All numeric code is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`.

pub mod boundary;
pub mod error;
pub mod family;
pub mod flatdetect;
pub mod io;
pub mod linalg;
pub mod nrpoly;
pub mod random;
pub mod roots;
pub mod scalar;
pub mod singularity;
pub mod verify;

pub use error::{NrError, Result};
pub use scalar::{Cx, Real};

/// `f64` complex matrix.
pub type Matrix = linalg::ComplexSquareMatrix<f64>;
pub type Hermitian = linalg::HermitianMatrix<f64>;
pub type TraceWords = linalg::TraceWords<f64>;
pub type Quartic = nrpoly::TernaryQuartic<f64>;
pub type NilpotentCoefficients = nrpoly::NilpotentCoefficients<f64>;
pub type Singularity = singularity::Singularity<f64>;
pub type FlatPortion = flatdetect::FlatPortion<f64>;
pub type FlatReport = flatdetect::FlatReport<f64>;
pub type FamilyParams = family::FamilyParams<f64>;
pub type FamilyPrediction = family::FamilyPrediction<f64>;
pub type BoundarySample = boundary::BoundarySample<f64>;
pub type Polyline = boundary::Polyline<f64>;
pub type Complex = Cx<f64>;
