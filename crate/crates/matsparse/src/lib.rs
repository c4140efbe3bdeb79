//! Randomized sparsification of convex decompositions of matrices.
//!
//! A target matrix `A` written as a convex combination `A = Σ αᵢ Qᵢ` can often
//! be approximated in operator norm by the average of a small random
//! sub-multiset of the `Qᵢ`. This crate provides:
//!
//! - dense matrix arithmetic with operator and Schatten norms ([`matrix`]),
//! - decomposition data types and validators, including contact-pair data
//!   for John's position and its dimension lifting ([`decomp`]),
//! - seeded sampling experiments that measure the approximation error and
//!   search for good sub-multisets ([`sampling`]),
//! - explicit constructions: Walsh matrices, the diagonal family showing the
//!   logarithmic sample-size factor is necessary, the cube/simplex contact
//!   configuration, and the symmetrization counterexample ([`constructions`]),
//! - verifiers that certify lower bounds on the best achievable error over
//!   bounded-size sub-multisets and supports ([`verifiers`]).
//!
//! All randomized routines take explicit seeds and produce identical results
//! for identical inputs, with or without the `parallel` feature.

pub mod calibrate;
pub mod constructions;
pub mod decomp;
pub mod eigen;
pub mod error;
pub mod matrix;
pub mod multiset;
pub mod par;
pub mod sampling;
pub mod verifiers;

pub use error::{Error, Result};
pub use matrix::{outer, Matrix};
pub use multiset::Multiset;
