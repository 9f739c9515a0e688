//! Numerical laboratory for free graph algebras.
//!
//! A weighted pointed graph determines a Fock space of paths, an algebra of
//! loops at the basepoint with its Wick-word basis, and a number operator.
//! The modules here build those objects, estimate the number-operator
//! Lip-seminorms and their adjusted variant, compare Lip-balls across graphs
//! by Hausdorff distance, and run the planar Temperley-Lieb-Jones checks.

pub mod convex;
pub mod error;
pub mod fock;
pub mod graph;
pub mod linalg;
pub mod loops;
pub mod seminorms;
pub mod tlj;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Default cap on the number of basis elements any enumeration may create.
pub const DEFAULT_BUDGET: usize = 4_000_000;
