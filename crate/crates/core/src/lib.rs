//! Structured operators on ℓ², their Schauder spectra, and explicit unitary
//! "deflations" that empty the Schauder spectrum, with checkable certificates.
//!
//! Module map:
//! - [`index_maps`]: permutations of ℕ, spreads, multiplicity lists
//! - [`sequence`]: weight sequence rules with limits and tail bounds
//! - [`op_algebra`]: lazy operator expression trees with exact entries
//! - [`spectral`]: eigenvalue-exclusion certificates, products, Shields test, dense eigensolver
//! - [`schauder`]: Schauder predicates, spectra, classification, deflation

pub mod error;
pub mod index_maps;
pub mod op_algebra;
pub mod par;
pub mod scalar;
pub mod schauder;
pub mod sequence;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Scalar;
