//! Exact computations for Landau–Ginzburg mirror symmetry of invertible polynomials.
//!
//! The crate works over exact rationals throughout. A polynomial is parsed and
//! decomposed into Fermat, chain and loop blocks ([`poly`]), its weights and
//! diagonal symmetry group are derived ([`weights`]), the Milnor ring of the
//! transposed polynomial is built with its residue pairing ([`milnor`]), and the
//! mirror map transports that Frobenius algebra onto the twisted state space
//! ([`mirror`]). Genus-zero correlators are handled by [`correlator`] and
//! [`reconstruction`].
//!
//! ```
//! use lgmirror_core::Model;
//!
//! let model = Model::from_text("x1^2*x2 + x2^2").unwrap();
//! assert_eq!(model.dual().to_string(), "x1^2 + x1*x2^2");
//! assert_eq!(model.ring().dim(), 3);
//! ```

#![allow(clippy::needless_range_loop)]

pub mod catalog;
pub mod correlator;
pub mod error;
pub mod linalg;
pub mod milnor;
pub mod mirror;
pub mod model;
pub mod poly;
pub mod rational;
pub mod reconstruction;
pub mod sparse;
pub mod verify;
pub mod weights;

pub use error::{Error, PolyError, Result};
pub use linalg::Field;
pub use model::Model;
pub use rational::Q;
