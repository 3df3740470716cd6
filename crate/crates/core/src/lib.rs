//! Exact arithmetic for lattice functions on hermitian spaces over local
//! division algebras.
//!
//! The crate models a local field of Laurent series over a finite field,
//! tamely ramified extensions, quaternion algebras, and hermitian lattice
//! chains, entirely in exact arithmetic with explicit precision tracking.
//! On top of that sit the verification suites exercised by the CLI: duality
//! of lattice functions, descent to centralizers of embedded fields,
//! extension of hermitian forms, same-type conjugation witnesses, and the
//! tame extension property.

pub mod algebra;
pub mod arith;
pub mod error;
pub mod extension;
pub mod fq;
pub mod kmat;
pub mod latfun;
pub mod lattice;
pub mod hermitian;
pub mod norms;
pub mod random;
pub mod tensor;
pub mod witt;

pub use error::{Error, Result};
