//! Finite-dimensional linear algebra: dense helpers and symplectic primitives.

pub mod banded;
pub mod dense;
pub mod symplectic;

pub use banded::*;
pub use dense::*;
pub use symplectic::*;
