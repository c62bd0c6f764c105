//! Semi-integral points on orbifold models over the integers, local invariants
//! of quaternion Brauer classes, and Brauer–Manin obstruction checks.

pub mod arith;
pub mod brauer;
pub mod census;
pub mod error;
pub mod localfields;
pub mod model_io;
pub mod orbifold;
pub mod poly;
pub mod registry;

pub use error::{Error, Result};
