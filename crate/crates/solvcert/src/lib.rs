pub mod boundary;
pub mod certificates;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod network;
pub mod quadratic;
pub mod tolerances;

#[cfg(test)]
pub(crate) mod testutil;

pub use num_complex::Complex64;
