//! Dimension-incremental detection of sparse Chebyshev expansions for
//! parametric differential-equation solutions sampled as black boxes.

pub mod approximant;
pub mod basis;
pub mod detector;
pub mod evaluation;
pub mod index_set;
mod linalg;
pub mod oracles;
pub mod reconstruction;
mod sampling;

pub use num_complex::Complex64;
