//! Numeric primitives shared by the simulators and the key-rate calculators.

mod entropy;
mod random;
mod symplectic;

pub use entropy::{binary_entropy, g_entropy, ENTROPY_CLAMP_TOL};
pub use random::RandomSource;
pub use symplectic::{CovMatrix4, DEGENERATE_TOL};
