//! Reference implementations and statistical checks used to verify the
//! solvers: dense linear algebra, exhaustive sampler enumeration,
//! subgaussian constants, concentration and rate checks.

pub mod concentration;
pub mod dense;
pub mod rates;
pub mod sampling;

pub use dense::{dense_q, dense_solve, DEFAULT_DENSE_CAP};
