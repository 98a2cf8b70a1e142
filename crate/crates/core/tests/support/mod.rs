//! Shared helpers for integration tests.

pub mod bessel_oracle;
pub mod quad_oracle;
