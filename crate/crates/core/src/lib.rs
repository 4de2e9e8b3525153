//! Exact-arithmetic toolkit for Eisenstein congruences and reducible mod-l
//! modular Galois representations.
//!
//! - [`arith`]: big rationals, valuations, 64-bit factorization
//! - [`cyclotomic`]: exact arithmetic in `Q(zeta_n)`
//! - [`characters`]: Dirichlet characters, conductors, Gauss sums
//! - [`bernoulli`]: classical and generalized Bernoulli numbers
//! - [`qseries`]: truncated q-expansions, Hecke operators, Eisenstein series
//! - [`cusps`]: cusps of `X0(N)` and Eisenstein constant terms there
//! - [`criteria`]: level and weight criteria for `1 + chi_l^(k-1)`
//! - [`goldfeld`]: largest-prime-factor sieving and coefficient-field degree bounds
//! - [`scan`]: criterion sweeps over ranges of levels and primes

pub mod arith;
pub mod bernoulli;
pub mod characters;
pub mod criteria;
pub mod cusps;
pub mod cyclotomic;
pub mod error;
pub mod goldfeld;
pub mod qseries;
pub mod scan;

pub use error::{Error, Result};
