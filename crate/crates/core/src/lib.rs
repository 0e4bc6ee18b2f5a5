//! Numerical laboratory for multiplicative functions with small partial sums.
//!
//! The crate is organised bottom-up:
//!
//! - [`primes`]: segmented sieves, smallest-prime-factor blocks, Mertens products.
//! - [`multfun`]: rule-based multiplicative functions, `Λ_f`, inverses, convolution.
//! - [`sums`]: partial sums, sifted sums and prime sums with ordered compensated reduction.
//! - [`lseries`]: truncated Dirichlet series, Euler products, continuation and zero finding near `s = 1`.
//! - [`structure`]: transition points, the bounded-interval verifier and the heuristic integrals.
//! - [`gallery`]: example functions with analytically known metadata.
//! - [`oracle`]: brute-force reference implementations and frozen constants.
//! - [`cli`]: function-spec mini-language, configuration and the command surface.

pub mod cli;
pub mod error;
pub mod gallery;
pub mod lseries;
pub mod multfun;
pub mod numeric;
pub mod oracle;
pub mod primes;
pub mod structure;
pub mod sums;

pub use error::{Error, Result};
pub use num_complex::Complex64;
