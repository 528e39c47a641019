//! Matrix-conjugation authentication over truncated multivariate
//! polynomial rings.
//!
//! The platform is the ring of `n × n` matrices whose entries are
//! polynomials in `k` variables over `Z_p`, taken modulo every monomial of
//! total degree `N` or more. A prover's public key is `(A, X⁻¹AX)`; the prover
//! proves knowledge of `X` by conjugating a challenge matrix after both
//! sides pass it through a verifier-chosen non-invertible endomorphism.

pub mod cryptanalysis;
mod dense;
pub mod endo;
pub mod error;
pub mod linalg;
pub mod matrix;
pub mod poly;
pub mod protocol;
pub mod rng;
pub mod wire;

pub use endo::Endomorphism;
pub use error::AlgebraError;
pub use matrix::{Conjugator, DenseConjugator, ElementaryFactor, FactoredInvertible, Letter, Matrix, Word};
pub use poly::{Monomial, RingParams, TruncatedPoly};
pub use protocol::params::SchemeParams;
