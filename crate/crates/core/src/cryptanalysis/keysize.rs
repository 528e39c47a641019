//! Key sizes: the information-count estimates against measured encodings.

use rand::Rng;

use crate::error::AlgebraError;
use crate::matrix::{FactoredInvertible, Matrix};
use crate::protocol::{keygen, SchemeParams};
use crate::wire::codec::{put_factored, put_matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct KeySizeReport {
    /// `√d · k · log₂N · n²` bits for one matrix.
    pub matrix_formula_bits: f64,
    /// `(d · k · log₂N + log₂n) · m` bits for a conjugator of `m` factors.
    pub private_formula_bits: f64,
    pub m: usize,
    /// Encoded size of a freshly generated random matrix.
    pub matrix_bytes: usize,
    /// Encoded size of a generated factored conjugator.
    pub private_bytes: usize,
    /// Encoded `A` and `P`; only measured on request because computing
    /// `P` is the expensive part of key generation.
    pub public_bytes: Option<usize>,
}

pub fn matrix_formula_bits(sp: &SchemeParams) -> f64 {
    let k = sp.ring.vars() as f64;
    let log_n = (sp.ring.truncation() as f64).log2();
    (sp.d as f64).sqrt() * k * log_n * (sp.n * sp.n) as f64
}

pub fn private_formula_bits(sp: &SchemeParams, m: usize) -> f64 {
    let k = sp.ring.vars() as f64;
    let log_n = (sp.ring.truncation() as f64).log2();
    (sp.d as f64 * k * log_n + (sp.n as f64).log2()) * m as f64
}

/// Evaluates both estimates and measures real encodings. The conjugator
/// gets `m` uniform in the configured range.
pub fn key_size_report<R: Rng + ?Sized>(
    sp: &SchemeParams,
    measure_public: bool,
    rng: &mut R,
) -> Result<KeySizeReport, AlgebraError> {
    let b = Matrix::random(&sp.ring, sp.n, sp.sparsity(), rng);
    let mut matrix_bytes = Vec::new();
    put_matrix(&mut matrix_bytes, &b);
    let (m, private_bytes, public_bytes) = if measure_public {
        let (public, private) = keygen(sp, rng)?;
        let mut pb = Vec::new();
        put_matrix(&mut pb, &public.a);
        put_matrix(&mut pb, &public.p);
        let mut xb = Vec::new();
        put_factored(&mut xb, &private.x);
        (private.x.factors().len(), xb.len(), Some(pb.len()))
    } else {
        let m = rng.gen_range(sp.m_range.0..=sp.m_range.1) as usize;
        let x = FactoredInvertible::generate(&sp.ring, sp.n, m, sp.sparsity(), rng)?;
        let mut xb = Vec::new();
        put_factored(&mut xb, &x);
        (m, xb.len(), None)
    };
    Ok(KeySizeReport {
        matrix_formula_bits: matrix_formula_bits(sp),
        private_formula_bits: private_formula_bits(sp, m),
        m,
        matrix_bytes: matrix_bytes.len(),
        private_bytes,
        public_bytes,
    })
}
