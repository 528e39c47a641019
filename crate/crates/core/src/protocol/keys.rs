use rand::Rng;

use crate::error::AlgebraError;
use crate::matrix::{Conjugator, FactoredInvertible, Matrix};

use super::params::SchemeParams;

/// `(A, P = X⁻¹AX)`. `A` need not be invertible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicKey {
    pub a: Matrix,
    pub p: Matrix,
}

/// The factored conjugator `X`, kept together with the public base
/// matrix `A` so the prover can recompute challenges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrivateKey {
    pub x: FactoredInvertible,
    pub a: Matrix,
}

impl PrivateKey {
    pub fn public_key(&self) -> Result<PublicKey, AlgebraError> {
        Ok(PublicKey { a: self.a.clone(), p: self.x.conjugate(&self.a)? })
    }
}

/// Random `A` with `√d`-sparse entries, `X` with `m` uniform in the
/// configured range, and `P = X⁻¹AX`.
pub fn keygen<R: Rng + ?Sized>(
    sp: &SchemeParams,
    rng: &mut R,
) -> Result<(PublicKey, PrivateKey), AlgebraError> {
    sp.check()?;
    let sparsity = sp.sparsity();
    let a = Matrix::random(&sp.ring, sp.n, sparsity, rng);
    let m = rng.gen_range(sp.m_range.0..=sp.m_range.1) as usize;
    let x = FactoredInvertible::generate(&sp.ring, sp.n, m, sparsity, rng)?;
    let p = x.conjugate(&a)?;
    Ok((PublicKey { a: a.clone(), p }, PrivateKey { x, a }))
}
