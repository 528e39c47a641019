//! The linear attack: solve `XP = AX` for `X`, then look for an invertible
//! solution.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::Rng;
use thiserror::Error;

use crate::error::AlgebraError;
use crate::linalg::ModMatrix;
use crate::matrix::{Conjugator, DenseConjugator, Matrix};
use crate::poly::{binomial, Monomial, RingParams, TruncatedPoly};
use crate::protocol::PublicKey;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AttackError {
    #[error(
        "system would have {equations} equations in {unknowns} unknowns, over the budget of {budget} cells"
    )]
    TooLarge { equations: BigUint, unknowns: BigUint, budget: u64 },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Equation and unknown counts of the full system: one equation per
/// entry position and monomial of degree below `N`, one unknown per entry
/// of `X` and monomial of degree at most `degree_cap`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemSize {
    pub equations: BigUint,
    pub unknowns: BigUint,
}

pub fn system_size(ring: &RingParams, n: usize, degree_cap: u32) -> SystemSize {
    let k = ring.vars() as u64;
    let cap = degree_cap.min(ring.truncation() - 1) as u64;
    let n2 = BigUint::from((n * n) as u64);
    SystemSize { equations: &n2 * ring.monomial_count(), unknowns: &n2 * binomial(cap + k, k) }
}

/// Coefficient equations of `XP - AX = 0` over `Z_p`.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub ring: RingParams,
    pub n: usize,
    pub matrix: ModMatrix,
    /// Column `c` is the coefficient of `unknowns[c].2` in `X[i][j]`.
    pub unknowns: Vec<(usize, usize, Monomial)>,
    /// Row `r` equates the coefficient of `equations[r].2` in entry `(i, j)`.
    pub equations: Vec<(usize, usize, Monomial)>,
}

/// Every monomial of total degree at most `cap`, ascending.
pub fn monomials_up_to(ring: &RingParams, cap: u32) -> Vec<Monomial> {
    fn rec(ring: &RingParams, exps: &mut Vec<u32>, var: usize, left: u32, out: &mut Vec<Monomial>) {
        if var == exps.len() {
            out.push(ring.monomial(exps).expect("degree below N"));
            return;
        }
        for e in 0..=left {
            exps[var] = e;
            rec(ring, exps, var + 1, left - e, out);
        }
        exps[var] = 0;
    }
    let mut out = Vec::new();
    rec(ring, &mut vec![0; ring.vars()], 0, cap.min(ring.truncation() - 1), &mut out);
    out.sort_unstable();
    out
}

/// Builds the system for unknown monomials of degree at most
/// `degree_cap`. Only equations that some unknown touches are kept; the
/// rest read `0 = 0`. Fails without building anything when the dense
/// system would exceed `budget` cells.
pub fn build_linear_system(
    public: &PublicKey,
    degree_cap: u32,
    budget: u64,
) -> Result<LinearSystem, AttackError> {
    let ring = *public.a.ring();
    let n = public.a.dim();
    if public.p.dim() != n || *public.p.ring() != ring {
        return Err(AlgebraError::ParamMismatch.into());
    }
    let size = system_size(&ring, n, degree_cap);
    let too_large = |size: SystemSize| AttackError::TooLarge {
        equations: size.equations,
        unknowns: size.unknowns,
        budget,
    };
    if size.unknowns.to_u64().is_none_or(|u| u > budget) {
        return Err(too_large(size));
    }
    let monos = monomials_up_to(&ring, degree_cap);
    let mut unknowns = Vec::with_capacity(n * n * monos.len());
    for i in 0..n {
        for j in 0..n {
            unknowns.extend(monos.iter().map(|&m| (i, j, m)));
        }
    }
    let col = |i: usize, j: usize, m: usize| (i * n + j) * monos.len() + m;
    let p = ring.modulus() as u32;

    // (i, j, μ) -> column -> coefficient
    let mut rows: BTreeMap<(usize, usize, Monomial), BTreeMap<usize, u32>> = BTreeMap::new();
    let mut add = |key, c: usize, v: u32| {
        let e = rows.entry(key).or_default().entry(c).or_insert(0);
        *e = (*e + v) % p;
    };
    for (mi, &nu) in monos.iter().enumerate() {
        for i in 0..n {
            for l in 0..n {
                // X[i][l] * P[l][j] contributes to (i, j)
                for j in 0..n {
                    for &(sigma, c) in public.p.get(l, j).terms() {
                        if let Some(mu) = ring.mono_mul(nu, sigma) {
                            add((i, j, mu), col(i, l, mi), c as u32);
                        }
                    }
                }
                // -A[l][i] * X[i][j'] contributes to (l, j')
                for j in 0..n {
                    for &(sigma, c) in public.a.get(l, i).terms() {
                        if let Some(mu) = ring.mono_mul(nu, sigma) {
                            add((l, j, mu), col(i, j, mi), p - c as u32);
                        }
                    }
                }
            }
        }
    }
    let cells = rows.len() as u64 * unknowns.len() as u64;
    if cells > budget {
        return Err(too_large(SystemSize {
            equations: BigUint::from(rows.len()),
            unknowns: BigUint::from(unknowns.len()),
        }));
    }
    let mut matrix = ModMatrix::zeros(rows.len(), unknowns.len(), ring.modulus());
    let mut equations = Vec::with_capacity(rows.len());
    for (r, (key, entries)) in rows.into_iter().enumerate() {
        equations.push(key);
        for (c, v) in entries {
            matrix.set(r, c, v as u8);
        }
    }
    Ok(LinearSystem { ring, n, matrix, unknowns, equations })
}

impl LinearSystem {
    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }

    /// The matrix whose unknown coefficients are `v`.
    pub fn matrix_from(&self, v: &[u8]) -> Matrix {
        let k = self.ring.vars();
        let mut entries: Vec<Vec<(Vec<u32>, u32)>> = vec![Vec::new(); self.n * self.n];
        for (&(i, j, m), &c) in self.unknowns.iter().zip(v) {
            if c != 0 {
                entries[i * self.n + j].push((self.ring.exponents(m), c as u32));
            }
        }
        let entries = entries
            .into_iter()
            .map(|terms| {
                debug_assert!(terms.iter().all(|t| t.0.len() == k));
                TruncatedPoly::from_terms(self.ring, terms).expect("exponents fit the ring")
            })
            .collect();
        Matrix::from_entries(self.ring, self.n, entries).expect("n² entries")
    }

    /// Coefficients of `x` on the unknowns, or `None` when `x` has a term
    /// the system does not model.
    pub fn vector_of(&self, x: &Matrix) -> Option<Vec<u8>> {
        let index: BTreeMap<(usize, usize, Monomial), usize> =
            self.unknowns.iter().enumerate().map(|(c, &key)| (key, c)).collect();
        let mut v = vec![0u8; self.cols()];
        for i in 0..self.n {
            for j in 0..self.n {
                for &(m, c) in x.get(i, j).terms() {
                    v[*index.get(&(i, j, m))?] = c;
                }
            }
        }
        Some(v)
    }

    /// True when `v` satisfies every equation.
    pub fn satisfied_by(&self, v: &[u8]) -> bool {
        self.matrix.mul_vec(v).iter().all(|&x| x == 0)
    }
}

/// Basis of the solution space of `XP - AX = 0`.
pub fn solve_nullspace(sys: &LinearSystem) -> Vec<Vec<u8>> {
    sys.matrix.nullspace()
}

/// True when `v` is a `Z_p`-combination of `basis`.
pub fn in_span(basis: &[Vec<u8>], v: &[u8], modulus: u8) -> bool {
    if basis.is_empty() {
        return v.iter().all(|&x| x == 0);
    }
    let mut m = ModMatrix::zeros(v.len(), basis.len(), modulus);
    for (c, b) in basis.iter().enumerate() {
        for (r, &x) in b.iter().enumerate() {
            m.set(r, c, x);
        }
    }
    m.solve(v).is_some_and(|x| m.mul_vec(&x) == v)
}

/// Outcome of the randomized search for an invertible solution.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub conjugator: Option<DenseConjugator>,
    pub attempts: usize,
}

/// Tries up to `budget` random combinations of `basis`. A candidate is
/// returned only after checking `X'⁻¹AX' = P` exactly.
pub fn find_invertible_solution<R: Rng + ?Sized>(
    sys: &LinearSystem,
    basis: &[Vec<u8>],
    public: &PublicKey,
    budget: usize,
    rng: &mut R,
) -> SearchOutcome {
    let p = sys.ring.modulus();
    if basis.is_empty() {
        return SearchOutcome { conjugator: None, attempts: 0 };
    }
    for attempt in 1..=budget {
        let mut v = vec![0u32; sys.cols()];
        for b in basis {
            let s = rng.gen_range(0..p) as u32;
            if s == 0 {
                continue;
            }
            for (acc, &x) in v.iter_mut().zip(b) {
                *acc = (*acc + s * x as u32) % p as u32;
            }
        }
        let v: Vec<u8> = v.into_iter().map(|x| x as u8).collect();
        let candidate = sys.matrix_from(&v);
        if !candidate.is_invertible() {
            continue;
        }
        let Some(conj) = DenseConjugator::new(candidate) else {
            continue;
        };
        if conj.conjugate(&public.a).is_ok_and(|q| q == public.p) {
            return SearchOutcome { conjugator: Some(conj), attempts: attempt };
        }
    }
    SearchOutcome { conjugator: None, attempts: budget }
}
