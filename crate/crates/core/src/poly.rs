//! Sparse polynomials in `Z_p[x_1..x_k]` modulo every monomial of total
//! degree `>= N`.
//!
//! A monomial is packed into a `u128` as `k + 1` equal-width fields, most
//! significant first: total degree, then the exponent of `x_1`, ..., `x_k`.
//! Each field holds values up to `2N - 2`, so the product of two monomials
//! is plain integer addition and integer order is graded-lex order.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::AlgebraError;
use crate::linalg::{inv_mod, is_prime};

/// Default cap on the total degree of randomly generated monomials.
pub const DEFAULT_MAX_GEN_DEGREE: u32 = 8;

/// Coefficient field, variable count and truncation degree of a ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RingSpec", into = "RingSpec")]
pub struct RingParams {
    modulus: u8,
    vars: u16,
    truncation: u32,
    max_gen_degree: u32,
    field_bits: u32,
}

#[derive(Serialize, Deserialize)]
struct RingSpec {
    modulus: u32,
    vars: usize,
    truncation: u32,
    max_gen_degree: Option<u32>,
}

impl TryFrom<RingSpec> for RingParams {
    type Error = AlgebraError;

    fn try_from(s: RingSpec) -> Result<Self, Self::Error> {
        match s.max_gen_degree {
            Some(cap) => RingParams::new(s.modulus, s.vars, s.truncation, cap),
            None => RingParams::with_default_cap(s.modulus, s.vars, s.truncation),
        }
    }
}

impl From<RingParams> for RingSpec {
    fn from(r: RingParams) -> Self {
        RingSpec {
            modulus: r.modulus as u32,
            vars: r.vars as usize,
            truncation: r.truncation,
            max_gen_degree: Some(r.max_gen_degree),
        }
    }
}

impl RingParams {
    pub fn new(
        modulus: u32,
        vars: usize,
        truncation: u32,
        max_gen_degree: u32,
    ) -> Result<Self, AlgebraError> {
        if !(2..256).contains(&modulus) || !is_prime(modulus) {
            return Err(AlgebraError::InvalidParams(format!("modulus {modulus} must be a prime below 256")));
        }
        if vars == 0 || vars > u16::MAX as usize {
            return Err(AlgebraError::InvalidParams(format!("variable count {vars} out of range")));
        }
        if truncation < 2 || truncation > u16::MAX as u32 + 1 {
            return Err(AlgebraError::InvalidParams(format!(
                "truncation degree {truncation} out of range [2, 65536]"
            )));
        }
        if max_gen_degree == 0 || max_gen_degree >= truncation {
            return Err(AlgebraError::InvalidParams(format!(
                "generation degree cap {max_gen_degree} must lie in [1, {}]",
                truncation - 1
            )));
        }
        let largest = 2 * (truncation as u64 - 1);
        let field_bits = (64 - largest.leading_zeros()).max(1);
        if (vars as u64 + 1) * field_bits as u64 > 128 {
            return Err(AlgebraError::InvalidParams(format!(
                "k = {vars}, N = {truncation} needs {} bits per monomial (max 128)",
                (vars as u64 + 1) * field_bits as u64
            )));
        }
        Ok(Self { modulus: modulus as u8, vars: vars as u16, truncation, max_gen_degree, field_bits })
    }

    /// Ring with generation cap `min(8, N - 1)`.
    pub fn with_default_cap(modulus: u32, vars: usize, truncation: u32) -> Result<Self, AlgebraError> {
        let cap = DEFAULT_MAX_GEN_DEGREE.min(truncation.saturating_sub(1)).max(1);
        Self::new(modulus, vars, truncation, cap)
    }

    pub fn modulus(&self) -> u8 {
        self.modulus
    }

    pub fn vars(&self) -> usize {
        self.vars as usize
    }

    pub fn truncation(&self) -> u32 {
        self.truncation
    }

    pub fn max_gen_degree(&self) -> u32 {
        self.max_gen_degree
    }

    pub fn with_max_gen_degree(self, cap: u32) -> Result<Self, AlgebraError> {
        Self::new(self.modulus as u32, self.vars(), self.truncation, cap)
    }

    /// Number of monomials of degree `< N` in `k` variables,
    /// `C(N - 1 + k, k)`.
    pub fn monomial_count(&self) -> BigUint {
        binomial(self.truncation as u64 - 1 + self.vars as u64, self.vars as u64)
    }

    fn mask(&self) -> u128 {
        (1u128 << self.field_bits) - 1
    }

    fn shift(&self, field: usize) -> u32 {
        (self.vars as u32 - field as u32) * self.field_bits
    }

    /// Packs an exponent vector. Fails when the length is not `k` or the
    /// total degree reaches `N`.
    pub fn monomial(&self, exponents: &[u32]) -> Result<Monomial, AlgebraError> {
        if exponents.len() != self.vars() {
            return Err(AlgebraError::InvalidParams(format!(
                "monomial has {} exponents, ring has {} variables",
                exponents.len(),
                self.vars
            )));
        }
        let degree: u64 = exponents.iter().map(|&e| e as u64).sum();
        if degree >= self.truncation as u64 {
            return Err(AlgebraError::InvalidParams(format!(
                "monomial degree {degree} is not below N = {}",
                self.truncation
            )));
        }
        let mut packed = (degree as u128) << self.shift(0);
        for (j, &e) in exponents.iter().enumerate() {
            packed |= (e as u128) << self.shift(j + 1);
        }
        Ok(Monomial(packed))
    }

    /// The monomial `x_var` (0-based index).
    pub fn variable(&self, var: usize) -> Monomial {
        assert!(var < self.vars(), "variable index out of range");
        Monomial((1u128 << self.shift(0)) | (1u128 << self.shift(var + 1)))
    }

    pub fn degree(&self, m: Monomial) -> u32 {
        (m.0 >> self.shift(0)) as u32
    }

    pub fn exponent(&self, m: Monomial, var: usize) -> u32 {
        ((m.0 >> self.shift(var + 1)) & self.mask()) as u32
    }

    pub fn exponents(&self, m: Monomial) -> Vec<u32> {
        (0..self.vars()).map(|j| self.exponent(m, j)).collect()
    }

    /// Product of two monomials, `None` when it falls into the truncation
    /// ideal.
    #[inline]
    pub fn mono_mul(&self, a: Monomial, b: Monomial) -> Option<Monomial> {
        let s = Monomial(a.0 + b.0);
        (self.degree(s) < self.truncation).then_some(s)
    }

    fn add_coeff(&self, a: u8, b: u8) -> u8 {
        ((a as u16 + b as u16) % self.modulus as u16) as u8
    }
}

/// Exact binomial coefficient.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        // acc * (n - i) is divisible by i + 1 at every step
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// A monomial packed for one particular ring; `Ord` is graded-lex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(u128);

impl Monomial {
    pub const ONE: Monomial = Monomial(0);

    pub fn is_one(self) -> bool {
        self.0 == 0
    }
}

/// Element of the truncated ring, stored as strictly ascending
/// `(monomial, coefficient)` pairs with nonzero coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TruncatedPoly {
    ring: RingParams,
    terms: Vec<(Monomial, u8)>,
}

impl TruncatedPoly {
    pub fn zero(ring: RingParams) -> Self {
        Self { ring, terms: Vec::new() }
    }

    pub fn constant(ring: RingParams, c: u32) -> Self {
        let c = (c % ring.modulus as u32) as u8;
        let terms = if c == 0 { Vec::new() } else { vec![(Monomial::ONE, c)] };
        Self { ring, terms }
    }

    pub fn one(ring: RingParams) -> Self {
        Self::constant(ring, 1)
    }

    /// `c * x_var` (0-based variable index).
    pub fn variable(ring: RingParams, var: usize, c: u32) -> Self {
        let c = (c % ring.modulus as u32) as u8;
        if c == 0 {
            return Self::zero(ring);
        }
        Self { ring, terms: vec![(ring.variable(var), c)] }
    }

    /// Builds a polynomial from arbitrary terms: duplicates are merged,
    /// coefficients reduced mod p and terms of degree `>= N` dropped.
    pub fn from_terms<I>(ring: RingParams, terms: I) -> Result<Self, AlgebraError>
    where
        I: IntoIterator<Item = (Vec<u32>, u32)>,
    {
        let mut buf = TermBuffer::new();
        for (exps, c) in terms {
            if exps.len() != ring.vars() {
                return Err(AlgebraError::InvalidParams(format!(
                    "monomial has {} exponents, ring has {} variables",
                    exps.len(),
                    ring.vars()
                )));
            }
            let degree: u64 = exps.iter().map(|&e| e as u64).sum();
            if degree >= ring.truncation as u64 {
                continue;
            }
            buf.push(ring.monomial(&exps)?, c % ring.modulus as u32);
        }
        Ok(buf.finish(ring))
    }

    /// Wraps terms that are already sorted, merged and reduced.
    pub(crate) fn from_canonical(ring: RingParams, terms: Vec<(Monomial, u8)>) -> Self {
        debug_assert!(terms.windows(2).all(|w| w[0].0 < w[1].0));
        Self { ring, terms }
    }

    pub fn ring(&self) -> &RingParams {
        &self.ring
    }

    pub fn terms(&self) -> &[(Monomial, u8)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn constant_term(&self) -> u8 {
        match self.terms.first() {
            Some(&(m, c)) if m.is_one() => c,
            _ => 0,
        }
    }

    pub fn coeff(&self, m: Monomial) -> u8 {
        self.terms.binary_search_by_key(&m, |t| t.0).map_or(0, |i| self.terms[i].1)
    }

    /// Highest total degree present, `None` for zero.
    pub fn degree(&self) -> Option<u32> {
        self.terms.last().map(|&(m, _)| self.ring.degree(m))
    }

    /// Lowest total degree present, `None` for zero.
    pub fn min_degree(&self) -> Option<u32> {
        self.terms.first().map(|&(m, _)| self.ring.degree(m))
    }

    /// True when no term mentions `x_var`.
    pub fn avoids_variable(&self, var: usize) -> bool {
        self.terms.iter().all(|&(m, _)| self.ring.exponent(m, var) == 0)
    }

    fn check(&self, other: &Self) -> Result<(), AlgebraError> {
        if self.ring == other.ring {
            Ok(())
        } else {
            Err(AlgebraError::ParamMismatch)
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check(other)?;
        Ok(self.add_unchecked(other))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check(other)?;
        Ok(self.add_unchecked(&other.neg()))
    }

    pub(crate) fn add_unchecked(&self, other: &Self) -> Self {
        let ring = self.ring;
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.terms, &other.terms);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let c = ring.add_coeff(a[i].1, b[j].1);
                    if c != 0 {
                        out.push((a[i].0, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Self { ring, terms: out }
    }

    pub fn neg(&self) -> Self {
        let p = self.ring.modulus;
        Self { ring: self.ring, terms: self.terms.iter().map(|&(m, c)| (m, p - c)).collect() }
    }

    pub fn mul(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &Self) -> Self {
        if let Some(prod) = crate::dense::try_mul(self, other) {
            return prod;
        }
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        if small.len() <= MERGE_LIMIT {
            return merge_mul(small, large);
        }
        let mut buf = TermBuffer::with_capacity(self.len().saturating_mul(other.len()).min(1 << 20));
        buf.push_product(self, other);
        buf.finish(self.ring)
    }

    /// Multiplies every coefficient by `c mod p`.
    pub fn scale(&self, c: u32) -> Self {
        let p = self.ring.modulus as u32;
        let c = c % p;
        if c == 0 {
            return Self::zero(self.ring);
        }
        Self {
            ring: self.ring,
            terms: self.terms.iter().map(|&(m, a)| (m, (a as u32 * c % p) as u8)).collect(),
        }
    }

    /// `self^e` by repeated squaring; `e = 0` gives one.
    pub fn pow(&self, mut e: u64) -> Self {
        let mut result = Self::one(self.ring);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_unchecked(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_unchecked(&base);
            }
        }
        result
    }

    /// The ring is local: units are exactly the elements with a nonzero
    /// constant term.
    pub fn is_unit(&self) -> bool {
        self.constant_term() != 0
    }

    /// Inverse of a unit via `c (1 - u)` ↦ `c^-1 (1 + u + u^2 + ...)`,
    /// which terminates because `u` is nilpotent.
    pub fn inverse(&self) -> Option<Self> {
        let c = self.constant_term();
        let c_inv = inv_mod(c, self.ring.modulus)? as u32;
        // u = 1 - c^-1 * self, which has zero constant term
        let normalized = self.scale(c_inv);
        let u = Self::one(self.ring).add_unchecked(&normalized.neg());
        let mut sum = Self::one(self.ring);
        let mut power = u.clone();
        while !power.is_zero() {
            sum = sum.add_unchecked(&power);
            power = power.mul_unchecked(&u);
        }
        Some(sum.scale(c_inv))
    }

    /// Re-sorts and merges the stored terms. Canonical inputs come back
    /// unchanged.
    pub fn normalized(&self) -> Self {
        let mut buf = TermBuffer::new();
        for &(m, c) in &self.terms {
            buf.push(m, c as u32);
        }
        buf.finish(self.ring)
    }
}

impl fmt::Display for TruncatedPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, &(m, c)) in self.terms.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            let exps = self.ring.exponents(m);
            let factors: Vec<String> = exps
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(j, &e)| if e == 1 { format!("x{}", j + 1) } else { format!("x{}^{}", j + 1, e) })
                .collect();
            if factors.is_empty() {
                write!(f, "{c}")?;
            } else if c == 1 {
                write!(f, "{}", factors.join("*"))?;
            } else {
                write!(f, "{c}*{}", factors.join("*"))?;
            }
        }
        Ok(())
    }
}

/// Products whose shorter factor has at most this many terms are merged
/// rather than sorted.
const MERGE_LIMIT: usize = 16;

/// `small · large` as a running merge of shifted copies of `large`.
/// Shifting by a monomial preserves graded-lex order and truncation only
/// cuts a suffix, so every copy is already sorted.
fn merge_mul(small: &TruncatedPoly, large: &TruncatedPoly) -> TruncatedPoly {
    let ring = small.ring;
    let p = ring.modulus as u32;
    let n = ring.truncation;
    let mut acc: Vec<(Monomial, u8)> = Vec::new();
    let mut next: Vec<(Monomial, u8)> = Vec::with_capacity(large.len());
    for &(ms, cs) in &small.terms {
        let ds = ring.degree(ms);
        let shifted = large
            .terms
            .iter()
            .take_while(|&&(m, _)| ds + ring.degree(m) < n)
            .map(|&(m, c)| (Monomial(m.0 + ms.0), (c as u32 * cs as u32 % p) as u8));
        next.clear();
        let mut old = acc.iter().copied().peekable();
        for (m, c) in shifted {
            while let Some(&(mo, co)) = old.peek() {
                if mo >= m {
                    break;
                }
                next.push((mo, co));
                old.next();
            }
            match old.peek() {
                Some(&(mo, co)) if mo == m => {
                    old.next();
                    let sum = (co as u32 + c as u32) % p;
                    if sum != 0 {
                        next.push((m, sum as u8));
                    }
                }
                _ => next.push((m, c)),
            }
        }
        next.extend(old);
        std::mem::swap(&mut acc, &mut next);
    }
    TruncatedPoly { ring, terms: acc }
}

/// Unsorted scratch space for accumulating products before canonicalizing.
#[derive(Debug, Default)]
pub(crate) struct TermBuffer {
    terms: Vec<(Monomial, u32)>,
}

impl TermBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(cap: usize) -> Self {
        Self { terms: Vec::with_capacity(cap) }
    }

    pub fn push(&mut self, m: Monomial, c: u32) {
        if c != 0 {
            self.terms.push((m, c));
        }
    }

    pub fn extend_poly(&mut self, a: &TruncatedPoly) {
        self.terms.extend(a.terms.iter().map(|&(m, c)| (m, c as u32)));
    }

    /// Pushes every term of `a * b` below the truncation degree.
    pub fn push_product(&mut self, a: &TruncatedPoly, b: &TruncatedPoly) {
        let ring = a.ring;
        let n = ring.truncation;
        for &(ma, ca) in &a.terms {
            let da = ring.degree(ma);
            for &(mb, cb) in &b.terms {
                // b is sorted by degree, so the rest is truncated too
                if da + ring.degree(mb) >= n {
                    break;
                }
                self.terms.push((Monomial(ma.0 + mb.0), ca as u32 * cb as u32));
            }
        }
    }

    /// Pushes `scalar * a * b`.
    pub fn push_scaled_product(&mut self, scalar: u32, a: &TruncatedPoly, b: &TruncatedPoly) {
        let start = self.terms.len();
        self.push_product(a, b);
        if scalar != 1 {
            let p = a.ring.modulus as u32;
            for t in &mut self.terms[start..] {
                t.1 = (t.1 % p) * scalar % p;
            }
        }
    }

    pub fn finish(mut self, ring: RingParams) -> TruncatedPoly {
        let p = ring.modulus as u64;
        self.terms.sort_unstable_by_key(|t| t.0);
        let mut out: Vec<(Monomial, u8)> = Vec::new();
        let mut iter = self.terms.into_iter().peekable();
        while let Some((m, c)) = iter.next() {
            let mut acc = c as u64;
            while let Some(&(m2, c2)) = iter.peek() {
                if m2 != m {
                    break;
                }
                acc += c2 as u64;
                iter.next();
            }
            let c = (acc % p) as u8;
            if c != 0 {
                out.push((m, c));
            }
        }
        TruncatedPoly { ring, terms: out }
    }
}

/// Uniform weak composition of `total` into `parts` non-negative integers.
fn weak_composition<R: Rng + ?Sized>(rng: &mut R, total: u32, parts: usize) -> Vec<u32> {
    if parts == 1 {
        return vec![total];
    }
    // stars and bars: choose the positions of parts-1 bars among total+parts-1 slots
    let slots = total as usize + parts - 1;
    let mut bars = sample(rng, slots, parts - 1).into_vec();
    bars.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut prev: isize = -1;
    for &b in &bars {
        out.push((b as isize - prev - 1) as u32);
        prev = b as isize;
    }
    out.push((slots as isize - prev - 1) as u32);
    out
}

/// Random monomial supported on `vars` whose total degree is uniform in
/// `[min_degree, max_degree]`, with a uniform exponent composition.
pub(crate) fn random_monomial<R: Rng + ?Sized>(
    ring: &RingParams,
    vars: &[usize],
    min_degree: u32,
    max_degree: u32,
    rng: &mut R,
) -> Monomial {
    let degree = rng.gen_range(min_degree..=max_degree);
    let parts = weak_composition(rng, degree, vars.len());
    let mut exps = vec![0u32; ring.vars()];
    for (&v, e) in vars.iter().zip(parts) {
        exps[v] = e;
    }
    ring.monomial(&exps).expect("degree below truncation")
}

pub(crate) fn random_poly_over<R: Rng + ?Sized>(
    ring: &RingParams,
    sparsity: usize,
    vars: &[usize],
    min_degree: u32,
    max_degree: u32,
    rng: &mut R,
) -> TruncatedPoly {
    let mut buf = TermBuffer::with_capacity(sparsity);
    for _ in 0..sparsity {
        let m = random_monomial(ring, vars, min_degree, max_degree, rng);
        let c = rng.gen_range(1..ring.modulus as u32);
        buf.push(m, c);
    }
    buf.finish(*ring)
}

/// Up to `sparsity` random terms with uniform nonzero coefficients. Total
/// degrees are uniform in `[0, cap]` (or `[1, cap]` without constants),
/// where `cap` is the ring's generation degree cap. Repeated monomials
/// merge, so fewer terms may come back.
pub fn random_sparse_poly<R: Rng + ?Sized>(
    ring: &RingParams,
    sparsity: usize,
    allow_constant: bool,
    rng: &mut R,
) -> TruncatedPoly {
    let vars: Vec<usize> = (0..ring.vars()).collect();
    let lo = if allow_constant { 0 } else { 1 };
    random_poly_over(ring, sparsity, &vars, lo, ring.max_gen_degree, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ring(k: usize, n: u32) -> RingParams {
        RingParams::with_default_cap(11, k, n).unwrap()
    }

    fn x(r: RingParams, j: usize, c: u32) -> TruncatedPoly {
        TruncatedPoly::variable(r, j, c)
    }

    #[test]
    fn rejects_bad_params() {
        assert!(RingParams::new(12, 2, 10, 3).is_err());
        assert!(RingParams::new(257, 2, 10, 3).is_err());
        assert!(RingParams::new(11, 0, 10, 3).is_err());
        assert!(RingParams::new(11, 2, 10, 10).is_err());
        assert!(RingParams::new(11, 2, 10, 0).is_err());
        assert!(RingParams::new(11, 2, 1, 1).is_err());
        assert!(RingParams::new(2, 1, 2, 1).is_ok());
        assert!(RingParams::new(11, 10, 1000, 8).is_ok());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), BigUint::from(10u32));
        assert_eq!(binomial(3, 1), BigUint::from(3u32));
        assert_eq!(binomial(2, 3), BigUint::zero());
        // computed independently with Python's math.comb
        assert_eq!(binomial(1010, 10).to_string(), "291098519807782284023426");
    }

    #[test]
    fn graded_lex_order() {
        let r = ring(2, 10);
        let one = r.monomial(&[0, 0]).unwrap();
        let x1 = r.monomial(&[1, 0]).unwrap();
        let x2 = r.monomial(&[0, 1]).unwrap();
        let x1x2 = r.monomial(&[1, 1]).unwrap();
        let x1sq = r.monomial(&[2, 0]).unwrap();
        assert!(one < x2 && x2 < x1 && x1 < x1x2 && x1x2 < x1sq);
        assert_eq!(r.exponents(x1x2), vec![1, 1]);
        assert_eq!(r.degree(x1sq), 2);
    }

    #[test]
    fn addition_examples() {
        let r = ring(2, 10);
        let a = x(r, 0, 3).add(&x(r, 1, 5)).unwrap();
        assert_eq!(a.add(&TruncatedPoly::zero(r)).unwrap(), a);
        assert!(x(r, 0, 3).add(&x(r, 0, 8)).unwrap().is_zero());
        let sum = a.add(&x(r, 1, 2)).unwrap();
        let expected = x(r, 0, 3).add(&x(r, 1, 7)).unwrap();
        assert_eq!(sum, expected);
    }

    #[test]
    fn mismatched_rings_rejected() {
        let a = x(ring(2, 10), 0, 1);
        let b = x(ring(3, 10), 0, 1);
        assert_eq!(a.add(&b), Err(AlgebraError::ParamMismatch));
        assert_eq!(a.mul(&b), Err(AlgebraError::ParamMismatch));
    }

    #[test]
    fn multiplication_examples() {
        let r = ring(2, 3);
        let a = x(r, 0, 3).add(&x(r, 1, 5)).unwrap();
        let prod = a.mul(&x(r, 0, 2)).unwrap();
        let expected = TruncatedPoly::from_terms(r, [(vec![2, 0], 6), (vec![1, 1], 10)]).unwrap();
        assert_eq!(prod, expected);

        let r2 = ring(2, 2);
        let a2 = x(r2, 0, 3).add(&x(r2, 1, 5)).unwrap();
        assert!(a2.mul(&x(r2, 0, 2)).unwrap().is_zero());
    }

    #[test]
    fn truncation_boundary() {
        let r = ring(1, 7);
        let top = TruncatedPoly::from_terms(r, [(vec![6], 1)]).unwrap();
        assert!(top.mul(&x(r, 0, 1)).unwrap().is_zero());
        assert!(x(r, 0, 1).pow(7).is_zero());
        assert!(!x(r, 0, 1).pow(6).is_zero());
    }

    #[test]
    fn scalar_examples() {
        let r = ring(2, 10);
        let a = x(r, 0, 3).add(&x(r, 1, 5)).unwrap();
        assert_eq!(a.scale(1), a);
        assert!(a.scale(0).is_zero());
        assert_eq!(x(r, 0, 3).scale(4), x(r, 0, 1));
    }

    #[test]
    fn unit_examples() {
        let r = ring(2, 10);
        assert!(TruncatedPoly::constant(r, 5).is_unit());
        assert!(!x(r, 0, 1).is_unit());
        assert!(!TruncatedPoly::zero(r).is_unit());
        assert!(x(r, 0, 1).inverse().is_none());
    }

    #[test]
    fn inverse_of_one_plus_x() {
        let r = ring(1, 5);
        let a = TruncatedPoly::one(r).add(&x(r, 0, 1)).unwrap();
        let inv = a.inverse().unwrap();
        // 1 - x + x^2 - x^3 + x^4
        let expected = TruncatedPoly::from_terms(
            r,
            [(vec![0], 1), (vec![1], 10), (vec![2], 1), (vec![3], 10), (vec![4], 1)],
        )
        .unwrap();
        assert_eq!(inv, expected);
        assert_eq!(a.mul(&inv).unwrap(), TruncatedPoly::one(r));
    }

    #[test]
    fn from_terms_merges_and_drops() {
        let r = ring(2, 4);
        let p = TruncatedPoly::from_terms(
            r,
            [(vec![1, 0], 5), (vec![1, 0], 6), (vec![0, 4], 3), (vec![0, 0], 22)],
        )
        .unwrap();
        assert!(p.is_zero());
    }

    #[test]
    fn display() {
        let r = ring(2, 10);
        let p = TruncatedPoly::from_terms(r, [(vec![0, 0], 7), (vec![2, 1], 3), (vec![0, 1], 1)]).unwrap();
        assert_eq!(p.to_string(), "7 + x2 + 3*x1^2*x2");
    }

    #[test]
    fn random_poly_contract() {
        let r = ring(2, 1000);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let p = random_sparse_poly(&r, 3, true, &mut rng);
            assert!(p.len() <= 3);
            assert!(p.terms().iter().all(|&(_, c)| (1..=10).contains(&c)));
            assert!(p.degree().unwrap_or(0) <= 8);
        }
    }

    #[test]
    fn random_poly_is_deterministic() {
        let r = ring(4, 64);
        let a = random_sparse_poly(&r, 5, true, &mut ChaCha8Rng::seed_from_u64(99));
        let b = random_sparse_poly(&r, 5, true, &mut ChaCha8Rng::seed_from_u64(99));
        assert_eq!(a, b);
    }

    #[test]
    fn no_constant_when_disallowed() {
        let r = ring(3, 64);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let p = random_sparse_poly(&r, 5, false, &mut rng);
            assert_eq!(p.constant_term(), 0);
        }
    }

    #[test]
    fn weak_compositions_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for total in 0..10 {
            for parts in 1..5 {
                let c = weak_composition(&mut rng, total, parts);
                assert_eq!(c.len(), parts);
                assert_eq!(c.iter().sum::<u32>(), total);
            }
        }
    }

    #[test]
    fn weak_composition_is_uniform() {
        // compositions of 2 into 2 parts: (0,2), (1,1), (2,0), each 1/3
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = [0u32; 3];
        for _ in 0..30_000 {
            counts[weak_composition(&mut rng, 2, 2)[0] as usize] += 1;
        }
        for c in counts {
            assert!((9_000..11_000).contains(&c), "{counts:?}");
        }
    }
}
