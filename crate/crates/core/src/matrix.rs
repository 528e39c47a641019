//! `n × n` matrices over the truncated polynomial ring, elementary-factor
//! private keys and word evaluation.

use std::fmt;

use num_bigint::BigUint;
use rand::Rng;

use crate::dense;
use crate::endo::Endomorphism;
use crate::error::AlgebraError;
use crate::linalg::ModMatrix;
use crate::poly::{random_sparse_poly, RingParams, TermBuffer, TruncatedPoly};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    n: usize,
    ring: RingParams,
    entries: Vec<TruncatedPoly>,
}

impl Matrix {
    pub fn zero(ring: RingParams, n: usize) -> Self {
        Self { n, ring, entries: vec![TruncatedPoly::zero(ring); n * n] }
    }

    pub fn identity(ring: RingParams, n: usize) -> Self {
        let mut m = Self::zero(ring, n);
        for i in 0..n {
            m.entries[i * n + i] = TruncatedPoly::one(ring);
        }
        m
    }

    /// Builds a matrix from `n²` row-major entries sharing one ring.
    pub fn from_entries(
        ring: RingParams,
        n: usize,
        entries: Vec<TruncatedPoly>,
    ) -> Result<Self, AlgebraError> {
        if entries.len() != n * n {
            return Err(AlgebraError::DimensionMismatch(n * n, entries.len()));
        }
        if entries.iter().any(|e| *e.ring() != ring) {
            return Err(AlgebraError::ParamMismatch);
        }
        Ok(Self { n, ring, entries })
    }

    /// Matrix over `Z_p` embedded as constants.
    pub fn from_constants(ring: RingParams, rows: &[Vec<u32>]) -> Result<Self, AlgebraError> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(AlgebraError::DimensionMismatch(n, row.len()));
            }
            entries.extend(row.iter().map(|&c| TruncatedPoly::constant(ring, c)));
        }
        Ok(Self { n, ring, entries })
    }

    /// Matrix whose entries each have up to `sparsity` random terms.
    pub fn random<R: Rng + ?Sized>(ring: &RingParams, n: usize, sparsity: usize, rng: &mut R) -> Self {
        let entries = (0..n * n).map(|_| random_sparse_poly(ring, sparsity, true, rng)).collect();
        Self { n, ring: *ring, entries }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn ring(&self) -> &RingParams {
        &self.ring
    }

    pub fn entries(&self) -> &[TruncatedPoly] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> &TruncatedPoly {
        &self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: TruncatedPoly) -> Result<(), AlgebraError> {
        if *value.ring() != self.ring {
            return Err(AlgebraError::ParamMismatch);
        }
        self.entries[i * self.n + j] = value;
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(TruncatedPoly::is_zero)
    }

    /// Largest term count over all entries.
    pub fn max_terms(&self) -> usize {
        self.entries.iter().map(TruncatedPoly::len).max().unwrap_or(0)
    }

    pub fn total_terms(&self) -> usize {
        self.entries.iter().map(TruncatedPoly::len).sum()
    }

    fn check(&self, other: &Self) -> Result<(), AlgebraError> {
        if self.n != other.n {
            return Err(AlgebraError::DimensionMismatch(self.n, other.n));
        }
        if self.ring != other.ring {
            return Err(AlgebraError::ParamMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check(other)?;
        Ok(self.zip_with(other, |a, b| a.add_unchecked(b)))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check(other)?;
        Ok(self.zip_with(other, |a, b| a.add_unchecked(&b.neg())))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&TruncatedPoly, &TruncatedPoly) -> TruncatedPoly) -> Self {
        Self {
            n: self.n,
            ring: self.ring,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn scale(&self, c: u32) -> Self {
        Self { n: self.n, ring: self.ring, entries: self.entries.iter().map(|e| e.scale(c)).collect() }
    }

    pub fn mul(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &Self) -> Self {
        let n = self.n;
        let groups: Vec<Vec<(usize, usize, usize)>> =
            (0..n * n).map(|c| (0..n).map(|l| (c / n, l, c % n)).collect()).collect();
        if let Some(entries) = dense::try_matrix_sums(self, other, &groups) {
            return Self { n, ring: self.ring, entries };
        }
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut buf = TermBuffer::new();
                for l in 0..n {
                    buf.push_product(self.get(i, l), other.get(l, j));
                }
                entries.push(buf.finish(self.ring));
            }
        }
        Self { n, ring: self.ring, entries }
    }

    /// `self^e` by repeated multiplication, `e >= 1`.
    pub fn pow(&self, e: u32) -> Result<Self, AlgebraError> {
        if e == 0 {
            return Err(AlgebraError::InvalidParams("matrix exponent must be positive".into()));
        }
        let mut acc = self.clone();
        for _ in 1..e {
            acc = acc.mul_unchecked(self);
        }
        Ok(acc)
    }

    pub fn trace(&self) -> TruncatedPoly {
        let mut buf = TermBuffer::new();
        for i in 0..self.n {
            buf.extend_poly(self.get(i, i));
        }
        buf.finish(self.ring)
    }

    /// Cofactor expansion, limited to `n <= 4`.
    pub fn determinant(&self) -> Result<TruncatedPoly, AlgebraError> {
        if self.n > 4 {
            return Err(AlgebraError::UnsupportedDimension(self.n));
        }
        let idx: Vec<usize> = (0..self.n).collect();
        Ok(self.minor_det(&idx, 0))
    }

    fn minor_det(&self, cols: &[usize], row: usize) -> TruncatedPoly {
        match cols.len() {
            0 => TruncatedPoly::one(self.ring),
            1 => self.get(row, cols[0]).clone(),
            2 => {
                let mut buf = TermBuffer::new();
                buf.push_product(self.get(row, cols[0]), self.get(row + 1, cols[1]));
                let p = self.ring.modulus() as u32;
                buf.push_scaled_product(p - 1, self.get(row, cols[1]), self.get(row + 1, cols[0]));
                buf.finish(self.ring)
            }
            _ => {
                let p = self.ring.modulus() as u32;
                let mut buf = TermBuffer::new();
                for (pos, &c) in cols.iter().enumerate() {
                    let entry = self.get(row, c);
                    if entry.is_zero() {
                        continue;
                    }
                    let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
                    let minor = self.minor_det(&rest, row + 1);
                    let sign = if pos % 2 == 0 { 1 } else { p - 1 };
                    buf.push_scaled_product(sign, entry, &minor);
                }
                buf.finish(self.ring)
            }
        }
    }

    /// Matrix of constant terms over `Z_p`.
    pub fn constant_part(&self) -> ModMatrix {
        let mut m = ModMatrix::zeros(self.n, self.n, self.ring.modulus());
        for i in 0..self.n {
            for j in 0..self.n {
                m.set(i, j, self.get(i, j).constant_term());
            }
        }
        m
    }

    /// Invertible over the truncated ring iff invertible modulo the
    /// maximal ideal, i.e. the constant-term matrix is invertible mod p.
    pub fn is_invertible(&self) -> bool {
        self.constant_part().rank() == self.n
    }

    /// Entrywise application of a ring endomorphism.
    pub fn apply_endo(&self, phi: &Endomorphism) -> Result<Self, AlgebraError> {
        if *phi.ring() != self.ring {
            return Err(AlgebraError::ParamMismatch);
        }
        let mut eval = phi.evaluator();
        let entries = self.entries.iter().map(|e| eval.apply(e)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { n: self.n, ring: self.ring, entries })
    }

    /// `row_i += c * row_j` (left multiplication by `E_ij(c)`).
    pub(crate) fn add_row_multiple(&mut self, i: usize, j: usize, c: &TruncatedPoly) {
        let n = self.n;
        for col in 0..n {
            let src = &self.entries[j * n + col];
            if src.is_zero() {
                continue;
            }
            let prod = c.mul_unchecked(src);
            self.entries[i * n + col] = self.entries[i * n + col].add_unchecked(&prod);
        }
    }

    /// `col_j += col_i * c` (right multiplication by `E_ij(c)`).
    pub(crate) fn add_col_multiple(&mut self, j: usize, i: usize, c: &TruncatedPoly) {
        let n = self.n;
        for row in 0..n {
            let src = &self.entries[row * n + i];
            if src.is_zero() {
                continue;
            }
            let prod = src.mul_unchecked(c);
            self.entries[row * n + j] = self.entries[row * n + j].add_unchecked(&prod);
        }
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// `E_ij(u)`: the identity with `u` at off-diagonal position `(i, j)`.
/// Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ElementaryFactor {
    i: usize,
    j: usize,
    u: TruncatedPoly,
}

impl ElementaryFactor {
    pub fn new(i: usize, j: usize, u: TruncatedPoly) -> Result<Self, AlgebraError> {
        if i == j {
            return Err(AlgebraError::InvalidParams(format!(
                "elementary factor needs i != j, got ({i}, {j})"
            )));
        }
        if u.is_zero() {
            return Err(AlgebraError::InvalidParams("elementary factor entry is zero".into()));
        }
        Ok(Self { i, j, u })
    }

    pub fn row(&self) -> usize {
        self.i
    }

    pub fn col(&self) -> usize {
        self.j
    }

    pub fn entry(&self) -> &TruncatedPoly {
        &self.u
    }

    pub fn to_matrix(&self, n: usize) -> Matrix {
        let mut m = Matrix::identity(*self.u.ring(), n);
        m.entries[self.i * n + self.j] = self.u.clone();
        m
    }

    pub fn inverse(&self) -> Self {
        Self { i: self.i, j: self.j, u: self.u.neg() }
    }
}

/// Anything that can compute `X^-1 · M · X` for a fixed invertible `X`.
pub trait Conjugator {
    fn dim(&self) -> usize;
    fn ring(&self) -> &RingParams;
    fn conjugate(&self, m: &Matrix) -> Result<Matrix, AlgebraError>;

    /// `φ(X⁻¹ · m · X)`.
    fn conjugate_masked(&self, m: &Matrix, phi: &Endomorphism) -> Result<Matrix, AlgebraError> {
        self.conjugate(m)?.apply_endo(phi)
    }
}

/// Invertible matrix kept as a product of elementary factors
/// `X = E_1 · E_2 ⋯ E_m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FactoredInvertible {
    n: usize,
    ring: RingParams,
    factors: Vec<ElementaryFactor>,
}

impl FactoredInvertible {
    pub fn new(ring: RingParams, n: usize, factors: Vec<ElementaryFactor>) -> Result<Self, AlgebraError> {
        if factors.is_empty() {
            return Err(AlgebraError::InvalidParams("key needs at least one factor".into()));
        }
        for f in &factors {
            if f.i >= n || f.j >= n {
                return Err(AlgebraError::InvalidParams(format!(
                    "factor index ({}, {}) out of range for n = {n}",
                    f.i, f.j
                )));
            }
            if *f.u.ring() != ring {
                return Err(AlgebraError::ParamMismatch);
            }
        }
        Ok(Self { n, ring, factors })
    }

    /// `m` factors with uniform distinct `(i, j)` and entries with up to
    /// `sparsity` terms.
    pub fn generate<R: Rng + ?Sized>(
        ring: &RingParams,
        n: usize,
        m: usize,
        sparsity: usize,
        rng: &mut R,
    ) -> Result<Self, AlgebraError> {
        if n < 2 {
            return Err(AlgebraError::InvalidParams(format!("n = {n} must be at least 2")));
        }
        if m == 0 {
            return Err(AlgebraError::InvalidParams("m must be at least 1".into()));
        }
        let mut factors = Vec::with_capacity(m);
        while factors.len() < m {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let u = random_sparse_poly(ring, sparsity, true, rng);
            if u.is_zero() {
                continue;
            }
            factors.push(ElementaryFactor { i, j, u });
        }
        Ok(Self { n, ring: *ring, factors })
    }

    pub fn factors(&self) -> &[ElementaryFactor] {
        &self.factors
    }

    /// The dense product `E_1 ⋯ E_m`.
    pub fn expand(&self) -> Matrix {
        let mut m = Matrix::identity(self.ring, self.n);
        // right-multiplying by E_ij(u) adds u * col_i to col_j
        for f in &self.factors {
            m.add_col_multiple(f.j, f.i, &f.u);
        }
        m
    }

    /// The dense product `E_m^-1 ⋯ E_1^-1`.
    pub fn expand_inverse(&self) -> Matrix {
        let mut m = Matrix::identity(self.ring, self.n);
        for f in &self.factors {
            m.add_row_multiple(f.i, f.j, &f.u.neg());
        }
        m
    }
}

impl Conjugator for FactoredInvertible {
    fn dim(&self) -> usize {
        self.n
    }

    fn ring(&self) -> &RingParams {
        &self.ring
    }

    /// `X^-1 · m · X` by one row and one column operation per factor.
    fn conjugate(&self, m: &Matrix) -> Result<Matrix, AlgebraError> {
        if m.n != self.n {
            return Err(AlgebraError::DimensionMismatch(self.n, m.n));
        }
        if m.ring != self.ring {
            return Err(AlgebraError::ParamMismatch);
        }
        let mut out = m.clone();
        for f in &self.factors {
            out.add_row_multiple(f.i, f.j, &f.u.neg());
            out.add_col_multiple(f.j, f.i, &f.u);
        }
        Ok(out)
    }

    /// Same as conjugating and then masking, but cheaper: φ is a ring
    /// homomorphism, so `φ(X⁻¹mX) = φ(X)⁻¹φ(m)φ(X)` and every factor of
    /// `φ(X)` is elementary with entry `φ(u)`.
    fn conjugate_masked(&self, m: &Matrix, phi: &Endomorphism) -> Result<Matrix, AlgebraError> {
        if m.n != self.n {
            return Err(AlgebraError::DimensionMismatch(self.n, m.n));
        }
        if m.ring != self.ring || *phi.ring() != self.ring {
            return Err(AlgebraError::ParamMismatch);
        }
        let mut eval = phi.evaluator();
        let mut out = m.apply_endo(phi)?;
        for f in &self.factors {
            let u = eval.apply(&f.u)?;
            if u.is_zero() {
                continue;
            }
            out.add_row_multiple(f.i, f.j, &u.neg());
            out.add_col_multiple(f.j, f.i, &u);
        }
        Ok(out)
    }
}

/// An explicit invertible matrix together with its inverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseConjugator {
    x: Matrix,
    x_inv: Matrix,
}

impl DenseConjugator {
    /// Inverts `x` with the local-ring series `(C(I - U))^-1 = (I + U + U² + ⋯) C^-1`
    /// where `C` is the constant part. `None` if `x` is not invertible.
    pub fn new(x: Matrix) -> Option<Self> {
        let x_inv = local_inverse(&x)?;
        Some(Self { x, x_inv })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.x
    }

    pub fn inverse(&self) -> &Matrix {
        &self.x_inv
    }
}

impl Conjugator for DenseConjugator {
    fn dim(&self) -> usize {
        self.x.n
    }

    fn ring(&self) -> &RingParams {
        &self.x.ring
    }

    fn conjugate(&self, m: &Matrix) -> Result<Matrix, AlgebraError> {
        self.x_inv.mul(m)?.mul(&self.x)
    }
}

/// Inverse of a matrix over the local truncated ring, or `None` when the
/// constant-term matrix is singular mod p.
pub fn local_inverse(x: &Matrix) -> Option<Matrix> {
    let n = x.n;
    let ring = x.ring;
    let c = x.constant_part();
    // invert C over Z_p by solving for each unit vector
    let mut c_inv_rows = vec![vec![0u32; n]; n];
    for col in 0..n {
        let mut e = vec![0u8; n];
        e[col] = 1;
        let sol = c.solve(&e)?;
        if c.mul_vec(&sol) != e {
            return None;
        }
        for (row, v) in sol.into_iter().enumerate() {
            c_inv_rows[row][col] = v as u32;
        }
    }
    if c.rank() != n {
        return None;
    }
    let c_inv = Matrix::from_constants(ring, &c_inv_rows).ok()?;
    // x = C (I - U)  =>  U = I - C^-1 x, whose entries lie in the maximal ideal
    let u = Matrix::identity(ring, n).sub(&c_inv.mul_unchecked(x)).ok()?;
    let mut sum = Matrix::identity(ring, n);
    let mut power = u.clone();
    while !power.is_zero() {
        sum = sum.add(&power).ok()?;
        power = power.mul_unchecked(&u);
    }
    Some(sum.mul_unchecked(&c_inv))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Letter {
    X,
    Y,
}

/// A positive word in two letters containing both of them.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn new(letters: Vec<Letter>) -> Result<Self, AlgebraError> {
        if letters.len() < 2 {
            return Err(AlgebraError::InvalidParams("word length must be at least 2".into()));
        }
        if !letters.contains(&Letter::X) || !letters.contains(&Letter::Y) {
            return Err(AlgebraError::InvalidParams("word must contain both letters".into()));
        }
        Ok(Self(letters))
    }

    /// Parses a string over `{x, y}`.
    pub fn parse(s: &str) -> Result<Self, AlgebraError> {
        let letters = s
            .chars()
            .map(|c| match c {
                'x' | 'X' => Ok(Letter::X),
                'y' | 'Y' => Ok(Letter::Y),
                other => Err(AlgebraError::InvalidParams(format!("bad word letter {other:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(letters)
    }

    /// Uniform over length-`len` words containing both letters.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<Self, AlgebraError> {
        if len < 2 {
            return Err(AlgebraError::InvalidParams(format!("word length {len} below 2")));
        }
        loop {
            let letters: Vec<Letter> =
                (0..len).map(|_| if rng.gen::<bool>() { Letter::Y } else { Letter::X }).collect();
            if let Ok(w) = Self::new(letters) {
                return Ok(w);
            }
        }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count(&self, letter: Letter) -> usize {
        self.0.iter().filter(|&&l| l == letter).count()
    }

    /// Left-to-right product with `mx` for `x` and `my` for `y`.
    pub fn evaluate(&self, mx: &Matrix, my: &Matrix) -> Result<Matrix, AlgebraError> {
        mx.check(my)?;
        let pick = |l: Letter| if l == Letter::X { mx } else { my };
        let mut acc = pick(self.0[0]).clone();
        for &l in &self.0[1..] {
            acc = acc.mul_unchecked(pick(l));
        }
        Ok(acc)
    }

    /// `tr w(mx, my)`, skipping the off-diagonal entries of the last
    /// product.
    pub fn trace(&self, mx: &Matrix, my: &Matrix) -> Result<TruncatedPoly, AlgebraError> {
        mx.check(my)?;
        let pick = |l: Letter| if l == Letter::X { mx } else { my };
        let (last, init) = self.0.split_last().expect("words are nonempty");
        let mut acc = pick(init[0]).clone();
        for &l in &init[1..] {
            acc = acc.mul_unchecked(pick(l));
        }
        let rhs = pick(*last);
        let group: Vec<(usize, usize, usize)> =
            (0..acc.n).flat_map(|i| (0..acc.n).map(move |l| (i, l, i))).collect();
        if let Some(mut out) = dense::try_matrix_sums(&acc, rhs, &[group]) {
            return Ok(out.pop().expect("one group"));
        }
        let mut buf = TermBuffer::new();
        for i in 0..acc.n {
            for l in 0..acc.n {
                buf.push_product(acc.get(i, l), rhs.get(l, i));
            }
        }
        Ok(buf.finish(acc.ring))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            f.write_str(if *l == Letter::X { "x" } else { "y" })?;
        }
        Ok(())
    }
}

/// Term counts of expanded random keys.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsityReport {
    pub n: usize,
    pub m: usize,
    pub sparsity: usize,
    /// Largest entry term count per trial.
    pub max_terms: Vec<usize>,
    /// `sparsity^(2m/n)`, i.e. `d^(m/n)` with `d = sparsity²`.
    pub model: f64,
    /// Number of monomials below the truncation degree.
    pub cap: BigUint,
}

impl SparsityReport {
    pub fn overall_max(&self) -> usize {
        self.max_terms.iter().copied().max().unwrap_or(0)
    }

    pub fn mean(&self) -> f64 {
        if self.max_terms.is_empty() {
            return 0.0;
        }
        self.max_terms.iter().sum::<usize>() as f64 / self.max_terms.len() as f64
    }
}

pub fn measure_sparsity_growth<R: Rng + ?Sized>(
    ring: &RingParams,
    n: usize,
    m: usize,
    sparsity: usize,
    trials: usize,
    rng: &mut R,
) -> Result<SparsityReport, AlgebraError> {
    if trials == 0 {
        return Err(AlgebraError::InvalidParams("trials must be at least 1".into()));
    }
    let mut max_terms = Vec::with_capacity(trials);
    for _ in 0..trials {
        let key = FactoredInvertible::generate(ring, n, m, sparsity, rng)?;
        max_terms.push(key.expand().max_terms());
    }
    Ok(SparsityReport {
        n,
        m,
        sparsity,
        max_terms,
        model: (sparsity as f64).powf(2.0 * m as f64 / n as f64),
        cap: ring.monomial_count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ring(k: usize, n: u32) -> RingParams {
        RingParams::with_default_cap(11, k, n).unwrap()
    }

    fn dense_conjugate(key: &FactoredInvertible, a: &Matrix) -> Matrix {
        key.expand_inverse().mul(a).unwrap().mul(&key.expand()).unwrap()
    }

    #[test]
    fn identity_is_neutral() {
        let r = ring(2, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = Matrix::random(&r, 3, 3, &mut rng);
        let i = Matrix::identity(r, 3);
        assert_eq!(a.mul(&i).unwrap(), a);
        assert_eq!(i.mul(&a).unwrap(), a);
        assert_eq!(a.pow(1).unwrap(), a);
        assert!(a.pow(0).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let r = ring(2, 10);
        let a = Matrix::identity(r, 2);
        let b = Matrix::identity(r, 3);
        assert_eq!(a.mul(&b), Err(AlgebraError::DimensionMismatch(2, 3)));
        let other = Matrix::identity(ring(3, 10), 2);
        assert_eq!(a.add(&other), Err(AlgebraError::ParamMismatch));
    }

    #[test]
    fn chained_elementary_product() {
        let r = ring(2, 10);
        let u = TruncatedPoly::variable(r, 0, 2).add(&TruncatedPoly::one(r)).unwrap();
        let v = TruncatedPoly::variable(r, 1, 3);
        let e12 = ElementaryFactor::new(0, 1, u.clone()).unwrap().to_matrix(3);
        let e23 = ElementaryFactor::new(1, 2, v.clone()).unwrap().to_matrix(3);
        let prod = e12.mul(&e23).unwrap();
        let mut expected = Matrix::identity(r, 3);
        expected.set(0, 1, u.clone()).unwrap();
        expected.set(1, 2, v.clone()).unwrap();
        expected.set(0, 2, u.mul(&v).unwrap()).unwrap();
        assert_eq!(prod, expected);
    }

    #[test]
    fn trace_examples() {
        let r = ring(2, 10);
        assert_eq!(Matrix::identity(r, 3).trace(), TruncatedPoly::constant(r, 3));
        let e = ElementaryFactor::new(0, 1, TruncatedPoly::variable(r, 0, 4)).unwrap();
        assert_eq!(e.to_matrix(3).trace(), TruncatedPoly::constant(r, 3));
    }

    #[test]
    fn determinant_examples() {
        let r = ring(2, 10);
        for n in 1..=4 {
            assert_eq!(Matrix::identity(r, n).determinant().unwrap(), TruncatedPoly::one(r));
        }
        let e = ElementaryFactor::new(2, 0, TruncatedPoly::variable(r, 1, 7)).unwrap();
        assert_eq!(e.to_matrix(4).determinant().unwrap(), TruncatedPoly::one(r));
        assert_eq!(Matrix::identity(r, 5).determinant(), Err(AlgebraError::UnsupportedDimension(5)));
        let m = Matrix::from_constants(r, &[vec![2, 3], vec![5, 7]]).unwrap();
        // 14 - 15 = -1
        assert_eq!(m.determinant().unwrap(), TruncatedPoly::constant(r, 10));
    }

    #[test]
    fn invertibility_examples() {
        let r = ring(2, 10);
        assert!(Matrix::identity(r, 3).is_invertible());
        let nil = Matrix::from_entries(
            r,
            2,
            vec![
                TruncatedPoly::variable(r, 0, 1),
                TruncatedPoly::variable(r, 1, 2),
                TruncatedPoly::zero(r),
                TruncatedPoly::variable(r, 0, 5),
            ],
        )
        .unwrap();
        assert!(!nil.is_invertible());
    }

    #[test]
    fn conjugation_small_example() {
        // n = 2, X = E_12(x1), A = [[1, 0], [2, 3]], k = 1, N = 3
        let r = ring(1, 3);
        let key = FactoredInvertible::new(
            r,
            2,
            vec![ElementaryFactor::new(0, 1, TruncatedPoly::variable(r, 0, 1)).unwrap()],
        )
        .unwrap();
        let a = Matrix::from_constants(r, &[vec![1, 0], vec![2, 3]]).unwrap();
        let got = key.conjugate(&a).unwrap();
        let t = |terms: &[(u32, u32)]| {
            TruncatedPoly::from_terms(r, terms.iter().map(|&(e, c)| (vec![e], c))).unwrap()
        };
        let expected = Matrix::from_entries(
            r,
            2,
            vec![t(&[(0, 1), (1, 9)]), t(&[(1, 9), (2, 9)]), t(&[(0, 2)]), t(&[(0, 3), (1, 2)])],
        )
        .unwrap();
        assert_eq!(got, expected);
        assert_eq!(got, dense_conjugate(&key, &a));
    }

    #[test]
    fn cancelling_key_is_identity() {
        let r = ring(2, 10);
        let u = TruncatedPoly::variable(r, 0, 3);
        let f = ElementaryFactor::new(0, 1, u).unwrap();
        let key = FactoredInvertible::new(r, 3, vec![f.clone(), f.inverse()]).unwrap();
        let i = Matrix::identity(r, 3);
        assert_eq!(key.conjugate(&i).unwrap(), i);
        assert_eq!(key.expand(), i);
    }

    #[test]
    fn factor_validation() {
        let r = ring(2, 10);
        assert!(ElementaryFactor::new(1, 1, TruncatedPoly::one(r)).is_err());
        assert!(ElementaryFactor::new(0, 1, TruncatedPoly::zero(r)).is_err());
        assert!(FactoredInvertible::new(r, 2, vec![]).is_err());
        let f = ElementaryFactor::new(0, 2, TruncatedPoly::one(r)).unwrap();
        assert!(FactoredInvertible::new(r, 2, vec![f]).is_err());
    }

    #[test]
    fn key_generation_is_deterministic() {
        let r = ring(3, 20);
        let a = FactoredInvertible::generate(&r, 3, 10, 3, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = FactoredInvertible::generate(&r, 3, 10, 3, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.factors().len(), 10);
        assert!(a.factors().iter().all(|f| f.row() != f.col()));
    }

    #[test]
    fn local_inverse_round_trip() {
        let r = ring(2, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut found = 0;
        for _ in 0..50 {
            let x = Matrix::random(&r, 2, 3, &mut rng);
            match local_inverse(&x) {
                Some(inv) => {
                    found += 1;
                    assert_eq!(x.mul(&inv).unwrap(), Matrix::identity(r, 2));
                    assert_eq!(inv.mul(&x).unwrap(), Matrix::identity(r, 2));
                }
                None => assert!(!x.is_invertible()),
            }
        }
        assert!(found > 0);
    }

    #[test]
    fn word_parsing_and_validation() {
        assert!(Word::parse("xy").is_ok());
        assert!(Word::parse("xx").is_err());
        assert!(Word::parse("y").is_err());
        assert!(Word::parse("xz").is_err());
        assert_eq!(Word::parse("xyyx").unwrap().to_string(), "xyyx");
        assert!(Word::random(1, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn word_examples() {
        let r = ring(2, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = Matrix::random(&r, 3, 3, &mut rng);
        let b = Matrix::random(&r, 3, 3, &mut rng);
        let xy = Word::parse("xy").unwrap();
        assert_eq!(xy.evaluate(&a, &b).unwrap(), a.mul(&b).unwrap());
        let xyx = Word::parse("xyx").unwrap();
        assert_eq!(xyx.evaluate(&Matrix::identity(r, 3), &b).unwrap(), b);
    }

    #[test]
    fn length_two_words_are_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut xy = 0;
        for _ in 0..10_000 {
            let w = Word::random(2, &mut rng).unwrap();
            assert!(w.to_string() == "xy" || w.to_string() == "yx");
            if w.to_string() == "xy" {
                xy += 1;
            }
        }
        assert!((4_700..5_300).contains(&xy), "{xy}");
    }

    #[test]
    fn word_letter_positions_are_fair() {
        // chi-squared over the 10 positions, 1 dof each; 10.83 is the
        // 0.1% critical value
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let draws = 10_000;
        let mut ys = [0u32; 10];
        for _ in 0..draws {
            let w = Word::random(10, &mut rng).unwrap();
            for (pos, l) in w.letters().iter().enumerate() {
                if *l == Letter::Y {
                    ys[pos] += 1;
                }
            }
        }
        for y in ys {
            let expected = draws as f64 / 2.0;
            let chi2 = 2.0 * (y as f64 - expected).powi(2) / expected;
            assert!(chi2 < 10.83, "{ys:?}");
        }
    }

    #[test]
    fn sparsity_growth_single_factor() {
        let r = ring(3, 40);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let report = measure_sparsity_growth(&r, 3, 1, 5, 20, &mut rng).unwrap();
        assert!(report.overall_max() <= 5);
        assert!(measure_sparsity_growth(&r, 3, 1, 5, 0, &mut rng).is_err());
    }

    #[test]
    fn sparsity_growth_in_paper_ring() {
        // A full-size key (m >= 27) does not fit in memory once expanded;
        // a few factors already show the blowup.
        let r = ring(10, 1000);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let report = measure_sparsity_growth(&r, 3, 3, 5, 2, &mut rng).unwrap();
        assert!(report.overall_max() > 5);
        assert!(BigUint::from(report.overall_max()) <= report.cap);
    }
}
