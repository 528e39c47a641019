//! Ring endomorphisms `x_j ↦ f_j` of the truncated polynomial ring.
//!
//! Every image has zero constant term, so the truncation ideal is mapped
//! into itself, and all images avoid a common set of omitted variables,
//! which makes the map non-invertible.

use rand::seq::index::sample;
use rand::Rng;

use std::collections::HashMap;

use crate::dense::{Accumulator, Layout};
use crate::error::AlgebraError;
use crate::linalg::ModMatrix;
use crate::poly::{random_poly_over, Monomial, RingParams, TermBuffer, TruncatedPoly};

/// Default degree cap for the images `f_j`.
pub const DEFAULT_IMAGE_DEGREE: u32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Endomorphism {
    ring: RingParams,
    images: Vec<TruncatedPoly>,
    omitted: Vec<usize>,
}

impl Endomorphism {
    /// Validates and wraps explicit images. `omitted` is sorted and
    /// deduplicated.
    pub fn new(
        ring: RingParams,
        images: Vec<TruncatedPoly>,
        mut omitted: Vec<usize>,
    ) -> Result<Self, AlgebraError> {
        if images.len() != ring.vars() {
            return Err(AlgebraError::InvalidParams(format!(
                "endomorphism needs {} images, got {}",
                ring.vars(),
                images.len()
            )));
        }
        omitted.sort_unstable();
        omitted.dedup();
        if omitted.is_empty() || omitted.len() >= ring.vars() {
            return Err(AlgebraError::InvalidParams(format!(
                "omitted variable count {} must lie in [1, k - 1]",
                omitted.len()
            )));
        }
        if let Some(&v) = omitted.iter().find(|&&v| v >= ring.vars()) {
            return Err(AlgebraError::InvalidParams(format!("omitted variable index {v} out of range")));
        }
        for (j, f) in images.iter().enumerate() {
            if *f.ring() != ring {
                return Err(AlgebraError::ParamMismatch);
            }
            if f.constant_term() != 0 {
                return Err(AlgebraError::InvalidParams(format!("image of x{} has a constant term", j + 1)));
            }
            if let Some(&v) = omitted.iter().find(|&&v| !f.avoids_variable(v)) {
                return Err(AlgebraError::InvalidParams(format!(
                    "image of x{} mentions omitted variable x{}",
                    j + 1,
                    v + 1
                )));
            }
        }
        Ok(Self { ring, images, omitted })
    }

    /// Random endomorphism omitting a uniform `k0`-subset of variables.
    /// Each image has up to `sparsity` terms of degree in
    /// `[1, min(image_degree, N - 1)]` over the remaining variables.
    pub fn generate<R: Rng + ?Sized>(
        ring: &RingParams,
        k0: usize,
        sparsity: usize,
        image_degree: u32,
        rng: &mut R,
    ) -> Result<Self, AlgebraError> {
        let k = ring.vars();
        if k0 == 0 || k0 >= k {
            return Err(AlgebraError::InvalidParams(format!("k0 = {k0} must satisfy 1 <= k0 < k = {k}")));
        }
        if sparsity == 0 || image_degree == 0 {
            return Err(AlgebraError::InvalidParams("image sparsity and degree cap must be positive".into()));
        }
        let mut omitted = sample(rng, k, k0).into_vec();
        omitted.sort_unstable();
        let kept: Vec<usize> = (0..k).filter(|v| omitted.binary_search(v).is_err()).collect();
        let cap = image_degree.min(ring.truncation() - 1);
        let images = (0..k).map(|_| random_poly_over(ring, sparsity, &kept, 1, cap, rng)).collect();
        Ok(Self { ring: *ring, images, omitted })
    }

    pub fn ring(&self) -> &RingParams {
        &self.ring
    }

    pub fn images(&self) -> &[TruncatedPoly] {
        &self.images
    }

    pub fn omitted_vars(&self) -> &[usize] {
        &self.omitted
    }

    pub fn k0(&self) -> usize {
        self.omitted.len()
    }

    pub fn apply(&self, a: &TruncatedPoly) -> Result<TruncatedPoly, AlgebraError> {
        self.evaluator().apply(a)
    }

    pub fn evaluator(&self) -> EndoEvaluator<'_> {
        EndoEvaluator {
            endo: self,
            powers: vec![Vec::new(); self.ring.vars()],
            memo: HashMap::new(),
            layout: None,
        }
    }

    /// The `k × k` matrix over `Z_p` whose row `j` holds the degree-one
    /// coefficients of `f_j`.
    pub fn linear_part(&self) -> ModMatrix {
        let k = self.ring.vars();
        let mut m = ModMatrix::zeros(k, k, self.ring.modulus());
        for (j, f) in self.images.iter().enumerate() {
            for v in 0..k {
                m.set(j, v, f.coeff(self.ring.variable(v)));
            }
        }
        m
    }
}

/// Applies one endomorphism repeatedly, caching powers `f_j^e`.
pub struct EndoEvaluator<'a> {
    endo: &'a Endomorphism,
    powers: Vec<Vec<TruncatedPoly>>,
    memo: HashMap<Monomial, TruncatedPoly>,
    layout: Option<Option<Layout>>,
}

impl EndoEvaluator<'_> {
    fn power(&mut self, var: usize, e: u32) -> &TruncatedPoly {
        let ring = self.endo.ring;
        let cache = &mut self.powers[var];
        if cache.is_empty() {
            cache.push(TruncatedPoly::one(ring));
        }
        while cache.len() <= e as usize {
            let next = cache.last().unwrap().mul_unchecked(&self.endo.images[var]);
            cache.push(next);
        }
        &cache[e as usize]
    }

    fn monomial_image(&mut self, m: Monomial) -> TruncatedPoly {
        if let Some(image) = self.memo.get(&m) {
            return image.clone();
        }
        let image = self.compute_image(m);
        self.memo.insert(m, image.clone());
        image
    }

    /// `φ(m) = φ(m / x_v^e) · f_v^e` for the last variable `v` in `m`,
    /// so images of shared prefixes are computed once.
    fn compute_image(&mut self, m: Monomial) -> TruncatedPoly {
        let ring = self.endo.ring;
        let mut exps = ring.exponents(m);
        let Some(v) = exps.iter().rposition(|&e| e > 0) else {
            return TruncatedPoly::one(ring);
        };
        let e = exps[v];
        exps[v] = 0;
        if exps.iter().all(|&e| e == 0) {
            return self.power(v, e).clone();
        }
        let prefix = ring.monomial(&exps).expect("divisor of a valid monomial");
        let head = self.monomial_image(prefix);
        if head.is_zero() {
            return head;
        }
        head.mul_unchecked(self.power(v, e))
    }

    pub fn apply(&mut self, a: &TruncatedPoly) -> Result<TruncatedPoly, AlgebraError> {
        if *a.ring() != self.endo.ring {
            return Err(AlgebraError::ParamMismatch);
        }
        let ring = self.endo.ring;
        if self.layout.is_none() {
            self.layout = Some(Layout::covering(ring, &self.endo.images));
        }
        if let Some(Some(layout)) = &self.layout {
            let layout = layout.clone();
            let mut acc = Accumulator::new(&layout);
            for &(m, c) in a.terms() {
                if m.is_one() {
                    acc.add_poly(1, &TruncatedPoly::constant(ring, c as u32));
                    continue;
                }
                let image = self.monomial_image(m);
                acc.add_poly(c as u32, &image);
            }
            return Ok(acc.finish());
        }
        let p = ring.modulus() as u32;
        let mut buf = TermBuffer::new();
        for &(m, c) in a.terms() {
            if m.is_one() {
                buf.push(m, c as u32);
                continue;
            }
            let image = self.monomial_image(m);
            for &(mi, ci) in image.terms() {
                buf.push(mi, ci as u32 * c as u32 % p);
            }
        }
        Ok(buf.finish(ring))
    }
}
