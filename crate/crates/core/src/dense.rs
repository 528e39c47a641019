//! Dense product kernel for polynomials that fill a small box.
//!
//! When every operand mentions only a few variables, products are computed
//! on a flat array indexed by exponent vectors in radix `N` (the innermost
//! variable contiguous). The right operand is split into runs along the
//! innermost variable and each left term adds a scaled, truncated copy of
//! every run, which the compiler vectorizes. Radix `N` never overflows
//! because kept products have total degree, and so every exponent, below `N`.
//!
//! Runs are processed in whole blocks of `LANES`. Rows are padded so a block
//! never leaves its row; spill-over lands in cells of degree `N` or more,
//! which are never read back.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use crate::matrix::Matrix;
use crate::poly::{Monomial, RingParams, TruncatedPoly};

/// Block width of the product kernel.
const LANES: usize = 16;

/// Largest box the kernel will allocate.
const MAX_BOX: usize = 1 << 20;

/// Below this many term products sorting is cheaper than a box.
const MIN_PAIRS: usize = 512;

#[derive(Debug, Clone)]
pub(crate) struct Layout {
    ring: RingParams,
    /// Variables in the box, outermost first.
    vars: Vec<usize>,
    /// Stride of the second innermost variable.
    row_len: usize,
    size: usize,
    order: Rc<Vec<(u32, Monomial)>>,
}

type OrderCache = HashMap<(RingParams, Vec<usize>), Rc<Vec<(u32, Monomial)>>>;

thread_local! {
    static ORDERS: RefCell<OrderCache> =
        RefCell::new(HashMap::new());
}

impl Layout {
    /// Box over the union of variables used by `polys`, or `None` when it
    /// would be too large.
    pub fn covering<'a>(
        ring: RingParams,
        polys: impl IntoIterator<Item = &'a TruncatedPoly>,
    ) -> Option<Self> {
        let mut used = vec![false; ring.vars()];
        for p in polys {
            for &(m, _) in p.terms() {
                if m.is_one() {
                    continue;
                }
                for (v, slot) in used.iter_mut().enumerate() {
                    if !*slot && ring.exponent(m, v) > 0 {
                        *slot = true;
                    }
                }
            }
        }
        let vars: Vec<usize> = (0..ring.vars()).filter(|&v| used[v]).collect();
        let radix = ring.truncation() as usize;
        let row_len = if vars.is_empty() { LANES } else { radix.div_ceil(LANES) * LANES + LANES };
        let mut size = row_len;
        for _ in 1..vars.len() {
            size = size.checked_mul(radix).filter(|&s| s <= MAX_BOX)?;
        }
        if size > MAX_BOX {
            return None;
        }
        let mut layout = Self { ring, vars, row_len, size, order: Rc::new(Vec::new()) };
        layout.order = ORDERS.with(|cache| {
            cache
                .borrow_mut()
                .entry((ring, layout.vars.clone()))
                .or_insert_with(|| Rc::new(layout.graded_cells()))
                .clone()
        });
        Some(layout)
    }

    /// Exponents of the outer variables encoded in a row number.
    fn row_exponents(&self, mut row: usize, exps: &mut [u32]) {
        let radix = self.radix();
        if let Some((_, outer)) = self.vars.split_last() {
            for &v in outer.iter().rev() {
                exps[v] = (row % radix) as u32;
                row /= radix;
            }
        }
    }

    /// Cells of total degree below `N` with their monomials, in graded-lex
    /// order.
    fn graded_cells(&self) -> Vec<(u32, Monomial)> {
        let mut cells = Vec::new();
        let mut exps = vec![0u32; self.ring.vars()];
        for idx in 0..self.size {
            let (row, col) = (idx / self.row_len, idx % self.row_len);
            match self.vars.last() {
                Some(&inner) => exps[inner] = col as u32,
                None if col > 0 => continue,
                None => {}
            }
            self.row_exponents(row, &mut exps);
            if let Ok(m) = self.ring.monomial(&exps) {
                cells.push((idx as u32, m));
            }
        }
        cells.sort_unstable_by_key(|c| c.1);
        cells
    }

    pub fn size(&self) -> usize {
        self.size
    }

    fn radix(&self) -> usize {
        self.ring.truncation() as usize
    }

    fn index(&self, m: Monomial) -> usize {
        let Some((&inner, outer)) = self.vars.split_last() else {
            return 0;
        };
        let radix = self.radix();
        let row = outer.iter().fold(0, |acc, &v| acc * radix + self.ring.exponent(m, v) as usize);
        row * self.row_len + self.ring.exponent(m, inner) as usize
    }

    /// Terms as `(index, degree, coefficient)`.
    pub fn indexed(&self, p: &TruncatedPoly) -> Vec<(usize, u32, u32)> {
        p.terms().iter().map(|&(m, c)| (self.index(m), self.ring.degree(m), c as u32)).collect()
    }

    /// Splits `p` into runs along the innermost variable, zero-padded to
    /// whole blocks.
    pub fn runs(&self, p: &TruncatedPoly) -> Vec<Run> {
        let mut cells = vec![0u16; self.size];
        for &(m, c) in p.terms() {
            cells[self.index(m)] = c as u16;
        }
        let mut exps = vec![0u32; self.ring.vars()];
        let mut runs = Vec::new();
        for (row, slice) in cells.chunks_exact(self.row_len).enumerate() {
            let Some(last) = slice.iter().rposition(|&c| c != 0) else {
                continue;
            };
            self.row_exponents(row, &mut exps);
            let mut vals = slice[..=last].to_vec();
            vals.resize((last + 1).div_ceil(LANES) * LANES, 0);
            runs.push(Run { base: row * self.row_len, degree: exps.iter().sum(), vals });
        }
        runs.sort_by_key(|r| r.degree);
        runs
    }
}

/// Coefficients of `x_inner^0, x_inner^1, ...` times a fixed monomial.
#[derive(Debug, Clone)]
pub(crate) struct Run {
    base: usize,
    degree: u32,
    vals: Vec<u16>,
}

/// Accumulator cell: `u16` when `(p-1)²` leaves room for many additions
/// between reductions, else `u32`.
trait Cell: Copy + Default {
    fn widen(self) -> u32;
    fn narrow(x: u32) -> Self;
    fn mac(self, coef: Self, v: u16) -> Self;
}

impl Cell for u16 {
    fn widen(self) -> u32 {
        self as u32
    }
    fn narrow(x: u32) -> Self {
        x as u16
    }
    #[inline(always)]
    fn mac(self, coef: Self, v: u16) -> Self {
        self.wrapping_add(coef.wrapping_mul(v))
    }
}

impl Cell for u32 {
    fn widen(self) -> u32 {
        self
    }
    fn narrow(x: u32) -> Self {
        x
    }
    #[inline(always)]
    fn mac(self, coef: Self, v: u16) -> Self {
        self.wrapping_add(coef.wrapping_mul(v as u32))
    }
}

// The headroom budget rules out overflow; wrapping ops keep the loop
// free of overflow checks so it vectorizes.
#[inline(always)]
fn product_body<C: Cell>(cells: &mut [C], n: u32, p: u32, scale: u32, a: &[(usize, u32, u32)], runs: &[Run]) {
    for &(ia, da, ca) in a {
        let coef = ca * scale % p;
        if coef == 0 {
            continue;
        }
        let coef = C::narrow(coef);
        // runs are sorted by degree
        for run in runs {
            let deg = da + run.degree;
            if deg >= n {
                break;
            }
            let len = run.vals.len().min(((n - deg) as usize).div_ceil(LANES) * LANES);
            let start = ia + run.base;
            let out = cells[start..start + len].chunks_exact_mut(LANES);
            for (o, v) in out.zip(run.vals[..len].chunks_exact(LANES)) {
                for l in 0..LANES {
                    o[l] = o[l].mac(coef, v[l]);
                }
            }
        }
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn product_avx2<C: Cell>(
    cells: &mut [C],
    n: u32,
    p: u32,
    scale: u32,
    a: &[(usize, u32, u32)],
    runs: &[Run],
) {
    product_body(cells, n, p, scale, a, runs)
}

fn product_kernel<C: Cell>(
    avx2: bool,
    cells: &mut [C],
    n: u32,
    p: u32,
    scale: u32,
    a: &[(usize, u32, u32)],
    runs: &[Run],
) {
    #[cfg(target_arch = "x86_64")]
    if avx2 {
        // SAFETY: `avx2` is set only after runtime detection.
        return unsafe { product_avx2(cells, n, p, scale, a, runs) };
    }
    let _ = avx2;
    product_body(cells, n, p, scale, a, runs)
}

fn has_avx2() -> bool {
    #[cfg(target_arch = "x86_64")]
    {
        std::arch::is_x86_feature_detected!("avx2")
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        false
    }
}

/// `u16` cells need at least this many additions of headroom to pay off.
const MIN_NARROW_BUDGET: u64 = 64;

#[derive(Debug)]
enum Cells {
    Narrow(Vec<u16>),
    Wide(Vec<u32>),
}

/// Flat accumulator over a layout's box.
pub(crate) struct Accumulator<'l> {
    layout: &'l Layout,
    cells: Cells,
    /// Additions each cell may still absorb before it must be reduced.
    headroom: u64,
    budget: u64,
    avx2: bool,
}

impl<'l> Accumulator<'l> {
    pub fn new(layout: &'l Layout) -> Self {
        let p = layout.ring.modulus() as u64;
        let sq = ((p - 1) * (p - 1)).max(1);
        let narrow = (u16::MAX as u64 - p) / sq;
        let (cells, budget) = if narrow >= MIN_NARROW_BUDGET {
            (Cells::Narrow(vec![0; layout.size]), narrow)
        } else {
            (Cells::Wide(vec![0; layout.size]), (u32::MAX as u64 - p) / sq)
        };
        Self { layout, cells, headroom: budget, budget, avx2: has_avx2() }
    }

    fn reduce(&mut self) {
        let p = self.layout.ring.modulus();
        match &mut self.cells {
            Cells::Narrow(v) => v.iter_mut().for_each(|c| *c %= p as u16),
            Cells::Wide(v) => v.iter_mut().for_each(|c| *c %= p as u32),
        }
        self.headroom = self.budget;
    }

    fn spend(&mut self) {
        if self.headroom == 0 {
            self.reduce();
        }
        self.headroom -= 1;
    }

    /// Adds `scale · a · b` where `b` is given as runs.
    pub fn add_product(&mut self, scale: u32, a: &[(usize, u32, u32)], b: &[Run]) {
        let p = self.layout.ring.modulus() as u32;
        let n = self.layout.ring.truncation();
        let scale = scale % p;
        let mut rest = a;
        while !rest.is_empty() {
            if self.headroom == 0 {
                self.reduce();
            }
            let take = rest.len().min(self.headroom as usize);
            let (chunk, tail) = rest.split_at(take);
            match &mut self.cells {
                Cells::Narrow(v) => product_kernel(self.avx2, v, n, p, scale, chunk, b),
                Cells::Wide(v) => product_kernel(self.avx2, v, n, p, scale, chunk, b),
            }
            self.headroom -= take as u64;
            rest = tail;
        }
    }

    /// Adds `scale · a`.
    pub fn add_poly(&mut self, scale: u32, a: &TruncatedPoly) {
        let p = self.layout.ring.modulus() as u32;
        let s = scale % p;
        self.spend();
        for &(m, c) in a.terms() {
            let idx = self.layout.index(m);
            let add = c as u32 * s;
            match &mut self.cells {
                Cells::Narrow(v) => v[idx] = v[idx].wrapping_add(add as u16),
                Cells::Wide(v) => v[idx] = v[idx].wrapping_add(add),
            }
        }
    }

    pub fn finish(self) -> TruncatedPoly {
        fn collect<C: Cell>(layout: &Layout, cells: &[C]) -> Vec<(Monomial, u8)> {
            let p = layout.ring.modulus() as u32;
            layout
                .order
                .iter()
                .filter_map(|&(idx, m)| {
                    let c = cells[idx as usize].widen() % p;
                    (c != 0).then_some((m, c as u8))
                })
                .collect()
        }
        let terms = match &self.cells {
            Cells::Narrow(v) => collect(self.layout, v),
            Cells::Wide(v) => collect(self.layout, v),
        };
        TruncatedPoly::from_canonical(self.layout.ring, terms)
    }
}

/// Whether a dense box of `size` cells is worth it for `pairs` term
/// products.
pub(crate) fn worthwhile(size: usize, pairs: usize) -> bool {
    size <= pairs.saturating_mul(8)
}

/// `a · b` through the dense kernel when profitable.
pub(crate) fn try_mul(a: &TruncatedPoly, b: &TruncatedPoly) -> Option<TruncatedPoly> {
    let pairs = a.len().saturating_mul(b.len());
    if pairs < MIN_PAIRS {
        return None;
    }
    let layout = Layout::covering(*a.ring(), [a, b])?;
    if !worthwhile(layout.size(), pairs) {
        return None;
    }
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut acc = Accumulator::new(&layout);
    acc.add_product(1, &layout.indexed(small), &layout.runs(large));
    Some(acc.finish())
}

/// Sums of entry products `Σ a[i][l] · b[l][j]`, one output per group of
/// `(i, l, j)` triples, or `None` when the sparse path is better.
pub(crate) fn try_matrix_sums(
    a: &Matrix,
    b: &Matrix,
    groups: &[Vec<(usize, usize, usize)>],
) -> Option<Vec<TruncatedPoly>> {
    let pairs: usize = groups.iter().flatten().map(|&(i, l, j)| a.get(i, l).len() * b.get(l, j).len()).sum();
    if pairs < MIN_PAIRS {
        return None;
    }
    let layout = Layout::covering(*a.ring(), a.entries().iter().chain(b.entries()))?;
    if !worthwhile(layout.size().saturating_mul(groups.len()), pairs) {
        return None;
    }
    let n = a.dim();
    let mut left: Vec<Option<Vec<(usize, u32, u32)>>> = vec![None; n * n];
    let mut right: Vec<Option<Vec<Run>>> = vec![None; n * n];
    let mut out = Vec::with_capacity(groups.len());
    for group in groups {
        let mut acc = Accumulator::new(&layout);
        for &(i, l, j) in group {
            if a.get(i, l).is_zero() || b.get(l, j).is_zero() {
                continue;
            }
            let lhs = left[i * n + l].get_or_insert_with(|| layout.indexed(a.get(i, l)));
            let rhs = right[l * n + j].get_or_insert_with(|| layout.runs(b.get(l, j)));
            acc.add_product(1, lhs, rhs);
        }
        out.push(acc.finish());
    }
    Some(out)
}
