//! Dense linear algebra over the prime field Z_p, p < 256.

/// `a^-1 mod p`, or `None` for `a ≡ 0`.
pub fn inv_mod(a: u8, p: u8) -> Option<u8> {
    let p = p as u32;
    let a = a as u32 % p;
    if a == 0 {
        return None;
    }
    // Fermat: a^(p-2)
    let mut result = 1u32;
    let mut base = a;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            result = result * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    Some(result as u8)
}

pub fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Row-major dense matrix over Z_p.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModMatrix {
    rows: usize,
    cols: usize,
    modulus: u8,
    data: Vec<u8>,
}

impl ModMatrix {
    pub fn zeros(rows: usize, cols: usize, modulus: u8) -> Self {
        Self { rows, cols, modulus, data: vec![0; rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<u8>>, modulus: u8) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend(row.into_iter().map(|v| v % modulus));
        }
        Self { rows: r, cols: c, modulus, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn modulus(&self) -> u8 {
        self.modulus
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: u8) {
        self.data[r * self.cols + c] = v % self.modulus;
    }

    pub fn row(&self, r: usize) -> &[u8] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Reduced row echelon form in place; returns the pivot column of each
    /// nonzero row.
    pub fn rref(&mut self) -> Vec<usize> {
        let p = self.modulus as u32;
        let mut pivots = Vec::new();
        let mut lead = 0;
        for col in 0..self.cols {
            if lead == self.rows {
                break;
            }
            let Some(pivot_row) = (lead..self.rows).find(|&r| self.get(r, col) != 0) else {
                continue;
            };
            self.swap_rows(lead, pivot_row);
            let inv = inv_mod(self.get(lead, col), self.modulus).expect("nonzero pivot") as u32;
            for c in col..self.cols {
                let v = self.data[lead * self.cols + c] as u32;
                self.data[lead * self.cols + c] = (v * inv % p) as u8;
            }
            for r in 0..self.rows {
                if r == lead {
                    continue;
                }
                let factor = self.get(r, col) as u32;
                if factor == 0 {
                    continue;
                }
                let neg = p - factor;
                for c in col..self.cols {
                    let src = self.data[lead * self.cols + c] as u32;
                    if src == 0 {
                        continue;
                    }
                    let idx = r * self.cols + c;
                    self.data[idx] = ((self.data[idx] as u32 + neg * src) % p) as u8;
                }
            }
            pivots.push(col);
            lead += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    /// Basis of `{ v : self · v = 0 }`.
    pub fn nullspace(&self) -> Vec<Vec<u8>> {
        let p = self.modulus;
        let mut reduced = self.clone();
        let pivots = reduced.rref();
        let mut is_pivot = vec![false; self.cols];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        let mut basis = Vec::new();
        for free in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut v = vec![0u8; self.cols];
            v[free] = 1;
            for (r, &pc) in pivots.iter().enumerate() {
                let coeff = reduced.get(r, free);
                v[pc] = (p - coeff) % p;
            }
            basis.push(v);
        }
        basis
    }

    pub fn mul_vec(&self, v: &[u8]) -> Vec<u8> {
        assert_eq!(v.len(), self.cols);
        let p = self.modulus as u32;
        (0..self.rows)
            .map(|r| {
                let s: u32 = self.row(r).iter().zip(v).map(|(&a, &b)| a as u32 * b as u32 % p).sum();
                (s % p) as u8
            })
            .collect()
    }

    /// Solves `self · x = rhs`, returning one solution when consistent.
    pub fn solve(&self, rhs: &[u8]) -> Option<Vec<u8>> {
        assert_eq!(rhs.len(), self.rows);
        let mut aug = ModMatrix::zeros(self.rows, self.cols + 1, self.modulus);
        for (r, &v) in rhs.iter().enumerate() {
            for c in 0..self.cols {
                aug.set(r, c, self.get(r, c));
            }
            aug.set(r, self.cols, v);
        }
        let pivots = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![0u8; self.cols];
        for (r, &pc) in pivots.iter().enumerate() {
            x[pc] = aug.get(r, self.cols);
        }
        Some(x)
    }

    pub fn transpose(&self) -> ModMatrix {
        let mut t = ModMatrix::zeros(self.cols, self.rows, self.modulus);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }
}
