//! Scheme parameters, presets and the advisory security inequalities.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::endo::DEFAULT_IMAGE_DEGREE;
use crate::error::AlgebraError;
use crate::poly::{binomial, RingParams};

/// Non-negative integer security parameter. Parses plain decimals and
/// `<mantissa>e<exponent>` forms such as `1e20` or `2.5e3`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SecurityLevel(pub BigUint);

impl FromStr for SecurityLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || format!("cannot parse security parameter {s:?}");
        let (mantissa, exp) = match s.split_once(['e', 'E']) {
            Some((m, e)) => (m, e.parse::<u32>().map_err(|_| bad())?),
            None => (s, 0),
        };
        let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        let digits = format!("{int_part}{frac_part}");
        if !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let frac_len = frac_part.len() as u32;
        if frac_len > exp && frac_part[(exp as usize)..].chars().any(|c| c != '0') {
            return Err(format!("security parameter {s:?} is not an integer"));
        }
        let value = BigUint::parse_bytes(digits.as_bytes(), 10).ok_or_else(bad)?;
        let value = if exp >= frac_len {
            value * BigUint::from(10u32).pow(exp - frac_len)
        } else {
            value / BigUint::from(10u32).pow(frac_len - exp)
        };
        Ok(Self(value))
    }
}

impl fmt::Display for SecurityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for SecurityLevel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for SecurityLevel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Default for SecurityLevel {
    fn default() -> Self {
        Self(BigUint::from(10u32).pow(20))
    }
}

/// Every tunable of one deployment of the scheme.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeParams {
    pub ring: RingParams,
    /// Matrix dimension.
    pub n: usize,
    /// Sparsity budget; generated entries have up to `√d` terms.
    pub d: u32,
    /// Inclusive range for the number of elementary factors in a key.
    pub m_range: (u32, u32),
    /// Inclusive range for the number of variables an endomorphism omits.
    pub k0_range: (usize, usize),
    /// Upper bound for the exponents `p`, `q` of the challenge.
    pub exp_bound: u32,
    /// Length of the verifier's test word.
    pub word_len: usize,
    #[serde(default)]
    pub t: SecurityLevel,
    pub endo_image_degree: u32,
}

/// `[⌈k/3⌉, ⌊2k/3⌋]`, clamped into `[1, k - 1]`.
pub fn default_k0_range(k: usize) -> (usize, usize) {
    let lo = k.div_ceil(3).max(1);
    let hi = (2 * k / 3).min(k.saturating_sub(1)).max(lo);
    (lo, hi)
}

impl SchemeParams {
    /// Parameters derived from the fields that travel in key files and
    /// Hello frames; the remaining fields take their defaults.
    pub fn from_block(block: &ParamsBlock) -> Result<Self, AlgebraError> {
        let ring = RingParams::with_default_cap(block.modulus as u32, block.k as usize, block.truncation)?;
        let n = block.n as usize;
        let cube = (n as u32).pow(3);
        let sp = Self {
            ring,
            n,
            d: block.d as u32,
            m_range: (cube, 2 * cube),
            k0_range: default_k0_range(ring.vars()),
            exp_bound: block.exp_bound as u32,
            word_len: block.word_len as usize,
            t: SecurityLevel::default(),
            endo_image_degree: DEFAULT_IMAGE_DEGREE.min(block.truncation - 1),
        };
        sp.check()?;
        Ok(sp)
    }

    /// n = 3, N = 1000, d = 25, k = 10 over Z_11, m ∈ [27, 54],
    /// k0 ∈ [4, 6], exponents up to 5, words of length 10.
    pub fn paper_default() -> Self {
        Self::from_block(&ParamsBlock {
            modulus: 11,
            k: 10,
            truncation: 1000,
            n: 3,
            d: 25,
            word_len: 10,
            exp_bound: 5,
        })
        .expect("default parameters are valid")
    }

    /// Small ring used for bulk experiments: n = 3, k = 4, N = 64, d = 9,
    /// words of length 6. Keys have one or two factors and the exponents
    /// are fixed at 1. Anything larger fills the 2080-monomial masked ring
    /// long before the word is evaluated and a session costs several times
    /// more.
    pub fn desk() -> Self {
        let mut sp = Self::from_block(&ParamsBlock {
            modulus: 11,
            k: 4,
            truncation: 64,
            n: 3,
            d: 9,
            word_len: 6,
            exp_bound: 1,
        })
        .expect("desk parameters are valid");
        sp.m_range = (1, 2);
        sp
    }

    /// n = 2, k = 2, N = 2: every entry is affine, so the conjugacy
    /// equations are small enough to solve outright.
    pub fn tiny() -> Self {
        let mut sp = Self::from_block(&ParamsBlock {
            modulus: 11,
            k: 2,
            truncation: 2,
            n: 2,
            d: 4,
            word_len: 4,
            exp_bound: 2,
        })
        .expect("tiny parameters are valid");
        sp.m_range = (2, 4);
        sp
    }

    /// n = 2, k = 1, N = 2. A single variable leaves no room for a
    /// masking endomorphism, so only the unmasked protocol runs here; the
    /// conjugacy equations have eight unknowns.
    pub fn micro() -> Self {
        let mut sp = Self::from_block(&ParamsBlock {
            modulus: 11,
            k: 1,
            truncation: 2,
            n: 2,
            d: 4,
            word_len: 4,
            exp_bound: 2,
        })
        .expect("micro parameters are valid");
        sp.m_range = (2, 4);
        sp
    }

    /// Entries per generated polynomial, `⌊√d⌋` (at least one).
    pub fn sparsity(&self) -> usize {
        (self.d as f64).sqrt().floor().max(1.0) as usize
    }

    pub fn block(&self) -> ParamsBlock {
        ParamsBlock {
            modulus: self.ring.modulus() as u16,
            k: self.ring.vars() as u16,
            truncation: self.ring.truncation(),
            n: self.n as u8,
            d: self.d as u16,
            word_len: self.word_len as u8,
            exp_bound: self.exp_bound as u8,
        }
    }

    /// Structural sanity: ranges ordered, sizes encodable.
    pub fn check(&self) -> Result<(), AlgebraError> {
        let bad = |msg: String| Err(AlgebraError::InvalidParams(msg));
        if !(1..=255).contains(&self.n) {
            return bad(format!("n = {} must lie in [1, 255]", self.n));
        }
        if self.d == 0 || self.d > u16::MAX as u32 {
            return bad(format!("d = {} must lie in [1, 65535]", self.d));
        }
        if self.m_range.0 == 0 || self.m_range.0 > self.m_range.1 {
            return bad(format!("bad m range {:?}", self.m_range));
        }
        if self.k0_range.0 == 0 || self.k0_range.0 > self.k0_range.1 {
            return bad(format!("bad k0 range {:?}", self.k0_range));
        }
        if !(1..=255).contains(&self.exp_bound) {
            return bad(format!("exponent bound {} must lie in [1, 255]", self.exp_bound));
        }
        if !(2..=255).contains(&self.word_len) {
            return bad(format!("word length {} must lie in [2, 255]", self.word_len));
        }
        if self.endo_image_degree == 0 {
            return bad("endomorphism image degree cap must be positive".into());
        }
        Ok(())
    }

    /// Evaluates the advisory inequalities against `self.t`.
    pub fn validate(&self) -> ValidationReport {
        validate_params(self, &self.t)
    }
}

/// The parameter fields carried in key files and Hello frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamsBlock {
    pub modulus: u16,
    pub k: u16,
    pub truncation: u32,
    pub n: u8,
    pub d: u16,
    pub word_len: u8,
    pub exp_bound: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub detail: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub t: BigUint,
    /// `M(N, k) = C(N + k, k)`.
    pub monomials: BigUint,
    /// Approximate value of `d^(m/n) · k · log₂N · n²` at the top of the m range.
    pub sparsity_bound: f64,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "t = {}", self.t)?;
        for c in &self.checks {
            writeln!(f, "{}\t{}\t{}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        Ok(())
    }
}

const LOG_SCALE_BITS: u32 = 64;

/// `⌊log₂(x) · 2^64⌋` for `x >= 1`, from the integer part plus a
/// double-precision fraction.
fn scaled_log2(x: u64) -> BigUint {
    let int = 63 - x.leading_zeros() as u64;
    let frac = (x as f64).log2() - int as f64;
    let frac_scaled = (frac * 2f64.powi(52)) as u64;
    (BigUint::from(int) << LOG_SCALE_BITS) + (BigUint::from(frac_scaled) << (LOG_SCALE_BITS - 52))
}

/// Checks `M(N,k) >= t`, `N <= t`, `k <= t` and
/// `d^(m/n) · k · log₂N · n² < t` for `m` at the top of its range.
/// Everything is integer arithmetic except the fractional bits of `log₂N`.
pub fn validate_params(sp: &SchemeParams, t: &SecurityLevel) -> ValidationReport {
    let t = t.0.clone();
    let k = sp.ring.vars() as u64;
    let big_n = sp.ring.truncation() as u64;
    let n = sp.n as u64;
    let m = sp.m_range.1 as u64;
    let d = sp.d as u64;

    let monomials = binomial(big_n + k, k);
    let mut checks = vec![
        Check {
            name: "monomial-count",
            detail: format!("M(N,k) = C({}, {}) = {} >= t", big_n + k, k, monomials),
            pass: monomials >= t,
        },
        Check {
            name: "truncation-bound",
            detail: format!("N = {big_n} <= t"),
            pass: BigUint::from(big_n) <= t,
        },
        Check { name: "variable-bound", detail: format!("k = {k} <= t"), pass: BigUint::from(k) <= t },
    ];

    // d^(m/n) · c < t  <=>  d^m · c^n < t^n, with c = k · n² · log₂N
    // carried with 64 fractional bits.
    let c_scaled = BigUint::from(k * n * n) * scaled_log2(big_n);
    let lhs = BigUint::from(d).pow(m as u32) * c_scaled.pow(n as u32);
    let rhs = (&t << LOG_SCALE_BITS).pow(n as u32);
    let sparsity_bound =
        (d as f64).powf(m as f64 / n as f64) * k as f64 * (big_n as f64).log2() * (n * n) as f64;
    checks.push(Check {
        name: "sparsity-bound",
        detail: format!("d^(m/n)·k·log2(N)·n^2 ≈ {sparsity_bound:.4e} < t at m = {m}"),
        pass: lhs < rhs,
    });

    ValidationReport { t, monomials, sparsity_bound, checks }
}

/// `t` as a float, for display.
pub fn approx(t: &BigUint) -> f64 {
    t.to_f64().unwrap_or(f64::INFINITY)
}
