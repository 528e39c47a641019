//! Little-endian binary encodings of ring elements, messages and key
//! files.
//!
//! Polynomial: term count (u32), then per term `k` exponents (u16) and one
//! coefficient byte, terms in ascending graded-lex order. Endomorphism:
//! `k0` (u8), the omitted indices ascending (u8 each), then `k`
//! polynomials. Matrix: `n` (u8), then `n²` polynomials row-major. Factored
//! key: factor count (u32), then per factor `i`, `j` (u8 each) and `u`.

use thiserror::Error;

use crate::endo::Endomorphism;
use crate::matrix::{ElementaryFactor, FactoredInvertible, Matrix};
use crate::poly::{Monomial, RingParams, TruncatedPoly};
use crate::protocol::{
    Commit, Constants, ErrorCode, Exponents, Hello, Message, ParamsBlock, PrivateKey, PublicKey,
    SchemeParams, Verdict,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("input ends early: needed {needed} more bytes")]
    Truncated { needed: usize },
    #[error("unknown message type 0x{0:02x}")]
    UnknownType(u8),
    #[error("terms out of canonical order")]
    NonCanonicalOrder,
    #[error("coefficient {coeff} is not below the modulus {modulus}")]
    CoefficientRange { coeff: u8, modulus: u8 },
    #[error("zero coefficient stored explicitly")]
    ZeroCoefficient,
    #[error("monomial degree {degree} is not below N = {truncation}")]
    DegreeRange { degree: u32, truncation: u32 },
    #[error("{0} trailing bytes")]
    TrailingBytes(usize),
    #[error("invalid endomorphism: {0}")]
    InvalidEndomorphism(String),
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported version {0}")]
    UnsupportedVersion(u8),
    #[error("malformed payload: {0}")]
    Malformed(String),
}

pub const MSG_COMMIT: u8 = 0x01;
pub const MSG_EXPONENTS: u8 = 0x02;
pub const MSG_CONSTANTS: u8 = 0x03;
pub const MSG_RESPONSE: u8 = 0x04;
pub const MSG_VERDICT: u8 = 0x05;
pub const MSG_HELLO: u8 = 0x06;
pub const MSG_ERROR: u8 = 0x07;

pub const KEY_MAGIC: &[u8; 4] = b"CJAT";
pub const KEY_VERSION: u8 = 1;
pub const PARAMS_BLOCK_LEN: usize = 13;

/// Byte cursor that reports how much was missing.
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.remaining() < n {
            return Err(DecodeError::Truncated { needed: n - self.remaining() });
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, DecodeError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn rest(&mut self) -> &'a [u8] {
        let out = &self.buf[self.pos..];
        self.pos = self.buf.len();
        out
    }

    pub fn finish(&self) -> Result<(), DecodeError> {
        match self.remaining() {
            0 => Ok(()),
            n => Err(DecodeError::TrailingBytes(n)),
        }
    }
}

pub fn put_poly(out: &mut Vec<u8>, p: &TruncatedPoly) {
    let ring = p.ring();
    out.extend_from_slice(&(p.len() as u32).to_le_bytes());
    for &(m, c) in p.terms() {
        for e in ring.exponents(m) {
            out.extend_from_slice(&(e as u16).to_le_bytes());
        }
        out.push(c);
    }
}

pub fn get_poly(r: &mut Reader<'_>, ring: &RingParams) -> Result<TruncatedPoly, DecodeError> {
    let count = r.u32()? as usize;
    let k = ring.vars();
    let term_len = 2 * k + 1;
    // refuse counts the input cannot hold before allocating
    let bytes = count.saturating_mul(term_len);
    if bytes > r.remaining() {
        return Err(DecodeError::Truncated { needed: bytes - r.remaining() });
    }
    let mut terms: Vec<(Monomial, u8)> = Vec::with_capacity(count);
    let mut exps = vec![0u32; k];
    for _ in 0..count {
        let mut degree = 0u32;
        for e in exps.iter_mut() {
            *e = r.u16()? as u32;
            degree += *e;
        }
        let c = r.u8()?;
        if degree >= ring.truncation() {
            return Err(DecodeError::DegreeRange { degree, truncation: ring.truncation() });
        }
        if c == 0 {
            return Err(DecodeError::ZeroCoefficient);
        }
        if c >= ring.modulus() {
            return Err(DecodeError::CoefficientRange { coeff: c, modulus: ring.modulus() });
        }
        let m = ring.monomial(&exps).map_err(|e| DecodeError::Malformed(e.to_string()))?;
        if terms.last().is_some_and(|&(prev, _)| prev >= m) {
            return Err(DecodeError::NonCanonicalOrder);
        }
        terms.push((m, c));
    }
    Ok(TruncatedPoly::from_canonical(*ring, terms))
}

pub fn put_endo(out: &mut Vec<u8>, phi: &Endomorphism) {
    out.push(phi.omitted_vars().len() as u8);
    out.extend(phi.omitted_vars().iter().map(|&v| v as u8));
    for f in phi.images() {
        put_poly(out, f);
    }
}

pub fn get_endo(r: &mut Reader<'_>, ring: &RingParams) -> Result<Endomorphism, DecodeError> {
    let k0 = r.u8()? as usize;
    let omitted: Vec<usize> = r.take(k0)?.iter().map(|&v| v as usize).collect();
    if omitted.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DecodeError::InvalidEndomorphism("omitted indices not strictly ascending".into()));
    }
    let images = (0..ring.vars()).map(|_| get_poly(r, ring)).collect::<Result<Vec<_>, _>>()?;
    Endomorphism::new(*ring, images, omitted).map_err(|e| DecodeError::InvalidEndomorphism(e.to_string()))
}

pub fn put_matrix(out: &mut Vec<u8>, m: &Matrix) {
    out.push(m.dim() as u8);
    for e in m.entries() {
        put_poly(out, e);
    }
}

pub fn get_matrix(r: &mut Reader<'_>, ring: &RingParams) -> Result<Matrix, DecodeError> {
    let n = r.u8()? as usize;
    if n == 0 {
        return Err(DecodeError::Malformed("matrix dimension 0".into()));
    }
    let entries = (0..n * n).map(|_| get_poly(r, ring)).collect::<Result<Vec<_>, _>>()?;
    Matrix::from_entries(*ring, n, entries).map_err(|e| DecodeError::Malformed(e.to_string()))
}

pub fn put_factored(out: &mut Vec<u8>, x: &FactoredInvertible) {
    out.extend_from_slice(&(x.factors().len() as u32).to_le_bytes());
    for f in x.factors() {
        out.push(f.row() as u8);
        out.push(f.col() as u8);
        put_poly(out, f.entry());
    }
}

pub fn get_factored(
    r: &mut Reader<'_>,
    ring: &RingParams,
    n: usize,
) -> Result<FactoredInvertible, DecodeError> {
    let m = r.u32()? as usize;
    // each factor takes at least 6 bytes
    if m.saturating_mul(6) > r.remaining() {
        return Err(DecodeError::Truncated { needed: m * 6 - r.remaining() });
    }
    let mut factors = Vec::with_capacity(m);
    for _ in 0..m {
        let i = r.u8()? as usize;
        let j = r.u8()? as usize;
        let u = get_poly(r, ring)?;
        factors.push(ElementaryFactor::new(i, j, u).map_err(|e| DecodeError::Malformed(e.to_string()))?);
    }
    FactoredInvertible::new(*ring, n, factors).map_err(|e| DecodeError::Malformed(e.to_string()))
}

pub fn put_params(out: &mut Vec<u8>, b: &ParamsBlock) {
    out.extend_from_slice(&b.modulus.to_le_bytes());
    out.extend_from_slice(&b.k.to_le_bytes());
    out.extend_from_slice(&b.truncation.to_le_bytes());
    out.push(b.n);
    out.extend_from_slice(&b.d.to_le_bytes());
    out.push(b.word_len);
    out.push(b.exp_bound);
}

pub fn get_params(r: &mut Reader<'_>) -> Result<ParamsBlock, DecodeError> {
    Ok(ParamsBlock {
        modulus: r.u16()?,
        k: r.u16()?,
        truncation: r.u32()?,
        n: r.u8()?,
        d: r.u16()?,
        word_len: r.u8()?,
        exp_bound: r.u8()?,
    })
}

pub fn message_type(msg: &Message) -> u8 {
    match msg {
        Message::Commit(_) => MSG_COMMIT,
        Message::Exponents(_) => MSG_EXPONENTS,
        Message::Constants(_) => MSG_CONSTANTS,
        Message::Response(_) => MSG_RESPONSE,
        Message::Verdict(_) => MSG_VERDICT,
        Message::Hello(_) => MSG_HELLO,
        Message::Error { .. } => MSG_ERROR,
    }
}

/// Payload bytes of a message, without the frame header.
pub fn encode_payload(msg: &Message) -> Vec<u8> {
    let mut out = Vec::new();
    match msg {
        Message::Hello(h) => {
            out.push(h.version);
            put_params(&mut out, &h.params);
        }
        Message::Commit(c) => {
            put_matrix(&mut out, &c.b);
            put_endo(&mut out, &c.phi);
        }
        Message::Exponents(e) => {
            out.push(e.p as u8);
            out.push(e.q as u8);
        }
        Message::Constants(c) => {
            out.extend(c.c.iter().map(|&x| x as u8));
            match &c.b_prime {
                Some(b) => {
                    out.push(1);
                    put_matrix(&mut out, b);
                }
                None => out.push(0),
            }
        }
        Message::Response(m) => put_matrix(&mut out, m),
        Message::Verdict(v) => out.push(v.is_accept() as u8),
        Message::Error { code, reason } => {
            out.push(*code as u8);
            out.extend_from_slice(reason.as_bytes());
        }
    }
    out
}

/// Decodes a payload of type `ty`. Ring elements are read against `ring`.
pub fn decode_payload(ty: u8, payload: &[u8], ring: &RingParams) -> Result<Message, DecodeError> {
    let mut r = Reader::new(payload);
    let msg = match ty {
        MSG_HELLO => Message::Hello(Hello { version: r.u8()?, params: get_params(&mut r)? }),
        MSG_COMMIT => Message::Commit(Commit { b: get_matrix(&mut r, ring)?, phi: get_endo(&mut r, ring)? }),
        MSG_EXPONENTS => Message::Exponents(Exponents { p: r.u8()? as u32, q: r.u8()? as u32 }),
        MSG_CONSTANTS => {
            let c = [r.u8()? as u32, r.u8()? as u32, r.u8()? as u32];
            let b_prime = match r.u8()? {
                0 => None,
                1 => Some(get_matrix(&mut r, ring)?),
                f => return Err(DecodeError::Malformed(format!("B' flag {f}"))),
            };
            Message::Constants(Constants { c, b_prime })
        }
        MSG_RESPONSE => Message::Response(get_matrix(&mut r, ring)?),
        MSG_VERDICT => Message::Verdict(match r.u8()? {
            1 => Verdict::Accept,
            0 => Verdict::Reject,
            v => return Err(DecodeError::Malformed(format!("verdict byte {v}"))),
        }),
        MSG_ERROR => {
            let raw = r.u8()?;
            let code = ErrorCode::from_byte(raw)
                .ok_or_else(|| DecodeError::Malformed(format!("error code {raw}")))?;
            let reason = String::from_utf8(r.rest().to_vec())
                .map_err(|_| DecodeError::Malformed("error reason is not UTF-8".into()))?;
            Message::Error { code, reason }
        }
        other => return Err(DecodeError::UnknownType(other)),
    };
    r.finish()?;
    Ok(msg)
}

/// Full frame: type byte, payload length (u32), payload.
pub fn encode(msg: &Message) -> Vec<u8> {
    let payload = encode_payload(msg);
    let mut out = Vec::with_capacity(payload.len() + 5);
    out.push(message_type(msg));
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(&payload);
    out
}

/// Inverse of [`encode`]; the buffer must hold exactly one frame.
pub fn decode(bytes: &[u8], ring: &RingParams) -> Result<Message, DecodeError> {
    let mut r = Reader::new(bytes);
    let ty = r.u8()?;
    let len = r.u32()? as usize;
    let payload = r.take(len)?;
    r.finish()?;
    decode_payload(ty, payload, ring)
}

fn key_header(out: &mut Vec<u8>, sp: &SchemeParams) {
    out.extend_from_slice(KEY_MAGIC);
    out.push(KEY_VERSION);
    put_params(out, &sp.block());
}

fn read_key_header(r: &mut Reader<'_>) -> Result<SchemeParams, DecodeError> {
    if r.take(4)? != KEY_MAGIC {
        return Err(DecodeError::BadMagic);
    }
    let version = r.u8()?;
    if version != KEY_VERSION {
        return Err(DecodeError::UnsupportedVersion(version));
    }
    let block = get_params(r)?;
    SchemeParams::from_block(&block).map_err(|e| DecodeError::Malformed(e.to_string()))
}

pub fn encode_public_key(sp: &SchemeParams, key: &PublicKey) -> Vec<u8> {
    let mut out = Vec::new();
    key_header(&mut out, sp);
    put_matrix(&mut out, &key.a);
    put_matrix(&mut out, &key.p);
    out
}

/// Returns the parameters from the header along with the key.
pub fn decode_public_key(bytes: &[u8]) -> Result<(SchemeParams, PublicKey), DecodeError> {
    let mut r = Reader::new(bytes);
    let sp = read_key_header(&mut r)?;
    let a = get_matrix(&mut r, &sp.ring)?;
    let p = get_matrix(&mut r, &sp.ring)?;
    r.finish()?;
    check_dim(&sp, &a)?;
    check_dim(&sp, &p)?;
    Ok((sp, PublicKey { a, p }))
}

/// The factored conjugator followed by the base matrix `A`.
pub fn encode_private_key(sp: &SchemeParams, key: &PrivateKey) -> Vec<u8> {
    let mut out = Vec::new();
    key_header(&mut out, sp);
    put_factored(&mut out, &key.x);
    put_matrix(&mut out, &key.a);
    out
}

pub fn decode_private_key(bytes: &[u8]) -> Result<(SchemeParams, PrivateKey), DecodeError> {
    let mut r = Reader::new(bytes);
    let sp = read_key_header(&mut r)?;
    let x = get_factored(&mut r, &sp.ring, sp.n)?;
    let a = get_matrix(&mut r, &sp.ring)?;
    r.finish()?;
    check_dim(&sp, &a)?;
    Ok((sp, PrivateKey { x, a }))
}

fn check_dim(sp: &SchemeParams, m: &Matrix) -> Result<(), DecodeError> {
    if m.dim() != sp.n {
        return Err(DecodeError::Malformed(format!(
            "matrix is {0}x{0}, parameters say n = {1}",
            m.dim(),
            sp.n
        )));
    }
    Ok(())
}
