//! Canonical byte encoding used for every hashed or persisted value.
//!
//! Rules:
//!
//! | kind              | bytes                                              |
//! |-------------------|----------------------------------------------------|
//! | `u8`              | 1 byte                                             |
//! | `u64`             | 8 bytes, big-endian                                |
//! | `bool`            | 1 byte, `0x00` or `0x01`                           |
//! | `f64`             | IEEE-754 bits as `u64`; `-0.0` is written as `0.0` |
//! | string / bytes    | `u64` length, then the raw bytes (UTF-8 for text)  |
//! | sequence          | `u64` element count, then each element             |
//! | `Option<T>`       | `0x00`, or `0x01` followed by `T`                  |
//! | enum variant      | 1-byte tag, then the variant's fields in order     |
//! | fixed arrays      | raw bytes, no prefix (digests, addresses, nonces)  |
//! | struct            | fields in declaration order, no separators         |
//!
//! Non-finite floats cannot be encoded. The decoder is strict: it rejects
//! trailing bytes, out-of-range tags, non-canonical booleans, `-0.0` and
//! non-finite floats, so every accepted byte string re-encodes to itself.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("non-finite float cannot be canonically encoded")]
    NonFiniteFloat,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("unexpected end of input at offset {0}")]
    UnexpectedEnd(usize),
    #[error("{0} trailing bytes after value")]
    TrailingBytes(usize),
    #[error("invalid tag {tag} for {what}")]
    InvalidTag { what: &'static str, tag: u8 },
    #[error("invalid utf-8 in string")]
    InvalidUtf8,
    #[error("non-canonical value: {0}")]
    NonCanonical(&'static str),
    #[error("length {0} exceeds remaining input")]
    LengthOverflow(u64),
}

/// Owned canonical encoding of a value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalBytes(Vec<u8>);

impl CanonicalBytes {
    pub fn into_vec(self) -> Vec<u8> {
        self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }
}

impl std::ops::Deref for CanonicalBytes {
    type Target = [u8];

    fn deref(&self) -> &[u8] {
        &self.0
    }
}

impl AsRef<[u8]> for CanonicalBytes {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

#[derive(Debug, Default)]
pub struct Encoder {
    buf: Vec<u8>,
    non_finite: bool,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn bool(&mut self, v: bool) -> &mut Self {
        self.u8(v as u8)
    }

    pub fn f64(&mut self, v: f64) -> &mut Self {
        if !v.is_finite() {
            self.non_finite = true;
        }
        let v = if v == 0.0 { 0.0 } else { v };
        self.u64(v.to_bits())
    }

    pub fn len(&mut self, n: usize) -> &mut Self {
        self.u64(n as u64)
    }

    pub fn bytes(&mut self, v: &[u8]) -> &mut Self {
        self.len(v.len());
        self.buf.extend_from_slice(v);
        self
    }

    pub fn str(&mut self, v: &str) -> &mut Self {
        self.bytes(v.as_bytes())
    }

    /// Raw bytes with no length prefix; only for fixed-width fields.
    pub fn raw(&mut self, v: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(v);
        self
    }

    pub fn value<T: Encode + ?Sized>(&mut self, v: &T) -> &mut Self {
        v.encode(self);
        self
    }

    pub fn seq<'a, T, I>(&mut self, items: I) -> &mut Self
    where
        T: Encode + 'a,
        I: IntoIterator<Item = &'a T>,
        I::IntoIter: ExactSizeIterator,
    {
        let it = items.into_iter();
        self.len(it.len());
        for item in it {
            item.encode(self);
        }
        self
    }

    pub fn finish(self) -> Result<CanonicalBytes, EncodeError> {
        if self.non_finite {
            return Err(EncodeError::NonFiniteFloat);
        }
        Ok(CanonicalBytes(self.buf))
    }
}

pub struct Decoder<'a> {
    input: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    pub fn new(input: &'a [u8]) -> Self {
        Self { input, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.input.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.remaining() < n {
            return Err(DecodeError::UnexpectedEnd(self.input.len()));
        }
        let out = &self.input[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N], DecodeError> {
        let mut out = [0u8; N];
        out.copy_from_slice(self.take(N)?);
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }

    pub fn u64(&mut self) -> Result<u64, DecodeError> {
        Ok(u64::from_be_bytes(self.array()?))
    }

    pub fn bool(&mut self) -> Result<bool, DecodeError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            tag => Err(DecodeError::InvalidTag { what: "bool", tag }),
        }
    }

    pub fn f64(&mut self) -> Result<f64, DecodeError> {
        let bits = self.u64()?;
        let v = f64::from_bits(bits);
        if !v.is_finite() {
            return Err(DecodeError::NonCanonical("non-finite float"));
        }
        if bits == (-0.0f64).to_bits() {
            return Err(DecodeError::NonCanonical("negative zero"));
        }
        Ok(v)
    }

    /// Reads a length prefix and checks it against the remaining input,
    /// assuming each element needs at least `min_elem` bytes.
    pub fn len(&mut self, min_elem: usize) -> Result<usize, DecodeError> {
        let n = self.u64()?;
        let need = n.checked_mul(min_elem.max(1) as u64);
        match need {
            Some(need) if need <= self.remaining() as u64 || min_elem == 0 => Ok(n as usize),
            _ => Err(DecodeError::LengthOverflow(n)),
        }
    }

    pub fn bytes(&mut self) -> Result<Vec<u8>, DecodeError> {
        let n = self.len(1)?;
        Ok(self.take(n)?.to_vec())
    }

    pub fn string(&mut self) -> Result<String, DecodeError> {
        String::from_utf8(self.bytes()?).map_err(|_| DecodeError::InvalidUtf8)
    }

    pub fn value<T: Decode>(&mut self) -> Result<T, DecodeError> {
        T::decode(self)
    }

    pub fn seq<T: Decode>(&mut self) -> Result<Vec<T>, DecodeError> {
        let n = self.len(1)?;
        (0..n).map(|_| T::decode(self)).collect()
    }

    pub fn finish(self) -> Result<(), DecodeError> {
        match self.remaining() {
            0 => Ok(()),
            n => Err(DecodeError::TrailingBytes(n)),
        }
    }
}

pub trait Encode {
    fn encode(&self, enc: &mut Encoder);
}

pub trait Decode: Sized {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError>;
}

/// Encodes `value` with the canonical rules above.
pub fn canonical_encode<T: Encode + ?Sized>(value: &T) -> Result<CanonicalBytes, EncodeError> {
    let mut enc = Encoder::new();
    value.encode(&mut enc);
    enc.finish()
}

/// Decodes a complete value; trailing bytes are an error.
pub fn canonical_decode<T: Decode>(bytes: &[u8]) -> Result<T, DecodeError> {
    let mut dec = Decoder::new(bytes);
    let v = T::decode(&mut dec)?;
    dec.finish()?;
    Ok(v)
}

impl Encode for u8 {
    fn encode(&self, enc: &mut Encoder) {
        enc.u8(*self);
    }
}

impl Decode for u8 {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        dec.u8()
    }
}

impl Encode for u64 {
    fn encode(&self, enc: &mut Encoder) {
        enc.u64(*self);
    }
}

impl Decode for u64 {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        dec.u64()
    }
}

impl Encode for bool {
    fn encode(&self, enc: &mut Encoder) {
        enc.bool(*self);
    }
}

impl Decode for bool {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        dec.bool()
    }
}

impl Encode for f64 {
    fn encode(&self, enc: &mut Encoder) {
        enc.f64(*self);
    }
}

impl Decode for f64 {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        dec.f64()
    }
}

impl Encode for str {
    fn encode(&self, enc: &mut Encoder) {
        enc.str(self);
    }
}

impl Encode for String {
    fn encode(&self, enc: &mut Encoder) {
        enc.str(self);
    }
}

impl Decode for String {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        dec.string()
    }
}

impl<T: Encode> Encode for [T] {
    fn encode(&self, enc: &mut Encoder) {
        enc.seq(self);
    }
}

impl<T: Encode> Encode for Vec<T> {
    fn encode(&self, enc: &mut Encoder) {
        enc.seq(self);
    }
}

impl<T: Decode> Decode for Vec<T> {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        dec.seq()
    }
}

impl<T: Encode> Encode for Option<T> {
    fn encode(&self, enc: &mut Encoder) {
        match self {
            None => {
                enc.u8(0);
            }
            Some(v) => {
                enc.u8(1).value(v);
            }
        }
    }
}

impl<T: Decode> Decode for Option<T> {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        match dec.u8()? {
            0 => Ok(None),
            1 => Ok(Some(T::decode(dec)?)),
            tag => Err(DecodeError::InvalidTag {
                what: "option",
                tag,
            }),
        }
    }
}

impl<const N: usize> Encode for [u8; N] {
    fn encode(&self, enc: &mut Encoder) {
        enc.raw(self);
    }
}

impl<const N: usize> Decode for [u8; N] {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        dec.array()
    }
}

impl<A: Encode, B: Encode> Encode for (A, B) {
    fn encode(&self, enc: &mut Encoder) {
        enc.value(&self.0).value(&self.1);
    }
}

impl<A: Decode, B: Decode> Decode for (A, B) {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok((dec.value()?, dec.value()?))
    }
}
