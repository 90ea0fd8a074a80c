//! Prime-order subgroups of `Z_p^*` for safe primes `p = 2q + 1`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;

use crate::crypto::{hash_parts, Decode, DecodeError, Decoder, Encode, Encoder};

/// 2048-bit MODP prime from RFC 3526 (group 14).
const RFC3526_2048: &str = "\
FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74\
020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437\
4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED\
EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05\
98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB\
9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B\
E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718\
3995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFFFFFFFFFF";

/// Which fixed group to instantiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupChoice {
    /// RFC 3526 2048-bit group, generator 2.
    Standard2048,
    /// `p = 2039`, `q = 1019`, generator 4. For exhaustive and statistical
    /// tests only; offers no security.
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupParams {
    pub p: BigUint,
    pub q: BigUint,
    pub g: BigUint,
    /// Second generator with unknown discrete log relative to `g`.
    pub h: BigUint,
}

impl GroupParams {
    pub fn new(choice: GroupChoice, seed: &str) -> Self {
        let (p, g) = match choice {
            GroupChoice::Standard2048 => (
                BigUint::parse_bytes(RFC3526_2048.as_bytes(), 16).expect("valid hex constant"),
                BigUint::from(2u32),
            ),
            GroupChoice::Test => (BigUint::from(2039u32), BigUint::from(4u32)),
        };
        let q = (&p - 1u32) >> 1;
        let h = derive_second_generator(&p, &g, seed);
        GroupParams { p, q, g, h }
    }

    pub fn element_len(&self) -> usize {
        byte_len(&self.p)
    }

    pub fn scalar_len(&self) -> usize {
        byte_len(&self.q)
    }

    pub fn pow(&self, base: &BigUint, exp: &BigUint) -> BigUint {
        base.modpow(exp, &self.p)
    }

    pub fn mul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a * b) % &self.p
    }

    /// `true` iff `x` lies in the order-`q` subgroup.
    pub fn is_member(&self, x: &BigUint) -> bool {
        !x.is_zero() && x < &self.p && self.pow(x, &self.q).is_one()
    }

    /// `g^{-m}` computed as `g^{q - (m mod q)}`.
    pub fn inv_pow(&self, base: &BigUint, m: &BigUint) -> BigUint {
        let e = (&self.q - (m % &self.q)) % &self.q;
        self.pow(base, &e)
    }

    pub fn random_scalar<R: RngCore>(&self, rng: &mut R) -> BigUint {
        let mut buf = vec![0u8; self.scalar_len() + 16];
        rng.fill_bytes(&mut buf);
        BigUint::from_bytes_be(&buf) % &self.q
    }

    /// Prime modulus, `p = 2q + 1` with `q` prime, and both generators of
    /// order exactly `q`.
    pub fn is_well_formed(&self) -> bool {
        let two = BigUint::from(2u32);
        self.p > BigUint::from(5u32)
            && self.p == &self.q * &two + 1u32
            && is_probable_prime(&self.q)
            && is_probable_prime(&self.p)
            && !self.g.is_one()
            && self.is_member(&self.g)
            && !self.h.is_one()
            && self.h != self.g
            && self.is_member(&self.h)
    }

    pub fn to_fixed(&self, x: &BigUint, len: usize) -> Vec<u8> {
        let raw = x.to_bytes_be();
        let mut out = vec![0u8; len.saturating_sub(raw.len())];
        out.extend_from_slice(&raw);
        out
    }
}

impl Encode for GroupParams {
    fn encode(&self, enc: &mut Encoder) {
        enc.bytes(&self.p.to_bytes_be())
            .bytes(&self.q.to_bytes_be())
            .bytes(&self.g.to_bytes_be())
            .bytes(&self.h.to_bytes_be());
    }
}

impl Decode for GroupParams {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let mut int = || -> Result<BigUint, DecodeError> {
            let bytes = dec.bytes()?;
            if bytes.first() == Some(&0) || bytes.is_empty() {
                return Err(DecodeError::NonCanonical("integer with leading zero"));
            }
            Ok(BigUint::from_bytes_be(&bytes))
        };
        Ok(GroupParams {
            p: int()?,
            q: int()?,
            g: int()?,
            h: int()?,
        })
    }
}

fn byte_len(x: &BigUint) -> usize {
    (x.bits() as usize).div_ceil(8)
}

/// Hash-to-subgroup: square a hash-derived residue, retrying on the counter
/// until the result is neither 1 nor `g`.
fn derive_second_generator(p: &BigUint, g: &BigUint, seed: &str) -> BigUint {
    let wide = byte_len(p) + 16;
    for counter in 0u64.. {
        let mut bytes = Vec::with_capacity(wide);
        let mut block = 0u64;
        while bytes.len() < wide {
            let d = hash_parts(&[
                b"flightnft/group/h",
                seed.as_bytes(),
                &counter.to_be_bytes(),
                &block.to_be_bytes(),
            ]);
            bytes.extend_from_slice(d.as_bytes());
            block += 1;
        }
        let x = BigUint::from_bytes_be(&bytes[..wide]) % p;
        let h = x.modpow(&BigUint::from(2u32), p);
        if !h.is_zero() && !h.is_one() && &h != g {
            return h;
        }
    }
    unreachable!("counter space exhausted")
}

/// Miller-Rabin with fixed small-prime bases. Deterministic for every
/// `n < 3.3e24` and overwhelmingly reliable above that.
pub fn is_probable_prime(n: &BigUint) -> bool {
    const BASES: [u32; 20] = [
        2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
    ];
    let two = BigUint::from(2u32);
    if n < &two {
        return false;
    }
    for &b in &BASES {
        let b = BigUint::from(b);
        if n == &b {
            return true;
        }
        if (n % &b).is_zero() {
            return false;
        }
    }
    let n_minus_1 = n - 1u32;
    let mut d = n_minus_1.clone();
    let mut s = 0u32;
    while d.is_even() {
        d >>= 1;
        s += 1;
    }
    'bases: for &b in &BASES {
        let mut x = BigUint::from(b).modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}
