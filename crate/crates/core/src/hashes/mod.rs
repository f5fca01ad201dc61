//! The closed set of hash functions used by the schemes.
//!
//! Three roles share this registry: the message hash `H`, the HORS one-way
//! function `f` and the OHBF hash `h`. Every algorithm has a fixed output
//! length; digests are byte strings interpreted big-endian whenever an
//! integer is needed.

mod city;

use std::fmt;
use std::str::FromStr;

use blake2::digest::{Update, VariableOutput};
use blake2::{Blake2b, Blake2sVar, Digest as _};
use num_bigint::BigUint;
use sha2::{Sha256, Sha512};
use twox_hash::{XxHash3_128, XxHash3_64};

use crate::error::{Error, Result};

pub use city::city_hash_crc256;

/// Largest output of any registered algorithm, in bytes.
pub const MAX_DIGEST_LEN: usize = 64;

/// Identifier of a registered hash algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HashAlgoId {
    Sha2_256,
    Sha2_512,
    Blake2s128,
    Blake2s160,
    Blake2b256,
    Xxh3_64,
    Xxh3_128,
    City256,
}

impl HashAlgoId {
    pub const ALL: [HashAlgoId; 8] = [
        HashAlgoId::Sha2_256,
        HashAlgoId::Sha2_512,
        HashAlgoId::Blake2s128,
        HashAlgoId::Blake2s160,
        HashAlgoId::Blake2b256,
        HashAlgoId::Xxh3_64,
        HashAlgoId::Xxh3_128,
        HashAlgoId::City256,
    ];

    /// The identifier as it appears in files and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            HashAlgoId::Sha2_256 => "SHA2-256",
            HashAlgoId::Sha2_512 => "SHA2-512",
            HashAlgoId::Blake2s128 => "BLAKE2s-128",
            HashAlgoId::Blake2s160 => "BLAKE2s-160",
            HashAlgoId::Blake2b256 => "BLAKE2b-256",
            HashAlgoId::Xxh3_64 => "XXH3-64",
            HashAlgoId::Xxh3_128 => "XXH3-128",
            HashAlgoId::City256 => "CITY-256",
        }
    }

    pub fn output_bits(self) -> u32 {
        match self {
            HashAlgoId::Sha2_256 => 256,
            HashAlgoId::Sha2_512 => 512,
            HashAlgoId::Blake2s128 => 128,
            HashAlgoId::Blake2s160 => 160,
            HashAlgoId::Blake2b256 => 256,
            HashAlgoId::Xxh3_64 => 64,
            HashAlgoId::Xxh3_128 => 128,
            HashAlgoId::City256 => 256,
        }
    }

    pub fn output_len(self) -> usize {
        self.output_bits() as usize / 8
    }

    /// Whether the algorithm is a cryptographic hash (usable as `H` or `f`).
    pub fn is_cryptographic(self) -> bool {
        !matches!(
            self,
            HashAlgoId::Xxh3_64 | HashAlgoId::Xxh3_128 | HashAlgoId::City256
        )
    }

    /// One-byte code used by the binary file formats.
    pub fn code(self) -> u8 {
        match self {
            HashAlgoId::Sha2_256 => 1,
            HashAlgoId::Sha2_512 => 2,
            HashAlgoId::Blake2s128 => 3,
            HashAlgoId::Blake2s160 => 4,
            HashAlgoId::Blake2b256 => 5,
            HashAlgoId::Xxh3_64 => 6,
            HashAlgoId::Xxh3_128 => 7,
            HashAlgoId::City256 => 8,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        HashAlgoId::ALL.into_iter().find(|a| a.code() == code)
    }
}

impl fmt::Display for HashAlgoId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HashAlgoId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        HashAlgoId::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownAlgorithm(s.to_string()))
    }
}

/// A fixed-length hash output, stored inline.
#[derive(Clone, Copy)]
pub struct Digest {
    buf: [u8; MAX_DIGEST_LEN],
    len: u8,
}

impl Digest {
    fn from_slice(bytes: &[u8]) -> Self {
        let mut buf = [0u8; MAX_DIGEST_LEN];
        buf[..bytes.len()].copy_from_slice(bytes);
        Digest {
            buf,
            len: bytes.len() as u8,
        }
    }

    /// Wraps raw digest bytes, e.g. an externally computed hash. `None` if
    /// longer than [`MAX_DIGEST_LEN`].
    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        (bytes.len() <= MAX_DIGEST_LEN).then(|| Digest::from_slice(bytes))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.buf[..self.len as usize]
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit_len(&self) -> u32 {
        self.len as u32 * 8
    }
}

impl PartialEq for Digest {
    fn eq(&self, other: &Self) -> bool {
        self.as_bytes() == other.as_bytes()
    }
}

impl Eq for Digest {}

impl std::hash::Hash for Digest {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.as_bytes().hash(state)
    }
}

impl AsRef<[u8]> for Digest {
    fn as_ref(&self) -> &[u8] {
        self.as_bytes()
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest(")?;
        for b in self.as_bytes() {
            write!(f, "{b:02x}")?;
        }
        write!(f, ")")
    }
}

/// Hashes `message` with `algo`.
pub fn digest(algo: HashAlgoId, message: &[u8]) -> Digest {
    match algo {
        HashAlgoId::Sha2_256 => Digest::from_slice(&Sha256::digest(message)),
        HashAlgoId::Sha2_512 => Digest::from_slice(&Sha512::digest(message)),
        HashAlgoId::Blake2s128 | HashAlgoId::Blake2s160 => {
            let mut out = [0u8; 20];
            let n = algo.output_len();
            let mut h = Blake2sVar::new(n).expect("valid blake2s length");
            h.update(message);
            h.finalize_variable(&mut out[..n])
                .expect("buffer sized to output");
            Digest::from_slice(&out[..n])
        }
        HashAlgoId::Blake2b256 => {
            Digest::from_slice(&Blake2b::<blake2::digest::consts::U32>::digest(message))
        }
        HashAlgoId::Xxh3_64 => Digest::from_slice(&XxHash3_64::oneshot(message).to_be_bytes()),
        HashAlgoId::Xxh3_128 => Digest::from_slice(&XxHash3_128::oneshot(message).to_be_bytes()),
        HashAlgoId::City256 => {
            let words = city_hash_crc256(message);
            let mut out = [0u8; 32];
            for (chunk, w) in out.chunks_exact_mut(8).zip(words) {
                chunk.copy_from_slice(&w.to_be_bytes());
            }
            Digest::from_slice(&out)
        }
    }
}

/// Hashes the concatenation `head || tail` without allocating for short
/// inputs.
pub(crate) fn digest_concat(algo: HashAlgoId, head: &[u8], tail: &[u8]) -> Digest {
    match algo {
        HashAlgoId::Sha2_256 => {
            let mut h = Sha256::new();
            sha2::Digest::update(&mut h, head);
            sha2::Digest::update(&mut h, tail);
            Digest::from_slice(&h.finalize())
        }
        HashAlgoId::Sha2_512 => {
            let mut h = Sha512::new();
            sha2::Digest::update(&mut h, head);
            sha2::Digest::update(&mut h, tail);
            Digest::from_slice(&h.finalize())
        }
        _ => {
            let total = head.len() + tail.len();
            if total <= 128 {
                let mut buf = [0u8; 128];
                buf[..head.len()].copy_from_slice(head);
                buf[head.len()..total].copy_from_slice(tail);
                digest(algo, &buf[..total])
            } else {
                let mut buf = Vec::with_capacity(total);
                buf.extend_from_slice(head);
                buf.extend_from_slice(tail);
                digest(algo, &buf)
            }
        }
    }
}

/// Hashes `prefix || tail` for many tails, absorbing the prefix once.
pub(crate) enum PrefixHasher<'a> {
    Sha256(Sha256),
    Sha512(Sha512),
    Other(HashAlgoId, &'a [u8]),
}

impl<'a> PrefixHasher<'a> {
    pub(crate) fn new(algo: HashAlgoId, prefix: &'a [u8]) -> Self {
        match algo {
            HashAlgoId::Sha2_256 => PrefixHasher::Sha256(Sha256::new_with_prefix(prefix)),
            HashAlgoId::Sha2_512 => PrefixHasher::Sha512(Sha512::new_with_prefix(prefix)),
            _ => PrefixHasher::Other(algo, prefix),
        }
    }

    pub(crate) fn finish(&self, tail: &[u8]) -> Digest {
        match self {
            PrefixHasher::Sha256(h) => Digest::from_slice(&h.clone().chain_update(tail).finalize()),
            PrefixHasher::Sha512(h) => Digest::from_slice(&h.clone().chain_update(tail).finalize()),
            PrefixHasher::Other(algo, prefix) => digest_concat(*algo, prefix, tail),
        }
    }
}

/// Interprets the digest bytes as a big-endian unsigned integer.
pub fn digest_to_uint(d: &Digest) -> BigUint {
    BigUint::from_bytes_be(d.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hex(d: &Digest) -> String {
        d.as_bytes().iter().map(|b| format!("{b:02x}")).collect()
    }

    #[test]
    fn sha256_empty() {
        assert_eq!(
            hex(&digest(HashAlgoId::Sha2_256, b"")),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    // Reference values from Python's hashlib and the xxhash package.
    #[test]
    fn known_answers_for_abc() {
        let cases = [
            (HashAlgoId::Sha2_256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"),
            (HashAlgoId::Sha2_512, "ddaf35a193617abacc417349ae20413112e6fa4e89a97ea20a9eeee64b55d39a2192992a274fc1a836ba3c23a3feebbd454d4423643ce80e2a9ac94fa54ca49f"),
            (HashAlgoId::Blake2s128, "aa4938119b1dc7b87cbad0ffd200d0ae"),
            (HashAlgoId::Blake2s160, "5ae3b99be29b01834c3b508521ede60438f8de17"),
            (HashAlgoId::Blake2b256, "bddd813c634239723171ef3fee98579b94964e3bb1cb3e427262c8c068d52319"),
            (HashAlgoId::Xxh3_64, "78af5f94892f3950"),
            (HashAlgoId::Xxh3_128, "06b05ab6733a618578af5f94892f3950"),
            (HashAlgoId::City256, "d8358212684ce8d99656bb305d74e6868db723c70c58deab19b3e5e08d44610e"),
        ];
        for (algo, want) in cases {
            assert_eq!(hex(&digest(algo, b"abc")), want, "{algo}");
        }
    }

    #[test]
    fn declared_lengths() {
        let expected = [256, 512, 128, 160, 256, 64, 128, 256];
        for (algo, bits) in HashAlgoId::ALL.into_iter().zip(expected) {
            assert_eq!(algo.output_bits(), bits);
            assert_eq!(digest(algo, b"x").bit_len(), bits);
        }
    }

    #[test]
    fn names_and_codes_round_trip() {
        for algo in HashAlgoId::ALL {
            assert_eq!(algo.name().parse::<HashAlgoId>().unwrap(), algo);
            assert_eq!(HashAlgoId::from_code(algo.code()), Some(algo));
        }
        assert_eq!(
            "MD5".parse::<HashAlgoId>(),
            Err(Error::UnknownAlgorithm("MD5".into()))
        );
        assert_eq!(HashAlgoId::from_code(0), None);
    }

    #[test]
    fn uint_is_big_endian() {
        let one = Digest::from_slice(&[0, 0, 0, 1]);
        assert_eq!(digest_to_uint(&one), BigUint::from(1u32));
        let d = Digest::from_slice(&[1, 0]);
        assert_eq!(digest_to_uint(&d), BigUint::from(256u32));
        let x = digest_to_uint(&digest(HashAlgoId::Xxh3_64, b"m"));
        assert!(x < BigUint::from(1u128 << 64));
    }

    #[test]
    fn output_length_for_many_inputs() {
        let mut state = 0x1234_5678_9abc_def0u64;
        for n in 0..1000usize {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let msg: Vec<u8> = (0..n % 300).map(|i| (state >> (i % 56)) as u8).collect();
            for algo in HashAlgoId::ALL {
                assert_eq!(digest(algo, &msg).len(), algo.output_len());
            }
        }
    }

    proptest! {
        #[test]
        fn deterministic(msg in proptest::collection::vec(any::<u8>(), 0..400)) {
            for algo in HashAlgoId::ALL {
                prop_assert_eq!(digest(algo, &msg), digest(algo, &msg));
            }
        }

        #[test]
        fn concat_matches_oneshot(
            a in proptest::collection::vec(any::<u8>(), 0..200),
            b in proptest::collection::vec(any::<u8>(), 0..40),
        ) {
            let joined = [a.as_slice(), b.as_slice()].concat();
            for algo in HashAlgoId::ALL {
                prop_assert_eq!(digest_concat(algo, &a, &b), digest(algo, &joined));
                let prefixed = PrefixHasher::new(algo, &a);
                prop_assert_eq!(prefixed.finish(&b), digest(algo, &joined));
                prop_assert_eq!(prefixed.finish(&b), digest(algo, &joined));
            }
        }

        #[test]
        fn uint_monotone_in_byte_order(
            a in proptest::collection::vec(any::<u8>(), 16),
            b in proptest::collection::vec(any::<u8>(), 16),
        ) {
            let (da, db) = (Digest::from_slice(&a), Digest::from_slice(&b));
            prop_assert_eq!(a.cmp(&b), digest_to_uint(&da).cmp(&digest_to_uint(&db)));
        }
    }
}
