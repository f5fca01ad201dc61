//! HORS one-time signatures with weak-message hardening.
//!
//! Index derivation, counter search, seed expansion and signing live here
//! and are reused verbatim by [`crate::tvpd`]; the two schemes differ only
//! in how the public key commits to the secret strings.

use crate::error::{Error, Result};
use crate::hashes::{digest, digest_concat, Digest, HashAlgoId, PrefixHasher};
use crate::metrics::{self, HashRole};
use crate::params::SchemeParams;

/// Upper bound on counter values tried before giving up.
pub const MAX_COUNTER_ATTEMPTS: u64 = 1 << 20;

/// Seeds are 32 bytes.
pub type Seed = [u8; 32];

/// The fixed 4-byte big-endian encoding used for both the signing counter
/// and the secret-string index.
#[inline]
pub fn encode_u32(v: u32) -> [u8; 4] {
    v.to_be_bytes()
}

/// Splits the leftmost `k·log2(t)` bits of `H(message || ctr)` into `k`
/// big-endian `log2(t)`-bit indices.
pub fn derive_indices(params: &SchemeParams, message: &[u8], ctr: u32) -> Vec<u32> {
    let mut out = vec![0u32; params.k() as usize];
    derive_into(params, message, ctr, &mut out);
    out
}

fn derive_into(params: &SchemeParams, message: &[u8], ctr: u32, out: &mut [u32]) {
    metrics::record_hash(HashRole::Message);
    let d = digest_concat(params.message_hash(), message, &encode_u32(ctr));
    split_indices(&d, params.log_t(), out);
}

fn split_indices(d: &Digest, width: u32, out: &mut [u32]) {
    let mask = (1u64 << width) - 1;
    let mut acc = 0u64;
    let mut have = 0u32;
    let mut bytes = d.as_bytes().iter();
    for slot in out.iter_mut() {
        while have < width {
            acc = (acc << 8) | *bytes.next().expect("index bits fit the digest") as u64;
            have += 8;
        }
        have -= width;
        *slot = ((acc >> have) & mask) as u32;
    }
}

/// True when no index repeats.
pub fn all_distinct(indices: &[u32], t: u32) -> bool {
    if t <= 4096 {
        let mut seen = [0u64; 64];
        for &i in indices {
            let (w, b) = ((i / 64) as usize, i % 64);
            if seen[w] >> b & 1 == 1 {
                return false;
            }
            seen[w] |= 1 << b;
        }
        true
    } else {
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        sorted.windows(2).all(|w| w[0] != w[1])
    }
}

/// Smallest counter for which the derived indices are pairwise distinct,
/// together with those indices.
pub fn find_counter_with_indices(params: &SchemeParams, message: &[u8]) -> Result<(u32, Vec<u32>)> {
    let mut indices = vec![0u32; params.k() as usize];
    let hasher = PrefixHasher::new(params.message_hash(), message);
    for ctr in 0..MAX_COUNTER_ATTEMPTS {
        metrics::record_hash(HashRole::Message);
        let d = hasher.finish(&encode_u32(ctr as u32));
        split_indices(&d, params.log_t(), &mut indices);
        if all_distinct(&indices, params.t()) {
            return Ok((ctr as u32, indices));
        }
    }
    Err(Error::CounterExhausted {
        attempts: MAX_COUNTER_ATTEMPTS,
    })
}

pub fn find_counter(params: &SchemeParams, message: &[u8]) -> Result<u32> {
    find_counter_with_indices(params, message).map(|(ctr, _)| ctr)
}

/// The `t` secret strings, expanded from a seed.
#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey {
    seed: Seed,
    element_len: usize,
    strings: Vec<u8>,
}

impl SecretKey {
    /// `s_i` = leftmost `l` bits of `H(seed || i)` for `i = 1..=t`.
    pub fn expand(params: &SchemeParams, seed: &Seed) -> Self {
        let element_len = params.element_len();
        let mut strings = Vec::with_capacity(params.secret_key_len());
        for i in 1..=params.t() {
            metrics::record_hash(HashRole::Message);
            let d = digest_concat(params.message_hash(), seed, &encode_u32(i));
            strings.extend_from_slice(&d.as_bytes()[..element_len]);
        }
        SecretKey {
            seed: *seed,
            element_len,
            strings,
        }
    }

    pub fn seed(&self) -> &Seed {
        &self.seed
    }

    pub fn len(&self) -> usize {
        self.strings.len() / self.element_len
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    /// `s_{index+1}` (indices are 0-based here).
    pub fn string(&self, index: usize) -> &[u8] {
        &self.strings[index * self.element_len..(index + 1) * self.element_len]
    }

    pub fn strings(&self) -> impl ExactSizeIterator<Item = &[u8]> {
        self.strings.chunks_exact(self.element_len)
    }

    /// Reveals the strings selected for `message`.
    pub fn sign(&self, params: &SchemeParams, message: &[u8]) -> Result<Signature> {
        let (ctr, indices) = find_counter_with_indices(params, message)?;
        let mut elements = Vec::with_capacity(indices.len() * self.element_len);
        for &i in &indices {
            elements.extend_from_slice(self.string(i as usize));
        }
        Ok(Signature {
            ctr,
            element_len: self.element_len,
            elements,
        })
    }
}

impl std::fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SecretKey")
            .field("t", &self.len())
            .field("element_len", &self.element_len)
            .finish_non_exhaustive()
    }
}

/// k revealed secret strings plus the counter that made their indices
/// distinct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    ctr: u32,
    element_len: usize,
    elements: Vec<u8>,
}

impl Signature {
    /// Builds a signature from a counter and equally sized elements.
    pub fn from_parts(ctr: u32, element_len: usize, elements: Vec<u8>) -> Option<Self> {
        (element_len > 0 && elements.len().is_multiple_of(element_len)).then_some(Signature {
            ctr,
            element_len,
            elements,
        })
    }

    pub fn ctr(&self) -> u32 {
        self.ctr
    }

    pub fn element_len(&self) -> usize {
        self.element_len
    }

    pub fn k(&self) -> usize {
        self.elements.len() / self.element_len
    }

    pub fn element(&self, j: usize) -> &[u8] {
        &self.elements[j * self.element_len..(j + 1) * self.element_len]
    }

    pub fn elements(&self) -> impl ExactSizeIterator<Item = &[u8]> {
        self.elements.chunks_exact(self.element_len)
    }

    /// All elements, concatenated.
    pub fn element_bytes(&self) -> &[u8] {
        &self.elements
    }

    pub fn element_bytes_mut(&mut self) -> &mut [u8] {
        &mut self.elements
    }

    pub fn set_ctr(&mut self, ctr: u32) {
        self.ctr = ctr;
    }

    /// Payload size: 4-byte counter plus the elements.
    pub fn encoded_len(&self) -> usize {
        4 + self.elements.len()
    }

    /// Whether the shape matches `params`.
    pub fn fits(&self, params: &SchemeParams) -> bool {
        self.element_len == params.element_len() && self.k() == params.k() as usize
    }
}

/// HORS public key: the image of every secret string under `f`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HorsPublicKey {
    images: Vec<Digest>,
}

impl HorsPublicKey {
    pub fn from_images(images: Vec<Digest>) -> Self {
        HorsPublicKey { images }
    }

    pub fn images(&self) -> &[Digest] {
        &self.images
    }

    pub fn verify(&self, params: &SchemeParams, message: &[u8], sig: &Signature) -> bool {
        hors_verify(self, params, message, sig)
    }
}

/// A HORS key pair. Each key pair must sign at most one message;
/// [`HorsKeyPair::sign_once`] enforces this for the in-memory key.
#[derive(Debug, Clone)]
pub struct HorsKeyPair {
    params: SchemeParams,
    sk: SecretKey,
    pk: HorsPublicKey,
    used: bool,
}

impl HorsKeyPair {
    pub fn generate(params: &SchemeParams, seed: &Seed) -> Self {
        let sk = SecretKey::expand(params, seed);
        let pk = hors_public_key(params, &sk);
        HorsKeyPair {
            params: params.clone(),
            sk,
            pk,
            used: false,
        }
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn secret(&self) -> &SecretKey {
        &self.sk
    }

    pub fn public(&self) -> &HorsPublicKey {
        &self.pk
    }

    pub fn is_used(&self) -> bool {
        self.used
    }

    /// Signs without touching the used flag.
    pub fn sign(&self, message: &[u8]) -> Result<Signature> {
        self.sk.sign(&self.params, message)
    }

    /// Signs and marks the key as used; a second call fails with
    /// [`Error::KeyReused`].
    pub fn sign_once(&mut self, message: &[u8]) -> Result<Signature> {
        if self.used {
            return Err(Error::KeyReused);
        }
        let sig = self.sign(message)?;
        self.used = true;
        Ok(sig)
    }
}

/// Computes `v_i = f(s_i)` for every secret string.
pub fn hors_public_key(params: &SchemeParams, sk: &SecretKey) -> HorsPublicKey {
    let f = params.one_way();
    let images = sk
        .strings()
        .map(|s| {
            metrics::record_hash(HashRole::OneWay);
            digest(f, s)
        })
        .collect();
    HorsPublicKey { images }
}

pub fn hors_keygen(params: &SchemeParams, seed: &Seed) -> HorsKeyPair {
    HorsKeyPair::generate(params, seed)
}

pub fn hors_sign(kp: &HorsKeyPair, message: &[u8]) -> Result<Signature> {
    kp.sign(message)
}

/// Accepts iff the counter yields distinct indices and every element hashes
/// to the public image at its index. Malformed inputs are rejected.
pub fn hors_verify(
    pk: &HorsPublicKey,
    params: &SchemeParams,
    message: &[u8],
    sig: &Signature,
) -> bool {
    if !sig.fits(params) || pk.images.len() != params.t() as usize {
        return false;
    }
    let mut indices = vec![0u32; params.k() as usize];
    derive_into(params, message, sig.ctr(), &mut indices);
    if !all_distinct(&indices, params.t()) {
        return false;
    }
    let f: HashAlgoId = params.one_way();
    indices.iter().zip(sig.elements()).all(|(&i, s)| {
        metrics::record_hash(HashRole::OneWay);
        digest(f, s) == pk.images[i as usize]
    })
}
