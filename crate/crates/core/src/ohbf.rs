//! One-Hash Bloom Filter.
//!
//! The bit vector is split into `p` pairwise-coprime partitions laid out
//! back to back: partition 1 occupies bits `[0, n_1)`, partition 2 the next
//! `n_2` bits, and so on. An element is hashed once with `h`; the digest,
//! read as a big-endian integer `x`, selects bit `x mod n_j` inside every
//! partition `j`.

use crate::error::{Error, Result};
use crate::hashes::{digest, digest_concat, Digest, HashAlgoId};
use crate::metrics::{self, HashRole};

/// Upper bound on a single partition, in bits.
///
/// Keeps the word-folding reduction inside 64-bit arithmetic for digests of
/// up to 512 bits.
pub const MAX_PARTITION_BITS: u32 = 1 << 24;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// The sizes `n_1 … n_p` of the filter partitions, in bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartitionPlan {
    sizes: Vec<u32>,
}

impl PartitionPlan {
    /// Validates `sizes`: at least two partitions, each in
    /// `[2, MAX_PARTITION_BITS]`, pairwise coprime.
    pub fn new(sizes: Vec<u32>) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::InvalidPlan(format!(
                "need at least 2 partitions, got {}",
                sizes.len()
            )));
        }
        if let Some(&n) = sizes
            .iter()
            .find(|&&n| !(2..=MAX_PARTITION_BITS).contains(&n))
        {
            return Err(Error::InvalidPlan(format!(
                "partition size {n} outside [2, {MAX_PARTITION_BITS}]"
            )));
        }
        for (i, &a) in sizes.iter().enumerate() {
            for &b in &sizes[i + 1..] {
                let g = gcd(a as u64, b as u64);
                if g != 1 {
                    return Err(Error::InvalidPlan(format!(
                        "sizes {a} and {b} share the factor {g}"
                    )));
                }
            }
        }
        Ok(PartitionPlan { sizes })
    }

    /// Like [`PartitionPlan::new`], also requiring the sizes to cover at
    /// least `total_bits`.
    pub fn covering(sizes: Vec<u32>, total_bits: u64) -> Result<Self> {
        let plan = Self::new(sizes)?;
        if plan.total_bits() < total_bits {
            return Err(Error::InvalidPlan(format!(
                "sizes sum to {} bits, below the required {total_bits}",
                plan.total_bits()
            )));
        }
        Ok(plan)
    }

    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }

    pub fn p(&self) -> usize {
        self.sizes.len()
    }

    pub fn total_bits(&self) -> u64 {
        self.sizes.iter().map(|&n| n as u64).sum()
    }

    /// Size of the packed bit vector in bytes.
    pub fn packed_len(&self) -> usize {
        self.total_bits().div_ceil(8) as usize
    }
}

/// Barrett reduction of 64-bit values by a fixed small modulus.
#[derive(Debug, Clone, Copy)]
struct Modulus {
    d: u64,
    m: u64,
}

impl Modulus {
    fn new(d: u32) -> Self {
        let d = d as u64;
        Modulus { d, m: u64::MAX / d }
    }

    #[inline(always)]
    fn reduce(self, a: u64) -> u64 {
        // q > a/d - a/2^64 - 1, so r < 2d and one correction suffices.
        let q = ((a as u128 * self.m as u128) >> 64) as u64;
        let r = a - q * self.d;
        if r >= self.d {
            r - self.d
        } else {
            r
        }
    }
}

/// Per-partition reduction tables for digests of a given width.
///
/// A digest of `W` big-endian 32-bit words `w_0 … w_{W-1}` is reduced as
/// `(Σ w_i · (2^(32(W-1-i)) mod n)) mod n`, which equals the digest integer
/// mod `n`.
#[derive(Debug, Clone)]
struct Reducer {
    words: usize,
    moduli: Vec<Modulus>,
    offsets: Vec<u64>,
    // coefficients[j * words + i] = 2^(32 (words-1-i)) mod n_j
    coefficients: Vec<u64>,
}

impl Reducer {
    fn new(plan: &PartitionPlan, digest_len: usize) -> Self {
        let words = digest_len.div_ceil(4);
        let mut coefficients = Vec::with_capacity(plan.p() * words);
        let mut offsets = Vec::with_capacity(plan.p());
        let mut offset = 0u64;
        for &n in plan.sizes() {
            let n64 = n as u64;
            let step = (1u64 << 32) % n64;
            let mut c = 1 % n64;
            let mut col = vec![0u64; words];
            for i in (0..words).rev() {
                col[i] = c;
                c = c * step % n64;
            }
            coefficients.extend(col);
            offsets.push(offset);
            offset += n64;
        }
        Reducer {
            words,
            moduli: plan.sizes().iter().map(|&n| Modulus::new(n)).collect(),
            offsets,
            coefficients,
        }
    }

    /// Writes the global bit index selected in every partition into `out`.
    fn positions(&self, d: &Digest, out: &mut [u64]) {
        let mut slots = out.iter_mut();
        self.for_each(d, |pos| {
            *slots.next().expect("one slot per partition") = pos;
            true
        });
    }

    /// Calls `visit` with the global bit index of each partition in order,
    /// stopping when it returns false. Returns the number of partitions
    /// visited.
    #[inline]
    fn for_each(&self, d: &Digest, visit: impl FnMut(u64) -> bool) -> usize {
        match self.words {
            2 => self.for_each_w::<2>(d, visit),
            4 => self.for_each_w::<4>(d, visit),
            5 => self.for_each_w::<5>(d, visit),
            8 => self.for_each_w::<8>(d, visit),
            16 => self.for_each_w::<16>(d, visit),
            _ => unreachable!("no registered digest has {} words", self.words),
        }
    }

    #[inline(always)]
    fn for_each_w<const W: usize>(&self, d: &Digest, mut visit: impl FnMut(u64) -> bool) -> usize {
        let mut w = [0u64; W];
        for (slot, chunk) in w.iter_mut().zip(d.as_bytes().chunks_exact(4)) {
            *slot = u32::from_be_bytes(chunk.try_into().unwrap()) as u64;
        }
        for (j, ((m, off), coef)) in self
            .moduli
            .iter()
            .zip(&self.offsets)
            .zip(self.coefficients.chunks_exact(W))
            .enumerate()
        {
            let mut acc = 0u64;
            for i in 0..W {
                acc += w[i] * coef[i];
            }
            if !visit(off + m.reduce(acc)) {
                return j + 1;
            }
        }
        self.moduli.len()
    }
}

/// Residue of a big-endian byte string modulo `n`, by plain long division.
/// Used to cross-check the folded reduction.
#[cfg(test)]
fn residue_schoolbook(bytes: &[u8], n: u32) -> u64 {
    bytes
        .iter()
        .fold(0u64, |r, &b| (r * 256 + b as u64) % n as u64)
}

/// A One-Hash Bloom Filter. Doubles as the TVPD-HORS public key.
#[derive(Debug, Clone)]
pub struct OhbfFilter {
    plan: PartitionPlan,
    algo: HashAlgoId,
    bits: Vec<u64>,
    inserted: u64,
    reducer: Reducer,
}

impl OhbfFilter {
    /// An all-zero filter over `plan`, hashing with `algo`.
    pub fn new(plan: PartitionPlan, algo: HashAlgoId) -> Self {
        let words = plan.total_bits().div_ceil(64) as usize;
        let reducer = Reducer::new(&plan, algo.output_len());
        OhbfFilter {
            plan,
            algo,
            bits: vec![0; words],
            inserted: 0,
            reducer,
        }
    }

    pub fn plan(&self) -> &PartitionPlan {
        &self.plan
    }

    pub fn algo(&self) -> HashAlgoId {
        self.algo
    }

    /// Number of insert calls since creation. Diagnostic only; not part of
    /// the serialized key.
    pub fn inserted_count(&self) -> u64 {
        self.inserted
    }

    pub fn len_bits(&self) -> u64 {
        self.plan.total_bits()
    }

    pub fn bit(&self, index: u64) -> bool {
        assert!(index < self.len_bits(), "bit {index} out of range");
        self.bits[(index / 64) as usize] >> (index % 64) & 1 == 1
    }

    pub fn popcount(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Set bits inside partition `j` (0-based).
    pub fn partition_popcount(&self, j: usize) -> u64 {
        let start = self.reducer.offsets[j];
        let end = start + self.plan.sizes()[j] as u64;
        (start..end).filter(|&i| self.bit(i)).count() as u64
    }

    /// Global bit indices a digest selects, one per partition.
    pub fn positions(&self, d: &Digest) -> Vec<u64> {
        let mut out = vec![0u64; self.plan.p()];
        self.reducer.positions(d, &mut out);
        out
    }

    pub fn insert(&mut self, element: &[u8]) {
        metrics::record_hash(HashRole::Filter);
        let d = digest(self.algo, element);
        self.insert_digest(&d);
    }

    pub(crate) fn insert_concat(&mut self, head: &[u8], tail: &[u8]) {
        metrics::record_hash(HashRole::Filter);
        let d = digest_concat(self.algo, head, tail);
        self.insert_digest(&d);
    }

    /// Inserts an element whose `h` digest has already been computed.
    pub fn insert_digest(&mut self, d: &Digest) {
        let bits = &mut self.bits;
        let n = self.reducer.for_each(d, |pos| {
            bits[(pos / 64) as usize] |= 1 << (pos % 64);
            true
        });
        metrics::record_reductions(n as u64);
        self.inserted += 1;
    }

    pub fn contains(&self, element: &[u8]) -> bool {
        metrics::record_hash(HashRole::Filter);
        self.contains_digest(&digest(self.algo, element))
    }

    pub(crate) fn contains_concat(&self, head: &[u8], tail: &[u8]) -> bool {
        metrics::record_hash(HashRole::Filter);
        self.contains_digest(&digest_concat(self.algo, head, tail))
    }

    /// Membership check for a precomputed digest. Stops at the first clear
    /// bit.
    pub fn contains_digest(&self, d: &Digest) -> bool {
        let mut present = true;
        let n = self.reducer.for_each(d, |pos| {
            present = self.bits[(pos / 64) as usize] >> (pos % 64) & 1 == 1;
            present
        });
        metrics::record_reductions(n as u64);
        present
    }

    /// The bit vector packed MSB-first, zero-padded to a byte boundary.
    pub fn to_packed_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.plan.packed_len()];
        for (w, &word) in self.bits.iter().enumerate() {
            let mut word = word;
            while word != 0 {
                let b = word.trailing_zeros() as u64;
                let index = w as u64 * 64 + b;
                out[(index / 8) as usize] |= 0x80 >> (index % 8);
                word &= word - 1;
            }
        }
        out
    }

    /// Rebuilds a filter from its packed bit vector. Padding bits past the
    /// end of the last partition must be zero. `inserted_count` is unknown
    /// and reported as zero.
    pub fn from_packed_bytes(plan: PartitionPlan, algo: HashAlgoId, packed: &[u8]) -> Option<Self> {
        if packed.len() != plan.packed_len() {
            return None;
        }
        let total = plan.total_bits();
        let mut filter = OhbfFilter::new(plan, algo);
        for (i, &byte) in packed.iter().enumerate() {
            for b in 0..8u64 {
                if byte & (0x80 >> b) != 0 {
                    let index = i as u64 * 8 + b;
                    if index >= total {
                        return None;
                    }
                    filter.bits[(index / 64) as usize] |= 1 << (index % 64);
                }
            }
        }
        Some(filter)
    }
}

impl PartialEq for OhbfFilter {
    /// Filters are equal when they have the same plan, hash and bits.
    fn eq(&self, other: &Self) -> bool {
        self.plan == other.plan && self.algo == other.algo && self.bits == other.bits
    }
}

impl Eq for OhbfFilter {}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, RngCore, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    const KAPPA32_PLAN: [u32; 8] = [971, 977, 983, 991, 997, 1009, 1013, 1019];

    fn stub_digest(x: u64) -> Digest {
        Digest::from_bytes(&x.to_be_bytes()).unwrap()
    }

    #[test]
    fn init_kappa32_plan() {
        let plan = PartitionPlan::new(KAPPA32_PLAN.to_vec()).unwrap();
        let f = OhbfFilter::new(plan, HashAlgoId::Xxh3_64);
        assert_eq!(f.len_bits(), 7960);
        assert_eq!(f.popcount(), 0);
        assert_eq!(f.inserted_count(), 0);
    }

    #[test]
    fn init_small_plan() {
        let f = OhbfFilter::new(PartitionPlan::new(vec![3, 5]).unwrap(), HashAlgoId::City256);
        assert_eq!(f.len_bits(), 8);
        assert_eq!(f.popcount(), 0);
    }

    #[test]
    fn rejects_bad_plans() {
        assert!(matches!(
            PartitionPlan::new(vec![4, 6]),
            Err(Error::InvalidPlan(_))
        ));
        assert!(matches!(
            PartitionPlan::new(vec![7]),
            Err(Error::InvalidPlan(_))
        ));
        assert!(matches!(
            PartitionPlan::new(vec![1, 7]),
            Err(Error::InvalidPlan(_))
        ));
        assert!(matches!(
            PartitionPlan::new(vec![3, 5, 9]),
            Err(Error::InvalidPlan(_))
        ));
        assert!(matches!(
            PartitionPlan::covering(vec![3, 5], 9),
            Err(Error::InvalidPlan(_))
        ));
        assert!(PartitionPlan::covering(vec![3, 5], 8).is_ok());
    }

    #[test]
    fn insert_with_stub_hash() {
        let mut f = OhbfFilter::new(PartitionPlan::new(vec![3, 5]).unwrap(), HashAlgoId::Xxh3_64);
        f.insert_digest(&stub_digest(7));
        // 7 mod 3 = 1 in partition 1, 7 mod 5 = 2 in partition 2 (offset 3).
        let set: Vec<u64> = (0..8).filter(|&i| f.bit(i)).collect();
        assert_eq!(set, vec![1, 3 + 2]);
        assert!(f.contains_digest(&stub_digest(7)));
        // 22 = 1 mod 3, 2 mod 5
        assert!(f.contains_digest(&stub_digest(22)));
        assert!(!f.contains_digest(&stub_digest(8)));
    }

    #[test]
    fn insert_is_idempotent_on_bits() {
        let mut f = OhbfFilter::new(
            PartitionPlan::new(KAPPA32_PLAN.to_vec()).unwrap(),
            HashAlgoId::Xxh3_64,
        );
        f.insert(b"element");
        let before = f.to_packed_bytes();
        f.insert(b"element");
        assert_eq!(f.to_packed_bytes(), before);
        assert_eq!(f.inserted_count(), 2);
    }

    #[test]
    fn no_false_negatives_and_bounded_popcount() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for algo in [
            HashAlgoId::Xxh3_64,
            HashAlgoId::Xxh3_128,
            HashAlgoId::City256,
            HashAlgoId::Sha2_512,
        ] {
            let mut f = OhbfFilter::new(PartitionPlan::new(vec![101, 103, 107]).unwrap(), algo);
            let items: Vec<[u8; 12]> = (0..40).map(|_| rng.gen()).collect();
            for it in &items {
                f.insert(it);
            }
            assert!(items.iter().all(|it| f.contains(it)));
            for j in 0..3 {
                assert!(f.partition_popcount(j) <= 40);
            }
        }
    }

    #[test]
    fn barrett_edges() {
        for d in [2u32, 3, 971, 1019, (1 << 24) - 3, 1 << 24, u32::MAX] {
            let m = Modulus::new(d);
            for a in [
                0,
                1,
                d as u64 - 1,
                d as u64,
                u64::MAX,
                u64::MAX - 1,
                u64::MAX / d as u64 * d as u64,
            ] {
                assert_eq!(m.reduce(a), a % d as u64, "{a} mod {d}");
            }
        }
    }

    #[test]
    fn empty_filter_rejects() {
        let f = OhbfFilter::new(PartitionPlan::new(vec![3, 5]).unwrap(), HashAlgoId::Xxh3_64);
        assert!(!f.contains(b"anything"));
    }

    #[test]
    fn one_hash_per_operation() {
        let mut f = OhbfFilter::new(
            PartitionPlan::new(KAPPA32_PLAN.to_vec()).unwrap(),
            HashAlgoId::Xxh3_64,
        );
        let ((), c) = metrics::measure(|| f.insert(b"x"));
        assert_eq!((c.filter_hash, c.reductions), (1, 8));
        let (hit, c) = metrics::measure(|| f.contains(b"x"));
        assert!(hit);
        assert_eq!((c.filter_hash, c.reductions), (1, 8));
        // a miss stops at the first clear bit
        let (hit, c) = metrics::measure(|| f.contains(b"y"));
        assert!(!hit);
        assert_eq!(c.filter_hash, 1);
        assert!((1..=8).contains(&c.reductions));
    }

    #[test]
    fn kappa32_plan_has_no_false_positives_at_2_pow_20() {
        let mut rng = ChaCha20Rng::seed_from_u64(0x0bf);
        let mut f = OhbfFilter::new(
            PartitionPlan::new(KAPPA32_PLAN.to_vec()).unwrap(),
            HashAlgoId::Xxh3_64,
        );
        for _ in 0..64 {
            let mut e = [0u8; 16];
            rng.fill_bytes(&mut e);
            f.insert(&e);
        }
        let mut positives = 0;
        for _ in 0..(1u32 << 20) {
            let mut e = [0u8; 16];
            rng.fill_bytes(&mut e);
            positives += f.contains(&e) as u32;
        }
        assert_eq!(positives, 0);
    }

    #[test]
    fn packed_layout_is_msb_first() {
        let mut f = OhbfFilter::new(PartitionPlan::new(vec![3, 5]).unwrap(), HashAlgoId::Xxh3_64);
        f.insert_digest(&stub_digest(7));
        // bits 1 and 5 set -> 0b0100_0100
        assert_eq!(f.to_packed_bytes(), vec![0x44]);
        let g = OhbfFilter::from_packed_bytes(f.plan().clone(), f.algo(), &[0x44]).unwrap();
        assert_eq!(f, g);
        // 3 + 4 = 7 bits -> padding bit 7 must stay clear
        let plan = PartitionPlan::new(vec![3, 4]).unwrap();
        assert!(OhbfFilter::from_packed_bytes(plan, HashAlgoId::Xxh3_64, &[0x01]).is_none());
    }

    proptest! {
        #[test]
        fn folded_reduction_matches_long_division(
            bytes in proptest::collection::vec(any::<u8>(), 64),
            n in 2u32..=MAX_PARTITION_BITS,
            len_sel in 0usize..5,
        ) {
            let len = [8, 16, 20, 32, 64][len_sel];
            let d = Digest::from_bytes(&bytes[..len]).unwrap();
            // pair n with a coprime neighbour so the plan is valid
            let other = if n == MAX_PARTITION_BITS { n - 1 } else { n + 1 };
            let plan = PartitionPlan::new(vec![n, other]).unwrap();
            let r = Reducer::new(&plan, len);
            let mut out = [0u64; 2];
            r.positions(&d, &mut out);
            prop_assert_eq!(out[0], residue_schoolbook(&bytes[..len], n));
            prop_assert_eq!(out[1], n as u64 + residue_schoolbook(&bytes[..len], other));
        }

        #[test]
        fn barrett_matches_remainder(a in any::<u64>(), d in 2u32..) {
            prop_assert_eq!(Modulus::new(d).reduce(a), a % d as u64);
        }

        #[test]
        fn positions_stay_in_their_partition(
            seed in any::<u64>(),
            primes in proptest::sample::subsequence(vec![2u32, 3, 5, 7, 11, 13, 31, 257, 65537, 1_000_003], 2..6),
        ) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let plan = PartitionPlan::new(primes.clone()).unwrap();
            let mut f = OhbfFilter::new(plan, HashAlgoId::Xxh3_128);
            let mut e = [0u8; 8];
            rng.fill_bytes(&mut e);
            let d = digest(HashAlgoId::Xxh3_128, &e);
            let mut start = 0u64;
            for (pos, &n) in f.positions(&d).iter().zip(&primes) {
                prop_assert!(*pos >= start && *pos < start + n as u64);
                start += n as u64;
            }
            f.insert(&e);
            for j in 0..primes.len() {
                prop_assert_eq!(f.partition_popcount(j), 1);
            }
        }
    }
}
