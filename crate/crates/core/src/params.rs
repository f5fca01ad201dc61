//! Scheme parameters, partition planning and security accounting.

use std::fmt;

use crate::error::{Error, Result};
use crate::hashes::HashAlgoId;
use crate::ohbf::{PartitionPlan, MAX_PARTITION_BITS};

/// Default validity window for time-valid presets, in seconds.
pub const DEFAULT_T_DELTA: u64 = 3600;

/// Whether signing and verification are gated on a validity window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeMode {
    /// High-security setting: no time gate.
    Untimed,
    /// Time-valid setting: keys are usable for `t_delta` seconds from the
    /// moment they are generated.
    TimeValid { t_delta: u64 },
}

/// Parameters shared by HORS and TVPD-HORS.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeParams {
    kappa: u32,
    t: u32,
    k: u32,
    l: u32,
    message_hash: HashAlgoId,
    one_way: HashAlgoId,
    filter_hash: HashAlgoId,
    plan: PartitionPlan,
    time_mode: TimeMode,
}

impl SchemeParams {
    /// Builds and validates a parameter set. `kappa` is the nominal
    /// security level carried in file headers.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        kappa: u32,
        t: u32,
        k: u32,
        l: u32,
        message_hash: HashAlgoId,
        one_way: HashAlgoId,
        filter_hash: HashAlgoId,
        plan: PartitionPlan,
        time_mode: TimeMode,
    ) -> Result<Self> {
        let params = SchemeParams {
            kappa,
            t,
            k,
            l,
            message_hash,
            one_way,
            filter_hash,
            plan,
            time_mode,
        };
        params.validate()?;
        Ok(params)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.kappa == 0 || self.kappa > u8::MAX as u32 {
            return bad(format!("kappa={} must be in [1, 255]", self.kappa));
        }
        if self.t < 2 || !self.t.is_power_of_two() {
            return bad(format!("t={} is not a power of two >= 2", self.t));
        }
        if self.k == 0 || self.k >= self.t {
            return bad(format!("k={} must satisfy 0 < k < t={}", self.k, self.t));
        }
        if self.k > u16::MAX as u32 {
            return bad(format!("k={} does not fit in 16 bits", self.k));
        }
        let h_bits = self.message_hash.output_bits();
        if self.index_bits() > h_bits {
            return bad(format!(
                "k*log2(t)={} exceeds the {h_bits}-bit output of {}",
                self.index_bits(),
                self.message_hash
            ));
        }
        if self.l == 0 || !self.l.is_multiple_of(8) || self.l > h_bits {
            return bad(format!(
                "l={} must be a positive multiple of 8 no larger than {h_bits}",
                self.l
            ));
        }
        if self.plan.p() > u16::MAX as usize {
            return bad(format!("p={} does not fit in 16 bits", self.plan.p()));
        }
        if let TimeMode::TimeValid { t_delta: 0 } = self.time_mode {
            return bad("t_delta must be positive".into());
        }
        Ok(())
    }

    pub fn kappa(&self) -> u32 {
        self.kappa
    }
    pub fn t(&self) -> u32 {
        self.t
    }
    pub fn k(&self) -> u32 {
        self.k
    }
    /// Secret-string length in bits.
    pub fn l(&self) -> u32 {
        self.l
    }
    pub fn p(&self) -> usize {
        self.plan.p()
    }
    pub fn message_hash(&self) -> HashAlgoId {
        self.message_hash
    }
    pub fn one_way(&self) -> HashAlgoId {
        self.one_way
    }
    pub fn filter_hash(&self) -> HashAlgoId {
        self.filter_hash
    }
    pub fn plan(&self) -> &PartitionPlan {
        &self.plan
    }
    pub fn time_mode(&self) -> TimeMode {
        self.time_mode
    }

    /// log2(t): bits per derived index.
    pub fn log_t(&self) -> u32 {
        self.t.trailing_zeros()
    }

    /// k·log2(t): message-hash bits consumed by index derivation.
    pub fn index_bits(&self) -> u32 {
        self.k * self.log_t()
    }

    /// Secret-string length in bytes.
    pub fn element_len(&self) -> usize {
        self.l as usize / 8
    }

    /// Signature payload: the 4-byte counter plus k secret strings.
    pub fn signature_len(&self) -> usize {
        4 + self.k as usize * self.element_len()
    }

    /// TVPD-HORS public key: the packed OHBF.
    pub fn tvpd_public_key_len(&self) -> usize {
        self.plan.packed_len()
    }

    /// HORS public key: t images under `f`.
    pub fn hors_public_key_len(&self) -> usize {
        self.t as usize * self.one_way.output_len()
    }

    /// Expanded secret key, t·l bits.
    pub fn secret_key_len(&self) -> usize {
        self.t as usize * self.element_len()
    }

    pub fn with_one_way(mut self, one_way: HashAlgoId) -> Self {
        self.one_way = one_way;
        self
    }

    pub fn with_time_mode(mut self, time_mode: TimeMode) -> Result<Self> {
        self.time_mode = time_mode;
        self.validate()?;
        Ok(self)
    }

    pub fn security_report(&self) -> SecurityReport {
        security_report(self, self.t as u64)
    }
}

impl fmt::Display for SchemeParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(t={}, k={}, l={}, p={}) H={} f={} h={}",
            self.t,
            self.k,
            self.l,
            self.p(),
            self.message_hash,
            self.one_way,
            self.filter_hash
        )
    }
}

/// False-positive probability of an OHBF holding `inserted` elements:
/// `(1 - (∏ exp(-inserted/n_i))^(1/p))^p`, evaluated in log space.
pub fn false_positive_rate(plan: &PartitionPlan, inserted: u64) -> f64 {
    false_positive_log2(plan, inserted).exp2()
}

/// `log2` of [`false_positive_rate`]; `-inf` for an empty filter.
pub fn false_positive_log2(plan: &PartitionPlan, inserted: u64) -> f64 {
    let p = plan.p() as f64;
    let rate: f64 = plan
        .sizes()
        .iter()
        .map(|&n| inserted as f64 / n as f64)
        .sum::<f64>()
        / p;
    // 1 - e^{-rate}, accurate for small rates
    let occupied = -(-rate).exp_m1();
    p * occupied.log2()
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Picks `p` consecutive primes centred on `total_bits_target / p`:
/// `⌈p/2⌉` at or below the centre and `⌊p/2⌋` above it, in ascending order.
pub fn plan_partitions(total_bits_target: u64, p: usize) -> Result<PartitionPlan> {
    let infeasible = || Error::InfeasiblePlan {
        target: total_bits_target,
        p,
    };
    if p < 2 || total_bits_target < 3 * p as u64 {
        return Err(infeasible());
    }
    let center = total_bits_target / p as u64;
    let mut low = Vec::with_capacity(p.div_ceil(2));
    let mut n = center;
    while low.len() < p.div_ceil(2) {
        if n < 2 {
            return Err(infeasible());
        }
        if is_prime(n) {
            low.push(n);
        }
        n -= 1;
    }
    low.reverse();
    let mut n = center + 1;
    while low.len() < p {
        if is_prime(n) {
            low.push(n);
        }
        n += 1;
    }
    if low.iter().any(|&n| n > MAX_PARTITION_BITS as u64) {
        return Err(infeasible());
    }
    PartitionPlan::new(low.into_iter().map(|n| n as u32).collect())
}

/// Security of a TVPD-HORS parameter set, component by component, in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityReport {
    /// k·(log2 t − log2 k)
    pub hors_subset_bits: f64,
    /// (k·log2 t)/2: the truncated message hash under the Grover model.
    pub trunc_hash_bits: f64,
    /// L′/2 for the OHBF hash output length L′.
    pub ohbf_hash_bits: f64,
    /// −log2 of the OHBF false-positive probability.
    pub fpp_bits: f64,
}

impl SecurityReport {
    pub fn min_bits(&self) -> f64 {
        self.hors_subset_bits
            .min(self.trunc_hash_bits)
            .min(self.ohbf_hash_bits)
            .min(self.fpp_bits)
    }

    /// The overall level κ: the weakest component, in whole bits.
    pub fn kappa(&self) -> u32 {
        (self.min_bits() + 1e-9).floor().max(0.0) as u32
    }
}

impl fmt::Display for SecurityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "hors_subset={:.2} trunc_hash={:.2} ohbf_hash={:.2} fpp={:.2} => kappa={}",
            self.hors_subset_bits,
            self.trunc_hash_bits,
            self.ohbf_hash_bits,
            self.fpp_bits,
            self.kappa()
        )
    }
}

/// Computes the security components for `params` with `inserted` elements in
/// the filter (t for a real key).
pub fn security_report(params: &SchemeParams, inserted: u64) -> SecurityReport {
    let log_t = params.log_t() as f64;
    let log_k = (params.k() as f64).log2();
    let k = params.k() as f64;
    SecurityReport {
        hors_subset_bits: k * (log_t - log_k),
        trunc_hash_bits: k * log_t / 2.0,
        ohbf_hash_bits: params.filter_hash().output_bits() as f64 / 2.0,
        fpp_bits: -false_positive_log2(params.plan(), inserted),
    }
}

/// One row of the preset registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Preset {
    pub kappa: u32,
    pub variant: u8,
    pub t: u32,
    pub k: u32,
    pub l: u32,
    pub p: usize,
    /// Target OHBF size handed to [`plan_partitions`].
    pub target_bits: u64,
    pub message_hash: HashAlgoId,
    /// `f` in the SHA-2 comparison setting.
    pub one_way: HashAlgoId,
    /// `f` in the BLAKE comparison setting.
    pub blake_one_way: HashAlgoId,
    pub filter_hash: HashAlgoId,
}

use HashAlgoId::*;

const fn row(
    kappa: u32,
    variant: u8,
    (t, k, l, p): (u32, u32, u32, usize),
    target_bytes: u64,
    (message_hash, one_way, blake_one_way, filter_hash): (
        HashAlgoId,
        HashAlgoId,
        HashAlgoId,
        HashAlgoId,
    ),
) -> Preset {
    Preset {
        kappa,
        variant,
        t,
        k,
        l,
        p,
        target_bits: target_bytes * 8,
        message_hash,
        one_way,
        blake_one_way,
        filter_hash,
    }
}

/// The published configurations. Variant 1 is the first row listed for a
/// level; later variants are the alternatives.
pub const PRESETS: [Preset; 11] = [
    row(
        32,
        1,
        (64, 16, 32, 8),
        995,
        (Sha2_256, Sha2_256, Blake2s128, Xxh3_64),
    ),
    row(
        32,
        2,
        (64, 32, 32, 8),
        995,
        (Sha2_256, Sha2_256, Blake2s128, Xxh3_64),
    ),
    row(
        48,
        1,
        (128, 16, 48, 17),
        1915,
        (Sha2_256, Sha2_256, Blake2s128, Xxh3_128),
    ),
    row(
        64,
        1,
        (256, 16, 64, 28),
        4024,
        (Sha2_256, Sha2_256, Blake2s128, Xxh3_128),
    ),
    row(
        64,
        2,
        (128, 32, 64, 28),
        1997,
        (Sha2_256, Sha2_256, Blake2s128, Xxh3_128),
    ),
    row(
        72,
        1,
        (512, 16, 72, 36),
        8090,
        (Sha2_256, Sha2_256, Blake2s160, City256),
    ),
    row(
        72,
        2,
        (512, 16, 72, 30),
        9139,
        (Sha2_256, Sha2_256, Blake2s160, City256),
    ),
    row(
        96,
        1,
        (256, 32, 96, 38),
        6304,
        (Sha2_256, Sha2_256, Blake2b256, City256),
    ),
    row(
        96,
        2,
        (256, 32, 96, 32),
        7652,
        (Sha2_256, Sha2_256, Blake2b256, City256),
    ),
    row(
        128,
        1,
        (512, 32, 128, 28),
        41731,
        (Sha2_512, Blake2b256, Blake2b256, City256),
    ),
    row(
        128,
        2,
        (256, 64, 128, 30),
        18002,
        (Sha2_512, Blake2b256, Blake2b256, City256),
    ),
];

impl Preset {
    /// Levels up to 64 bits are time-valid by default.
    pub fn default_time_mode(&self) -> TimeMode {
        if self.kappa <= 64 {
            TimeMode::TimeValid {
                t_delta: DEFAULT_T_DELTA,
            }
        } else {
            TimeMode::Untimed
        }
    }

    pub fn params(&self) -> SchemeParams {
        let plan = plan_partitions(self.target_bits, self.p).expect("preset plans are feasible");
        SchemeParams::new(
            self.kappa,
            self.t,
            self.k,
            self.l,
            self.message_hash,
            self.one_way,
            self.filter_hash,
            plan,
            self.default_time_mode(),
        )
        .expect("preset parameters are valid")
    }
}

/// Looks up a preset row; `variant` defaults to 1.
pub fn preset_row(kappa: u32, variant: Option<u8>) -> Result<&'static Preset> {
    let variant = variant.unwrap_or(1);
    PRESETS
        .iter()
        .find(|p| p.kappa == kappa && p.variant == variant)
        .ok_or(Error::UnknownPreset { kappa, variant })
}

/// Parameters of a published configuration.
pub fn preset(kappa: u32, variant: Option<u8>) -> Result<SchemeParams> {
    preset_row(kappa, variant).map(Preset::params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const KAPPA32_PLAN: [u32; 8] = [971, 977, 983, 991, 997, 1009, 1013, 1019];

    #[test]
    fn reproduces_published_partitions() {
        let plan = plan_partitions(7960, 8).unwrap();
        assert_eq!(plan.sizes(), KAPPA32_PLAN);
        assert_eq!(plan_partitions(16, 2).unwrap().sizes(), [7, 11]);
    }

    #[test]
    fn tiny_targets_are_infeasible() {
        assert!(matches!(
            plan_partitions(5, 2),
            Err(Error::InfeasiblePlan { .. })
        ));
        // centre 3: only 3 and 2 lie at or below it, three are needed
        assert!(matches!(
            plan_partitions(15, 5),
            Err(Error::InfeasiblePlan { .. })
        ));
        assert!(matches!(
            plan_partitions(100, 1),
            Err(Error::InfeasiblePlan { .. })
        ));
    }

    #[test]
    fn fpp_of_kappa32_plan_is_32_bits() {
        let plan = PartitionPlan::new(KAPPA32_PLAN.to_vec()).unwrap();
        let bits = -false_positive_log2(&plan, 64);
        assert!((bits - 32.0).abs() <= 0.2, "{bits}");
    }

    #[test]
    fn fpp_limits_and_symmetric_form() {
        let plan = PartitionPlan::new(vec![101, 103]).unwrap();
        assert_eq!(false_positive_rate(&plan, 0), 0.0);
        // all sizes equal m: (1 - e^{-N/m})^p. Use a pair of coprime sizes
        // that are nearly equal and compare against the geometric-mean form.
        let plan = PartitionPlan::new(vec![1000, 1001, 1003]).unwrap();
        let m = 3.0 / (1.0 / 1000.0 + 1.0 / 1001.0 + 1.0 / 1003.0);
        let symmetric = (1.0 - (-50.0f64 / m).exp()).powi(3);
        assert!((false_positive_rate(&plan, 50) / symmetric - 1.0).abs() < 1e-12);
    }

    #[test]
    fn worked_example_for_kappa_32() {
        let r = preset(32, None).unwrap().security_report();
        assert_eq!(r.hors_subset_bits, 32.0);
        assert_eq!(r.trunc_hash_bits, 48.0);
        assert_eq!(r.ohbf_hash_bits, 32.0);
        assert!((r.fpp_bits - 32.0).abs() < 0.2);
        assert_eq!(r.kappa(), 32);
    }

    #[test]
    fn report_arithmetic() {
        let r = preset(72, None).unwrap().security_report();
        assert_eq!(r.hors_subset_bits, 80.0);
        assert_eq!(r.trunc_hash_bits, 72.0);
        let r = preset(64, None).unwrap().security_report();
        assert_eq!(r.hors_subset_bits, 64.0);
    }

    #[test]
    fn every_preset_reaches_its_level() {
        for row in &PRESETS {
            let params = row.params();
            assert_eq!(params.p(), row.p);
            assert_eq!(
                params.security_report().kappa(),
                row.kappa,
                "kappa {} variant {}: {}",
                row.kappa,
                row.variant,
                params.security_report()
            );
        }
    }

    #[test]
    fn preset_lookup() {
        let p = preset(32, None).unwrap();
        assert_eq!((p.t(), p.k(), p.l(), p.p()), (64, 16, 32, 8));
        assert_eq!(p.tvpd_public_key_len(), 995);
        let p = preset(64, Some(2)).unwrap();
        assert_eq!((p.t(), p.k(), p.l(), p.p()), (128, 32, 64, 28));
        let p = preset(128, Some(2)).unwrap();
        assert_eq!((p.t(), p.k(), p.l(), p.p()), (256, 64, 128, 30));
        assert_eq!(p.message_hash(), HashAlgoId::Sha2_512);
        assert_eq!(
            preset(40, None),
            Err(Error::UnknownPreset {
                kappa: 40,
                variant: 1
            })
        );
        assert!(matches!(
            preset(64, Some(3)),
            Err(Error::UnknownPreset { .. })
        ));
    }

    #[test]
    fn time_modes_follow_level() {
        for row in &PRESETS {
            let timed = matches!(row.params().time_mode(), TimeMode::TimeValid { .. });
            assert_eq!(timed, row.kappa <= 64);
        }
    }

    #[test]
    fn invalid_params_are_rejected() {
        let plan = PartitionPlan::new(vec![3, 5]).unwrap();
        let mk = |t, k, l| {
            SchemeParams::new(
                32,
                t,
                k,
                l,
                Sha2_256,
                Sha2_256,
                Xxh3_64,
                plan.clone(),
                TimeMode::Untimed,
            )
        };
        assert!(mk(64, 16, 32).is_ok());
        assert!(mk(60, 16, 32).is_err());
        assert!(mk(64, 64, 32).is_err());
        assert!(mk(64, 16, 33).is_err());
        assert!(mk(64, 16, 264).is_err());
        // 64 * 8 = 512 index bits do not fit SHA2-256
        assert!(mk(256, 64, 32).is_err());
        assert!(mk(2, 1, 8).is_ok());
        for kappa in [0, 256] {
            let r = SchemeParams::new(
                kappa,
                64,
                16,
                32,
                Sha2_256,
                Sha2_256,
                Xxh3_64,
                plan.clone(),
                TimeMode::Untimed,
            );
            assert!(r.is_err());
        }
    }

    proptest! {
        #[test]
        fn plans_are_valid_and_close_to_target(target in 64u64..200_000, p in 2usize..40) {
            // enough primes below the centre for the lower half
            prop_assume!(target / p as u64 >= 200);
            let plan = plan_partitions(target, p).unwrap();
            prop_assert_eq!(plan.p(), p);
            // prime gaps below 200_000 are at most 86
            let slack = p as u64 * 86;
            prop_assert!(plan.total_bits().abs_diff(target) <= slack);
            prop_assert!(plan.sizes().windows(2).all(|w| w[0] < w[1]));
        }

        #[test]
        fn fpp_monotone(sizes in proptest::sample::subsequence(vec![101u32, 103, 107, 109, 113, 127, 131], 2..5), n in 1u64..200, j in 0usize..4) {
            let plan = PartitionPlan::new(sizes.clone()).unwrap();
            prop_assert!(false_positive_rate(&plan, n + 1) > false_positive_rate(&plan, n));
            let j = j % sizes.len();
            let mut bigger = sizes.clone();
            // next coprime size: a prime not already in the plan
            bigger[j] = 251;
            let bigger = PartitionPlan::new(bigger).unwrap();
            prop_assert!(false_positive_rate(&bigger, n) < false_positive_rate(&plan, n));
        }
    }
}
