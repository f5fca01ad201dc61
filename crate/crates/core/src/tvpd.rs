//! TVPD-HORS: HORS whose public key is a One-Hash Bloom Filter holding
//! every `s_i || i`, with an optional validity window.
//!
//! Signing is HORS signing. Verification replaces the `k` one-way function
//! evaluations with `k` filter membership checks, each one non-cryptographic
//! hash plus `p` small modular reductions.

use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{Error, Result};
use crate::hors::{all_distinct, derive_indices, encode_u32, SecretKey, Seed, Signature};
use crate::ohbf::OhbfFilter;
use crate::params::{SchemeParams, TimeMode};

/// A source of the current time, in seconds since the Unix epoch.
pub trait Clock {
    fn now(&self) -> u64;
}

/// Wall-clock time.
#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    }
}

/// A clock frozen at a given instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedClock(pub u64);

impl Clock for FixedClock {
    fn now(&self) -> u64 {
        self.0
    }
}

impl<C: Clock + ?Sized> Clock for &C {
    fn now(&self) -> u64 {
        (**self).now()
    }
}

/// The closed validity window `[t0, t0 + t_delta]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimePolicy {
    pub t0: u64,
    pub t_delta: u64,
}

impl TimePolicy {
    pub fn new(t0: u64, t_delta: u64) -> Result<Self> {
        if t_delta == 0 {
            return Err(Error::InvalidParams("t_delta must be positive".into()));
        }
        Ok(TimePolicy { t0, t_delta })
    }

    pub fn end(&self) -> u64 {
        self.t0.saturating_add(self.t_delta)
    }

    pub fn contains(&self, now: u64) -> bool {
        (self.t0..=self.end()).contains(&now)
    }

    fn check(&self, now: u64) -> Result<()> {
        if self.contains(now) {
            Ok(())
        } else {
            Err(Error::OutsideTimeWindow {
                now,
                t0: self.t0,
                t_delta: self.t_delta,
            })
        }
    }
}

/// A TVPD-HORS public key: the filter plus the validity window, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TvpdPublicKey {
    filter: OhbfFilter,
    policy: Option<TimePolicy>,
}

impl TvpdPublicKey {
    pub fn new(filter: OhbfFilter, policy: Option<TimePolicy>) -> Self {
        TvpdPublicKey { filter, policy }
    }

    pub fn filter(&self) -> &OhbfFilter {
        &self.filter
    }

    pub fn policy(&self) -> Option<TimePolicy> {
        self.policy
    }

    pub fn verify(
        &self,
        params: &SchemeParams,
        message: &[u8],
        sig: &Signature,
        clock: impl Clock,
    ) -> bool {
        tvpd_verify(self, params, message, sig, clock)
    }
}

/// Builds the OHBF holding `s_i || i` for `i = 1..=t`.
pub fn tvpd_public_filter(params: &SchemeParams, sk: &SecretKey) -> OhbfFilter {
    let mut filter = OhbfFilter::new(params.plan().clone(), params.filter_hash());
    for (i, s) in sk.strings().enumerate() {
        filter.insert_concat(s, &encode_u32(i as u32 + 1));
    }
    filter
}

#[derive(Debug, Clone)]
pub struct TvpdKeyPair {
    params: SchemeParams,
    sk: SecretKey,
    pk: TvpdPublicKey,
}

impl TvpdKeyPair {
    /// Generates a key pair. In time-valid mode the window opens at
    /// `clock.now()`.
    pub fn generate(params: &SchemeParams, seed: &Seed, clock: impl Clock) -> Self {
        let policy = match params.time_mode() {
            TimeMode::Untimed => None,
            TimeMode::TimeValid { t_delta } => Some(TimePolicy {
                t0: clock.now(),
                t_delta,
            }),
        };
        Self::generate_with_policy(params, seed, policy)
    }

    /// Generates a key pair with an explicit window (or none).
    pub fn generate_with_policy(
        params: &SchemeParams,
        seed: &Seed,
        policy: Option<TimePolicy>,
    ) -> Self {
        let sk = SecretKey::expand(params, seed);
        Self::from_secret(params, sk, policy)
    }

    /// Builds the public key for already-expanded secret strings.
    pub fn from_secret(params: &SchemeParams, sk: SecretKey, policy: Option<TimePolicy>) -> Self {
        let filter = tvpd_public_filter(params, &sk);
        TvpdKeyPair {
            params: params.clone(),
            sk,
            pk: TvpdPublicKey { filter, policy },
        }
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn secret(&self) -> &SecretKey {
        &self.sk
    }

    pub fn public(&self) -> &TvpdPublicKey {
        &self.pk
    }

    pub fn sign(&self, message: &[u8], clock: impl Clock) -> Result<Signature> {
        tvpd_sign(self, message, clock)
    }
}

pub fn tvpd_keygen(params: &SchemeParams, seed: &Seed, clock: impl Clock) -> TvpdKeyPair {
    TvpdKeyPair::generate(params, seed, clock)
}

/// Signs `message` if the key's window (when present) contains the current
/// time.
pub fn tvpd_sign(kp: &TvpdKeyPair, message: &[u8], clock: impl Clock) -> Result<Signature> {
    if let Some(policy) = kp.pk.policy {
        policy.check(clock.now())?;
    }
    kp.sk.sign(&kp.params, message)
}

/// Outcome of a verification, with the reason for a rejection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    OutsideTimeWindow,
    /// Signature or key shape does not match the parameters.
    Malformed,
    /// The counter does not yield distinct indices.
    DuplicateIndices,
    /// Some `element_j || i_j` is not in the filter.
    NotInFilter,
}

impl Verdict {
    pub fn is_accept(self) -> bool {
        self == Verdict::Accept
    }
}

pub fn tvpd_verify_detailed(
    pk: &TvpdPublicKey,
    params: &SchemeParams,
    message: &[u8],
    sig: &Signature,
    clock: impl Clock,
) -> Verdict {
    if let Some(policy) = pk.policy {
        if !policy.contains(clock.now()) {
            return Verdict::OutsideTimeWindow;
        }
    }
    if !sig.fits(params)
        || pk.filter.plan() != params.plan()
        || pk.filter.algo() != params.filter_hash()
    {
        return Verdict::Malformed;
    }
    let indices = derive_indices(params, message, sig.ctr());
    if !all_distinct(&indices, params.t()) {
        return Verdict::DuplicateIndices;
    }
    let all_present = indices
        .iter()
        .zip(sig.elements())
        .all(|(&i, s)| pk.filter.contains_concat(s, &encode_u32(i + 1)));
    if all_present {
        Verdict::Accept
    } else {
        Verdict::NotInFilter
    }
}

pub fn tvpd_verify(
    pk: &TvpdPublicKey,
    params: &SchemeParams,
    message: &[u8],
    sig: &Signature,
    clock: impl Clock,
) -> bool {
    tvpd_verify_detailed(pk, params, message, sig, clock).is_accept()
}
