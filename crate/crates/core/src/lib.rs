//! TVPD-HORS: a HORS few-time signature whose public key is a One-Hash
//! Bloom Filter, with optional time-bounded validity.

pub mod bench;
pub mod error;
pub mod hashes;
pub mod hors;
pub mod metrics;
pub mod ohbf;
pub mod params;
pub mod tvpd;
pub mod wire;

pub use error::{Error, Result};
pub use hashes::{digest, Digest, HashAlgoId};
pub use hors::{
    hors_keygen, hors_sign, hors_verify, HorsKeyPair, HorsPublicKey, SecretKey, Seed, Signature,
};
pub use ohbf::{OhbfFilter, PartitionPlan};
pub use params::{
    plan_partitions, preset, Preset, SchemeParams, SecurityReport, TimeMode, PRESETS,
};
pub use tvpd::{
    tvpd_keygen, tvpd_sign, tvpd_verify, tvpd_verify_detailed, Clock, FixedClock, SystemClock,
    TimePolicy, TvpdKeyPair, TvpdPublicKey, Verdict,
};
