//! Benchmark harness comparing HORS and TVPD-HORS.
//!
//! Both schemes are timed on the same seeds and messages, alternating per
//! trial. Reported times are medians in microseconds after a warm-up that
//! is discarded.
//!
//! Key generation is timed from the expanded secret strings, i.e. the
//! public-key construction only (`t` calls of `f` against `t` filter
//! inserts). Seed expansion is the same work in both schemes and is left
//! out.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::Result;
use crate::hashes::HashAlgoId;
use crate::hors::{hors_public_key, hors_verify, SecretKey, Seed, Signature};
use crate::params::{preset, SchemeParams};
use crate::tvpd::{tvpd_public_filter, tvpd_verify, FixedClock, TvpdKeyPair, TvpdPublicKey};

pub const MIN_TRIALS: usize = 100;
pub const DEFAULT_TRIALS: usize = 1000;
pub const DEFAULT_WARMUP: usize = 20;
pub const DEFAULT_MESSAGE_LEN: usize = 256;
/// Sign and verify calls per timed sample, so timer overhead stays small
/// next to sub-microsecond operations.
pub const DEFAULT_REPS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Hors,
    Tvpd,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Hors => "HORS",
            Scheme::Tvpd => "TVPD-HORS",
        }
    }
}

/// One scheme at one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub scheme: Scheme,
    pub kappa: u32,
    pub t: u32,
    pub k: u32,
    pub l: u32,
    pub p: usize,
    pub kg_us: f64,
    pub sign_us: f64,
    pub verify_us: f64,
    pub pk_bytes: usize,
    pub sig_bytes: usize,
    pub trials: usize,
}

/// HORS and TVPD-HORS measured side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub hors: BenchRecord,
    pub tvpd: BenchRecord,
}

impl Comparison {
    /// HORS time divided by TVPD-HORS time.
    pub fn kg_ratio(&self) -> f64 {
        self.hors.kg_us / self.tvpd.kg_us
    }

    pub fn sign_ratio(&self) -> f64 {
        self.hors.sign_us / self.tvpd.sign_us
    }

    pub fn verify_ratio(&self) -> f64 {
        self.hors.verify_us / self.tvpd.verify_us
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// `(kappa, variant)` pairs.
    pub presets: Vec<(u32, Option<u8>)>,
    pub message_len: usize,
    pub trials: usize,
    pub warmup: usize,
    pub reps: usize,
    pub seed: u64,
    /// `f` used on the HORS side; `None` keeps the preset's own.
    pub hors_one_way: Option<HashAlgoId>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            presets: vec![(32, None), (48, None), (64, None), (128, None)],
            message_len: DEFAULT_MESSAGE_LEN,
            trials: DEFAULT_TRIALS,
            warmup: DEFAULT_WARMUP,
            reps: DEFAULT_REPS,
            seed: 0,
            hors_one_way: Some(HashAlgoId::Sha2_256),
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Runs `f` `reps` times and returns the last result with the mean time
/// per call.
#[inline(never)]
fn time_us<R>(reps: usize, mut f: impl FnMut() -> R) -> (R, f64) {
    let start = Instant::now();
    let mut out = std::hint::black_box(f());
    for _ in 1..reps {
        out = std::hint::black_box(f());
    }
    (out, start.elapsed().as_secs_f64() * 1e6 / reps as f64)
}

/// Times `a` and `b`, running `a` first when `a_first` is set.
fn both<A, B>(
    a_first: bool,
    reps: usize,
    a: impl FnMut() -> A,
    b: impl FnMut() -> B,
) -> ((A, f64), (B, f64)) {
    if a_first {
        let ra = time_us(reps, a);
        (ra, time_us(reps, b))
    } else {
        let rb = time_us(reps, b);
        (time_us(reps, a), rb)
    }
}

#[derive(Default)]
struct Samples {
    kg: Vec<f64>,
    sign: Vec<f64>,
    verify: Vec<f64>,
}

impl Samples {
    fn record(&mut self, keep: bool, kg: f64, sign: f64, verify: f64) {
        if keep {
            self.kg.push(kg);
            self.sign.push(sign);
            self.verify.push(verify);
        }
    }
}

/// Measures both schemes at `params`. The TVPD-HORS side uses `params` as
/// given; the HORS side swaps in `hors_one_way` when set.
pub fn compare(params: &SchemeParams, cfg: &BenchConfig) -> Result<Comparison> {
    let trials = cfg.trials.max(MIN_TRIALS);
    let reps = cfg.reps.max(1);
    let hors_params = match cfg.hors_one_way {
        Some(f) => params.clone().with_one_way(f),
        None => params.clone(),
    };
    let mut rng =
        ChaCha20Rng::seed_from_u64(cfg.seed ^ ((params.kappa() as u64) << 32 | params.t() as u64));
    let mut message = vec![0u8; cfg.message_len];
    let (mut hs, mut ts) = (Samples::default(), Samples::default());
    let (mut hors_pk_bytes, mut tvpd_pk_bytes, mut sig_bytes) = (0, 0, 0);

    for trial in 0..cfg.warmup + trials {
        let keep = trial >= cfg.warmup;
        let mut seed: Seed = [0; 32];
        rng.fill_bytes(&mut seed);
        rng.fill_bytes(&mut message);
        let sk = SecretKey::expand(params, &seed);

        // alternate which scheme runs first to cancel ordering effects
        let hors_first = trial % 2 == 0;
        let ((hpk, h_kg), (filter, t_kg)) = both(
            hors_first,
            1,
            || hors_public_key(&hors_params, &sk),
            || tvpd_public_filter(params, &sk),
        );
        let tpk = TvpdPublicKey::new(filter, None);

        let ((hsig, h_sign), (tsig, t_sign)) = both(
            hors_first,
            reps,
            || sk.sign(&hors_params, &message),
            || sk.sign(params, &message),
        );
        let (hsig, tsig): (Signature, Signature) = (hsig?, tsig?);

        let ((h_ok, h_ver), (t_ok, t_ver)) = both(
            hors_first,
            reps,
            || hors_verify(&hpk, &hors_params, &message, &hsig),
            || tvpd_verify(&tpk, params, &message, &tsig, FixedClock(0)),
        );
        assert!(h_ok && t_ok, "benchmark signature failed to verify");

        hs.record(keep, h_kg, h_sign, h_ver);
        ts.record(keep, t_kg, t_sign, t_ver);
        hors_pk_bytes = hpk.images().iter().map(|d| d.len()).sum();
        tvpd_pk_bytes = tpk.filter().plan().packed_len();
        sig_bytes = tsig.encoded_len();
    }

    let record = |scheme, s: Samples, pk_bytes| BenchRecord {
        scheme,
        kappa: params.kappa(),
        t: params.t(),
        k: params.k(),
        l: params.l(),
        p: params.p(),
        kg_us: median(s.kg),
        sign_us: median(s.sign),
        verify_us: median(s.verify),
        pk_bytes,
        sig_bytes,
        trials,
    };
    Ok(Comparison {
        hors: record(Scheme::Hors, hs, hors_pk_bytes),
        tvpd: record(Scheme::Tvpd, ts, tvpd_pk_bytes),
    })
}

/// Runs every configured preset.
pub fn run(cfg: &BenchConfig) -> Result<Vec<Comparison>> {
    cfg.presets
        .iter()
        .map(|&(kappa, variant)| compare(&preset(kappa, variant)?, cfg))
        .collect()
}

/// Verifies every `(message, signature)` pair against one public key using
/// `threads` scoped threads. Returns the number of accepted signatures.
pub fn parallel_verify(
    pk: &TvpdPublicKey,
    params: &SchemeParams,
    batch: &[(Vec<u8>, Signature)],
    threads: usize,
) -> usize {
    let threads = threads.max(1);
    let chunk = batch.len().div_ceil(threads).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = batch
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .filter(|(m, sig)| tvpd_verify(pk, params, m, sig, FixedClock(0)))
                        .count()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("verifier thread panicked"))
            .sum()
    })
}

/// Signs `n` random messages with fresh keys derived from one seed stream
/// and verifies them across threads. Returns `(accepted, elapsed_us)`.
pub fn parallel_verify_demo(
    params: &SchemeParams,
    n: usize,
    threads: usize,
    seed: u64,
) -> Result<(usize, f64)> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut key_seed: Seed = [0; 32];
    rng.fill_bytes(&mut key_seed);
    let untimed = params
        .clone()
        .with_time_mode(crate::params::TimeMode::Untimed)?;
    let kp = TvpdKeyPair::generate_with_policy(&untimed, &key_seed, None);
    let batch = (0..n)
        .map(|_| {
            let mut m = vec![0u8; DEFAULT_MESSAGE_LEN];
            rng.fill_bytes(&mut m);
            let sig = kp.sign(&m, FixedClock(0))?;
            Ok((m, sig))
        })
        .collect::<Result<Vec<_>>>()?;
    let (accepted, us) = time_us(1, || {
        parallel_verify(kp.public(), &untimed, &batch, threads)
    });
    Ok((accepted, us))
}

pub const CSV_HEADER: &str =
    "scheme,kappa,t,k,l,p,kg_us,sign_us,verify_us,pk_bytes,sig_bytes,trials,kg_ratio,sign_ratio,verify_ratio";

/// One line per record; both records of a comparison carry its ratios.
pub fn to_csv(rows: &[Comparison]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for c in rows {
        for r in [&c.hors, &c.tvpd] {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:.3},{:.3},{:.3},{},{},{},{:.3},{:.3},{:.3}",
                r.scheme.name(),
                r.kappa,
                r.t,
                r.k,
                r.l,
                r.p,
                r.kg_us,
                r.sign_us,
                r.verify_us,
                r.pk_bytes,
                r.sig_bytes,
                r.trials,
                c.kg_ratio(),
                c.sign_ratio(),
                c.verify_ratio()
            );
        }
    }
    out
}

pub fn to_markdown(rows: &[Comparison]) -> String {
    let mut out = String::from(
        "| kappa | (t,k,l,p) | Kg us HORS / TVPD | Sign us HORS / TVPD | Ver us HORS / TVPD | Ver ratio | PK bytes HORS / TVPD | Sig bytes |\n\
         |---|---|---|---|---|---|---|---|\n",
    );
    for c in rows {
        let (h, t) = (&c.hors, &c.tvpd);
        let _ = writeln!(
            out,
            "| {} | ({},{},{},{}) | {:.2} / {:.2} | {:.2} / {:.2} | {:.2} / {:.2} | {:.2}x | {} / {} | {} |",
            t.kappa,
            t.t,
            t.k,
            t.l,
            t.p,
            h.kg_us,
            t.kg_us,
            h.sign_us,
            t.sign_us,
            h.verify_us,
            t.verify_us,
            c.verify_ratio(),
            h.pk_bytes,
            t.pk_bytes,
            t.sig_bytes
        );
    }
    out
}
