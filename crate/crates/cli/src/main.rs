//! `tvpd`: key generation, signing, verification and benchmarks for
//! TVPD-HORS and plain HORS.
//!
//! Exit codes: 0 success or ACCEPT, 1 REJECT, 2 outside the validity window
//! (also clap's code for usage errors), 3 any other error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use rand::rngs::StdRng;
use rand::{RngCore, SeedableRng};

use tvpd_core::bench::{self, BenchConfig};
use tvpd_core::params::{preset_row, security_report};
use tvpd_core::tvpd::{tvpd_verify_detailed, Verdict};
use tvpd_core::wire::{self, FileKind};
use tvpd_core::{
    hors_keygen, hors_verify, Clock, Error, FixedClock, HashAlgoId, SchemeParams, SecretKey, Seed,
    SystemClock, TvpdKeyPair,
};

#[derive(Parser)]
#[command(name = "tvpd", version, about = "TVPD-HORS few-time signatures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Tvpd,
    Hors,
}

#[derive(Subcommand)]
enum Command {
    /// Show a preset's parameters and security breakdown.
    Params {
        #[arg(long)]
        kappa: u32,
        #[arg(long)]
        variant: Option<u8>,
    },
    /// Generate a key pair and write `<out>.tvpd-sk` and `<out>.tvpd-pk`.
    Keygen {
        #[arg(long)]
        kappa: u32,
        #[arg(long)]
        variant: Option<u8>,
        /// 32-byte seed as 64 hex digits. Defaults to a random seed, or one
        /// derived from TVPD_SEED when set.
        #[arg(long)]
        seed: Option<String>,
        #[arg(long, default_value = "key")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "tvpd")]
        scheme: SchemeArg,
        /// Use the preset's BLAKE one-way function instead of SHA-2.
        #[arg(long)]
        blake: bool,
        /// Override the current time (Unix seconds) used as the window start.
        #[arg(long)]
        now: Option<u64>,
        /// Validity window length in seconds for time-valid presets.
        #[arg(long)]
        t_delta: Option<u64>,
        #[arg(long, env = "TVPD_SEED", hide_env_values = true)]
        tvpd_seed: Option<u64>,
    },
    /// Sign a message file, writing a `.tvpd-sig` file.
    Sign {
        #[arg(long)]
        sk: PathBuf,
        #[arg(long)]
        message: PathBuf,
        /// Defaults to `<message>.tvpd-sig`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        now: Option<u64>,
    },
    /// Verify a signature. Prints ACCEPT or REJECT.
    Verify {
        #[arg(long)]
        pk: PathBuf,
        #[arg(long)]
        message: PathBuf,
        #[arg(long)]
        sig: PathBuf,
        #[arg(long)]
        now: Option<u64>,
    },
    /// Time HORS against TVPD-HORS and print a markdown table.
    Bench {
        /// Presets as `kappa` or `kappa:variant`, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "32,48,64,128")]
        presets: Vec<String>,
        #[arg(long, default_value_t = bench::DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = bench::DEFAULT_MESSAGE_LEN)]
        message_len: usize,
        /// One-way function for the HORS side; `preset` keeps the preset's.
        #[arg(long, default_value = "SHA2-256")]
        hors_f: String,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Also verify a batch of signatures across this many threads.
        #[arg(long)]
        parallel_verify: Option<usize>,
        #[arg(long, env = "TVPD_SEED", hide_env_values = true, default_value_t = 0)]
        tvpd_seed: u64,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Params { kappa, variant } => cmd_params(kappa, variant),
        Command::Keygen {
            kappa,
            variant,
            seed,
            out,
            scheme,
            blake,
            now,
            t_delta,
            tvpd_seed,
        } => cmd_keygen(KeygenArgs {
            kappa,
            variant,
            seed,
            out,
            scheme,
            blake,
            now,
            t_delta,
            tvpd_seed,
        }),
        Command::Sign {
            sk,
            message,
            out,
            now,
        } => cmd_sign(&sk, &message, out, now),
        Command::Verify {
            pk,
            message,
            sig,
            now,
        } => cmd_verify(&pk, &message, &sig, now),
        Command::Bench {
            presets,
            trials,
            message_len,
            hors_f,
            csv,
            parallel_verify,
            tvpd_seed,
        } => cmd_bench(
            presets,
            trials,
            message_len,
            &hors_f,
            csv,
            parallel_verify,
            tvpd_seed,
        ),
    }
}

/// The `--now` override, or the system clock read once.
fn clock(now: Option<u64>) -> FixedClock {
    FixedClock(now.unwrap_or_else(|| SystemClock.now()))
}

fn read(path: &Path) -> anyhow::Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn with_ext(base: &Path, kind: FileKind) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(".");
    s.push(kind.extension());
    PathBuf::from(s)
}

fn print_params(params: &SchemeParams) {
    let plan: Vec<String> = params.plan().sizes().iter().map(u32::to_string).collect();
    let report = security_report(params, params.t() as u64);
    println!("| field | value |");
    println!("|---|---|");
    println!("| kappa | {} |", params.kappa());
    println!(
        "| (t, k, l, p) | ({}, {}, {}, {}) |",
        params.t(),
        params.k(),
        params.l(),
        params.p()
    );
    println!(
        "| H / f / h | {} / {} / {} |",
        params.message_hash(),
        params.one_way(),
        params.filter_hash()
    );
    println!("| partitions | {} |", plan.join(" "));
    println!("| time mode | {:?} |", params.time_mode());
    println!();
    println!("kappa={}", params.kappa());
    println!("t={}", params.t());
    println!("k={}", params.k());
    println!("l={}", params.l());
    println!("p={}", params.p());
    println!("partitions={}", plan.join(","));
    println!("filter_bits={}", params.plan().total_bits());
    println!("tvpd_pk_bytes={}", params.tvpd_public_key_len());
    println!("hors_pk_bytes={}", params.hors_public_key_len());
    println!("sig_bytes={}", params.signature_len());
    println!("hors_subset_bits={:.2}", report.hors_subset_bits);
    println!("trunc_hash_bits={:.2}", report.trunc_hash_bits);
    println!("ohbf_hash_bits={:.2}", report.ohbf_hash_bits);
    println!("fpp_bits={:.2}", report.fpp_bits);
    println!("security_bits={}", report.kappa());
}

fn cmd_params(kappa: u32, variant: Option<u8>) -> anyhow::Result<ExitCode> {
    let params = preset_row(kappa, variant)?.params();
    print_params(&params);
    Ok(ExitCode::SUCCESS)
}

struct KeygenArgs {
    kappa: u32,
    variant: Option<u8>,
    seed: Option<String>,
    out: PathBuf,
    scheme: SchemeArg,
    blake: bool,
    now: Option<u64>,
    t_delta: Option<u64>,
    tvpd_seed: Option<u64>,
}

fn parse_seed(hex_seed: &str) -> anyhow::Result<Seed> {
    let bytes = hex::decode(hex_seed.trim()).context("seed is not valid hex")?;
    bytes
        .try_into()
        .map_err(|b: Vec<u8>| anyhow::anyhow!("seed must be 32 bytes, got {}", b.len()))
}

fn cmd_keygen(a: KeygenArgs) -> anyhow::Result<ExitCode> {
    let row = preset_row(a.kappa, a.variant)?;
    let mut params = row.params();
    if a.blake {
        params = params.with_one_way(row.blake_one_way);
    }
    if let Some(t_delta) = a.t_delta {
        if !matches!(params.time_mode(), tvpd_core::TimeMode::TimeValid { .. }) {
            bail!(
                "kappa={} keys are not time-valid; --t-delta does not apply",
                a.kappa
            );
        }
        params = params.with_time_mode(tvpd_core::TimeMode::TimeValid { t_delta })?;
    }
    let seed = match (&a.seed, a.tvpd_seed) {
        (Some(s), _) => parse_seed(s)?,
        (None, Some(n)) => {
            let mut s = [0u8; 32];
            StdRng::seed_from_u64(n).fill_bytes(&mut s);
            s
        }
        (None, None) => {
            let mut s = [0u8; 32];
            rand::thread_rng().fill_bytes(&mut s);
            s
        }
    };

    let sk_path = with_ext(&a.out, FileKind::SecretSeed);
    let pk_path = with_ext(&a.out, FileKind::Public);
    let pk_len = match a.scheme {
        SchemeArg::Tvpd => {
            let kp = TvpdKeyPair::generate(&params, &seed, clock(a.now));
            write(
                &sk_path,
                &wire::encode_secret(&params, kp.public().policy(), &seed),
            )?;
            let bytes = wire::encode_public(&params, kp.public());
            write(&pk_path, &bytes)?;
            if let Some(p) = kp.public().policy() {
                println!("window=[{}, {}]", p.t0, p.end());
            }
            bytes.len()
        }
        SchemeArg::Hors => {
            params = params.with_time_mode(tvpd_core::TimeMode::Untimed)?;
            let kp = hors_keygen(&params, &seed);
            write(&sk_path, &wire::encode_secret(&params, None, &seed))?;
            let bytes = wire::encode_hors_public(&params, kp.public());
            write(&pk_path, &bytes)?;
            bytes.len()
        }
    };
    println!(
        "wrote {} and {} ({} bytes)",
        sk_path.display(),
        pk_path.display(),
        pk_len
    );
    println!("{}", params.security_report());
    Ok(ExitCode::SUCCESS)
}

fn cmd_sign(
    sk_path: &Path,
    message: &Path,
    out: Option<PathBuf>,
    now: Option<u64>,
) -> anyhow::Result<ExitCode> {
    let file = wire::decode_secret(&read(sk_path)?).context("parsing secret key")?;
    let msg = read(message)?;
    if let Some(policy) = file.policy {
        let now = clock(now).now();
        if !policy.contains(now) {
            eprintln!(
                "{}",
                Error::OutsideTimeWindow {
                    now,
                    t0: policy.t0,
                    t_delta: policy.t_delta
                }
            );
            return Ok(ExitCode::from(2));
        }
    }
    let sk = SecretKey::expand(&file.params, &file.seed);
    let sig = sk.sign(&file.params, &msg)?;
    let out = out.unwrap_or_else(|| with_ext(message, FileKind::Signature));
    write(&out, &wire::encode_signature(&file.params, &sig))?;
    println!("wrote {} (ctr={})", out.display(), sig.ctr());
    Ok(ExitCode::SUCCESS)
}

fn reject(reason: &str) -> anyhow::Result<ExitCode> {
    println!("REJECT: {reason}");
    Ok(ExitCode::from(1))
}

fn cmd_verify(
    pk_path: &Path,
    message: &Path,
    sig_path: &Path,
    now: Option<u64>,
) -> anyhow::Result<ExitCode> {
    let pk_bytes = read(pk_path)?;
    let msg = read(message)?;
    let (header, sig) = match wire::decode_signature(&read(sig_path)?) {
        Ok(v) => v,
        Err(e) => return reject(&format!("malformed signature ({e})")),
    };
    let kind = wire::decode_header(&pk_bytes)
        .context("parsing public key")?
        .kind;
    let verdict = match kind {
        FileKind::HorsPublic => {
            let (params, pk) = wire::decode_hors_public(&pk_bytes).context("parsing public key")?;
            if !header.matches(&params) {
                return reject("signature parameters do not match the key");
            }
            if hors_verify(&pk, &params, &msg, &sig) {
                Verdict::Accept
            } else {
                Verdict::NotInFilter
            }
        }
        _ => {
            let (params, pk) = wire::decode_public(&pk_bytes).context("parsing public key")?;
            if !header.matches(&params) {
                return reject("signature parameters do not match the key");
            }
            tvpd_verify_detailed(&pk, &params, &msg, &sig, clock(now))
        }
    };
    match verdict {
        Verdict::Accept => {
            println!("ACCEPT");
            Ok(ExitCode::SUCCESS)
        }
        Verdict::OutsideTimeWindow => {
            println!("REJECT: outside the key's validity window");
            Ok(ExitCode::from(2))
        }
        Verdict::Malformed => reject("malformed signature"),
        Verdict::DuplicateIndices => reject("counter does not give distinct indices"),
        Verdict::NotInFilter => reject("signature does not match the public key"),
    }
}

fn parse_preset(s: &str) -> anyhow::Result<(u32, Option<u8>)> {
    let (k, v) = match s.split_once(':') {
        Some((k, v)) => (k, Some(v.trim().parse().context("bad variant")?)),
        None => (s, None),
    };
    let kappa = k
        .trim()
        .parse()
        .with_context(|| format!("bad preset `{s}`"))?;
    preset_row(kappa, v)?;
    Ok((kappa, v))
}

fn cmd_bench(
    presets: Vec<String>,
    trials: usize,
    message_len: usize,
    hors_f: &str,
    csv: Option<PathBuf>,
    parallel: Option<usize>,
    seed: u64,
) -> anyhow::Result<ExitCode> {
    let hors_one_way = if hors_f.eq_ignore_ascii_case("preset") {
        None
    } else {
        Some(hors_f.parse::<HashAlgoId>()?)
    };
    let cfg = BenchConfig {
        presets: presets
            .iter()
            .map(|s| parse_preset(s))
            .collect::<anyhow::Result<_>>()?,
        message_len,
        trials,
        seed,
        hors_one_way,
        ..BenchConfig::default()
    };
    let rows = bench::run(&cfg)?;
    let csv_text = bench::to_csv(&rows);
    match csv {
        Some(path) => {
            write(&path, csv_text.as_bytes())?;
            print!("{}", bench::to_markdown(&rows));
        }
        None => {
            print!("{}", bench::to_markdown(&rows));
            println!();
            print!("{csv_text}");
        }
    }
    if let Some(threads) = parallel {
        for &(kappa, variant) in &cfg.presets {
            let params = preset_row(kappa, variant)?.params();
            let n = cfg.trials.max(bench::MIN_TRIALS);
            let (accepted, us) = bench::parallel_verify_demo(&params, n, threads, seed)?;
            println!("parallel verify kappa={kappa}: {accepted}/{n} accepted on {threads} threads in {us:.1} us");
        }
    }
    Ok(ExitCode::SUCCESS)
}
