//! Binary file formats for keys and signatures.
//!
//! Every file starts with a [`KeyFileHeader`]. All integers are big-endian.
//!
//! ```text
//! "TVPD" | version | kind | kappa | t:u32 | k:u16 | l:u16 | p:u16
//!        | H | f | h | time_flag [| t0:u64 | t_delta:u64]
//! ```
//!
//! Payloads by kind:
//! - public key: `p` partition sizes (u32 each), then the filter bits packed
//!   MSB-first
//! - secret key: the 32-byte seed
//! - signature: `ctr` (u32), then `k` elements of `l/8` bytes
//! - HORS public key: `t` images of `f`, in index order

use crate::error::{Error, Result};
use crate::hashes::{Digest, HashAlgoId};
use crate::hors::{HorsPublicKey, Seed, Signature};
use crate::ohbf::{OhbfFilter, PartitionPlan};
use crate::params::{SchemeParams, TimeMode, PRESETS};
use crate::tvpd::{TimePolicy, TvpdPublicKey};

pub const MAGIC: [u8; 4] = *b"TVPD";
pub const VERSION: u8 = 1;

/// Fixed part of the header, without the optional time fields.
pub const BASE_HEADER_LEN: usize = 4 + 1 + 1 + 1 + 4 + 2 + 2 + 2 + 3 + 1;
const PARAMS_OFFSET: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    Public = 1,
    SecretSeed = 2,
    Signature = 3,
    HorsPublic = 4,
}

impl FileKind {
    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            1 => FileKind::Public,
            2 => FileKind::SecretSeed,
            3 => FileKind::Signature,
            4 => FileKind::HorsPublic,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            FileKind::Public => "public key",
            FileKind::SecretSeed => "secret key",
            FileKind::Signature => "signature",
            FileKind::HorsPublic => "HORS public key",
        }
    }

    /// Conventional file extension.
    pub fn extension(self) -> &'static str {
        match self {
            FileKind::Public | FileKind::HorsPublic => "tvpd-pk",
            FileKind::SecretSeed => "tvpd-sk",
            FileKind::Signature => "tvpd-sig",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyFileHeader {
    pub kind: FileKind,
    pub kappa: u8,
    pub t: u32,
    pub k: u16,
    pub l: u16,
    pub p: u16,
    pub message_hash: HashAlgoId,
    pub one_way: HashAlgoId,
    pub filter_hash: HashAlgoId,
    pub policy: Option<TimePolicy>,
}

impl KeyFileHeader {
    pub fn for_params(kind: FileKind, params: &SchemeParams, policy: Option<TimePolicy>) -> Self {
        // validated by SchemeParams
        KeyFileHeader {
            kind,
            kappa: params.kappa() as u8,
            t: params.t(),
            k: params.k() as u16,
            l: params.l() as u16,
            p: params.p() as u16,
            message_hash: params.message_hash(),
            one_way: params.one_way(),
            filter_hash: params.filter_hash(),
            policy,
        }
    }

    /// True when the parameter block describes `params`.
    pub fn matches(&self, params: &SchemeParams) -> bool {
        let other = KeyFileHeader::for_params(self.kind, params, self.policy);
        *self == other
    }

    pub fn encoded_len(&self) -> usize {
        BASE_HEADER_LEN + if self.policy.is_some() { 16 } else { 0 }
    }

    pub fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.kind as u8);
        out.push(self.kappa);
        out.extend_from_slice(&self.t.to_be_bytes());
        out.extend_from_slice(&self.k.to_be_bytes());
        out.extend_from_slice(&self.l.to_be_bytes());
        out.extend_from_slice(&self.p.to_be_bytes());
        out.push(self.message_hash.code());
        out.push(self.one_way.code());
        out.push(self.filter_hash.code());
        match self.policy {
            None => out.push(0),
            Some(policy) => {
                out.push(1);
                out.extend_from_slice(&policy.t0.to_be_bytes());
                out.extend_from_slice(&policy.t_delta.to_be_bytes());
            }
        }
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        if r.take(4, "magic")? != MAGIC {
            return Err(Error::Parse {
                field: "magic",
                offset: 0,
            });
        }
        let version = r.u8("version")?;
        if version != VERSION {
            return Err(Error::VersionMismatch { found: version });
        }
        let kind_at = r.pos;
        let kind = FileKind::from_code(r.u8("kind")?).ok_or(Error::Parse {
            field: "kind",
            offset: kind_at,
        })?;
        let kappa = r.u8("kappa")?;
        let t = r.u32("t")?;
        let k = r.u16("k")?;
        let l = r.u16("l")?;
        let p = r.u16("p")?;
        let message_hash = r.algo("message_hash")?;
        let one_way = r.algo("one_way")?;
        let filter_hash = r.algo("filter_hash")?;
        let flag_at = r.pos;
        let policy = match r.u8("time_flag")? {
            0 => None,
            1 => {
                let t0 = r.u64("t0")?;
                let delta_at = r.pos;
                let t_delta = r.u64("t_delta")?;
                if t_delta == 0 {
                    return Err(Error::Parse {
                        field: "t_delta",
                        offset: delta_at,
                    });
                }
                Some(TimePolicy { t0, t_delta })
            }
            _ => {
                return Err(Error::Parse {
                    field: "time_flag",
                    offset: flag_at,
                })
            }
        };
        Ok(KeyFileHeader {
            kind,
            kappa,
            t,
            k,
            l,
            p,
            message_hash,
            one_way,
            filter_hash,
            policy,
        })
    }

    fn expect_kind(&self, expected: FileKind) -> Result<()> {
        if self.kind == expected {
            Ok(())
        } else {
            Err(Error::WrongKind {
                expected: expected.name(),
                found: self.kind.name(),
            })
        }
    }

    fn time_mode(&self) -> TimeMode {
        match self.policy {
            None => TimeMode::Untimed,
            Some(p) => TimeMode::TimeValid { t_delta: p.t_delta },
        }
    }

    fn params_with_plan(&self, plan: PartitionPlan) -> Result<SchemeParams> {
        SchemeParams::new(
            self.kappa as u32,
            self.t,
            self.k as u32,
            self.l as u32,
            self.message_hash,
            self.one_way,
            self.filter_hash,
            plan,
            self.time_mode(),
        )
        .map_err(|_| Error::Parse {
            field: "params",
            offset: PARAMS_OFFSET,
        })
    }

    /// Parameters of the registry row this header names. Secret files carry
    /// no partition sizes, so only registered configurations can be restored.
    fn registry_params(&self) -> Result<SchemeParams> {
        let row = PRESETS
            .iter()
            .find(|r| {
                r.kappa == self.kappa as u32
                    && r.t == self.t
                    && r.k == self.k as u32
                    && r.l == self.l as u32
                    && r.p == self.p as usize
                    && r.message_hash == self.message_hash
                    && r.filter_hash == self.filter_hash
            })
            .ok_or(Error::Parse {
                field: "params",
                offset: PARAMS_OFFSET,
            })?;
        let plan = row.params().plan().clone();
        self.params_with_plan(plan)
    }
}

/// Cursor over an input buffer that reports the field and offset of the
/// first short read.
struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize, field: &'static str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&end| end <= self.buf.len())
            .ok_or(Error::Parse {
                field,
                offset: self.pos,
            })?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self, field: &'static str) -> Result<u8> {
        Ok(self.take(1, field)?[0])
    }

    fn u16(&mut self, field: &'static str) -> Result<u16> {
        Ok(u16::from_be_bytes(self.take(2, field)?.try_into().unwrap()))
    }

    fn u32(&mut self, field: &'static str) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4, field)?.try_into().unwrap()))
    }

    fn u64(&mut self, field: &'static str) -> Result<u64> {
        Ok(u64::from_be_bytes(self.take(8, field)?.try_into().unwrap()))
    }

    fn algo(&mut self, field: &'static str) -> Result<HashAlgoId> {
        let at = self.pos;
        HashAlgoId::from_code(self.u8(field)?).ok_or(Error::Parse { field, offset: at })
    }

    fn finish(self) -> Result<()> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(Error::Parse {
                field: "trailing",
                offset: self.pos,
            })
        }
    }
}

/// Reads only the header.
pub fn decode_header(bytes: &[u8]) -> Result<KeyFileHeader> {
    KeyFileHeader::decode(&mut Reader::new(bytes))
}

pub fn encode_public(params: &SchemeParams, pk: &TvpdPublicKey) -> Vec<u8> {
    let header = KeyFileHeader::for_params(FileKind::Public, params, pk.policy());
    let plan = pk.filter().plan();
    let mut out = Vec::with_capacity(header.encoded_len() + 4 * plan.p() + plan.packed_len());
    header.encode(&mut out);
    for &n in plan.sizes() {
        out.extend_from_slice(&n.to_be_bytes());
    }
    out.extend_from_slice(&pk.filter().to_packed_bytes());
    out
}

pub fn decode_public(bytes: &[u8]) -> Result<(SchemeParams, TvpdPublicKey)> {
    let mut r = Reader::new(bytes);
    let header = KeyFileHeader::decode(&mut r)?;
    header.expect_kind(FileKind::Public)?;
    let plan_at = r.pos;
    let raw = r.take(4 * header.p as usize, "plan")?;
    let sizes = raw
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes(c.try_into().unwrap()))
        .collect();
    let plan = PartitionPlan::new(sizes).map_err(|_| Error::Parse {
        field: "plan",
        offset: plan_at,
    })?;
    let params = header.params_with_plan(plan)?;
    let filter_at = r.pos;
    let packed = r.take(params.plan().packed_len(), "filter")?;
    let filter = OhbfFilter::from_packed_bytes(params.plan().clone(), params.filter_hash(), packed)
        .ok_or(Error::Parse {
            field: "filter",
            offset: filter_at,
        })?;
    r.finish()?;
    Ok((params, TvpdPublicKey::new(filter, header.policy)))
}

/// A secret key as stored on disk: parameters, window and seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecretKeyFile {
    pub params: SchemeParams,
    pub policy: Option<TimePolicy>,
    pub seed: Seed,
}

pub fn encode_secret(params: &SchemeParams, policy: Option<TimePolicy>, seed: &Seed) -> Vec<u8> {
    let header = KeyFileHeader::for_params(FileKind::SecretSeed, params, policy);
    let mut out = Vec::with_capacity(header.encoded_len() + seed.len());
    header.encode(&mut out);
    out.extend_from_slice(seed);
    out
}

pub fn decode_secret(bytes: &[u8]) -> Result<SecretKeyFile> {
    let mut r = Reader::new(bytes);
    let header = KeyFileHeader::decode(&mut r)?;
    header.expect_kind(FileKind::SecretSeed)?;
    let seed: Seed = r.take(32, "seed")?.try_into().unwrap();
    r.finish()?;
    Ok(SecretKeyFile {
        params: header.registry_params()?,
        policy: header.policy,
        seed,
    })
}

/// Signature headers carry the parameter block and no time fields.
pub fn encode_signature(params: &SchemeParams, sig: &Signature) -> Vec<u8> {
    let header = KeyFileHeader::for_params(FileKind::Signature, params, None);
    let mut out = Vec::with_capacity(header.encoded_len() + sig.encoded_len());
    header.encode(&mut out);
    out.extend_from_slice(&sig.ctr().to_be_bytes());
    out.extend_from_slice(sig.element_bytes());
    out
}

/// Decodes a signature. Use [`KeyFileHeader::matches`] to check it against
/// the verifying key's parameters.
pub fn decode_signature(bytes: &[u8]) -> Result<(KeyFileHeader, Signature)> {
    let mut r = Reader::new(bytes);
    let header = KeyFileHeader::decode(&mut r)?;
    header.expect_kind(FileKind::Signature)?;
    if header.policy.is_some() {
        return Err(Error::Parse {
            field: "time_flag",
            offset: BASE_HEADER_LEN - 1,
        });
    }
    let l_at = PARAMS_OFFSET + 4 + 2;
    if header.l == 0 || header.l % 8 != 0 {
        return Err(Error::Parse {
            field: "l",
            offset: l_at,
        });
    }
    let element_len = header.l as usize / 8;
    let ctr = r.u32("ctr")?;
    let elements = r
        .take(header.k as usize * element_len, "elements")?
        .to_vec();
    r.finish()?;
    let sig = Signature::from_parts(ctr, element_len, elements).expect("length checked above");
    Ok((header, sig))
}

pub fn encode_hors_public(params: &SchemeParams, pk: &HorsPublicKey) -> Vec<u8> {
    let header = KeyFileHeader::for_params(FileKind::HorsPublic, params, None);
    let mut out = Vec::new();
    header.encode(&mut out);
    for image in pk.images() {
        out.extend_from_slice(image.as_bytes());
    }
    out
}

/// HORS keys are stored without partition sizes, so the parameters are
/// resolved through the preset registry.
pub fn decode_hors_public(bytes: &[u8]) -> Result<(SchemeParams, HorsPublicKey)> {
    let mut r = Reader::new(bytes);
    let header = KeyFileHeader::decode(&mut r)?;
    header.expect_kind(FileKind::HorsPublic)?;
    if header.policy.is_some() {
        return Err(Error::Parse {
            field: "time_flag",
            offset: BASE_HEADER_LEN - 1,
        });
    }
    let params = header.registry_params()?;
    let width = params.one_way().output_len();
    let raw = r.take(params.t() as usize * width, "images")?;
    let images = raw
        .chunks_exact(width)
        .map(|c| Digest::from_bytes(c).expect("digest width is bounded"))
        .collect();
    r.finish()?;
    Ok((
        params.with_time_mode(TimeMode::Untimed)?,
        HorsPublicKey::from_images(images),
    ))
}
