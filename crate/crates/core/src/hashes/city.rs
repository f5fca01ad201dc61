//! CityHashCrc256, ported from Google's CityHash (unseeded variant).
//!
//! The 256-bit function relies on CRC32C. On x86-64 hosts with SSE4.2 the
//! hardware instruction is used; everywhere else a table-driven CRC32C
//! produces identical output.

const K0: u64 = 0xc3a5_c85c_97cb_3127;

// Inputs shorter than this are zero-padded up to it.
const SHORT_LIMIT: usize = 240;

#[inline(always)]
fn fetch64(s: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(s[at..at + 8].try_into().unwrap())
}

#[inline(always)]
fn rotate(val: u64, shift: u32) -> u64 {
    val.rotate_right(shift)
}

#[inline(always)]
fn shift_mix(val: u64) -> u64 {
    val ^ (val >> 47)
}

#[inline(always)]
fn hash_len16(u: u64, v: u64) -> u64 {
    const MUL: u64 = 0x9ddf_ea08_eb38_2d69;
    let mut a = (u ^ v).wrapping_mul(MUL);
    a ^= a >> 47;
    let mut b = (v ^ a).wrapping_mul(MUL);
    b ^= b >> 47;
    b.wrapping_mul(MUL)
}

/// CRC32C update of `crc` with the 8 little-endian bytes of `v`, without
/// pre/post inversion (the semantics of the SSE4.2 `crc32` instruction).
pub(crate) fn crc32c_u64_soft(crc: u64, v: u64) -> u64 {
    let mut c = crc as u32;
    for b in v.to_le_bytes() {
        c = CRC32C_TABLE[((c ^ b as u32) & 0xff) as usize] ^ (c >> 8);
    }
    c as u64
}

static CRC32C_TABLE: [u32; 256] = {
    let mut table = [0u32; 256];
    let mut i = 0;
    while i < 256 {
        let mut c = i as u32;
        let mut j = 0;
        while j < 8 {
            c = if c & 1 != 0 {
                (c >> 1) ^ 0x82f6_3b78
            } else {
                c >> 1
            };
            j += 1;
        }
        table[i] = c;
        i += 1;
    }
    table
};

struct State {
    a: u64,
    b: u64,
    c: u64,
    d: u64,
    e: u64,
    f: u64,
    g: u64,
    h: u64,
    i: u64,
    j: u64,
    t: u64,
}

macro_rules! chunk {
    ($st:ident, $s:ident, $pos:ident, $mul:expr, $z:expr, $crc:path) => {{
        let old_a = $st.a;
        $st.a = rotate($st.b, 41 ^ $z)
            .wrapping_mul($mul)
            .wrapping_add(fetch64($s, $pos));
        $st.b = rotate($st.c, 27 ^ $z)
            .wrapping_mul($mul)
            .wrapping_add(fetch64($s, $pos + 8));
        $st.c = rotate($st.d, 41 ^ $z)
            .wrapping_mul($mul)
            .wrapping_add(fetch64($s, $pos + 16));
        $st.d = rotate($st.e, 33 ^ $z)
            .wrapping_mul($mul)
            .wrapping_add(fetch64($s, $pos + 24));
        $st.e = rotate($st.t, 25 ^ $z)
            .wrapping_mul($mul)
            .wrapping_add(fetch64($s, $pos + 32));
        $st.t = old_a;
        $st.f = $crc($st.f, $st.a);
        $st.g = $crc($st.g, $st.b);
        $st.h = $crc($st.h, $st.c);
        $st.i = $crc($st.i, $st.d);
        $st.j = $crc($st.j, $st.e);
        $pos += 40;
    }};
}

// The long-input routine is expanded twice, once per CRC backend, so the
// hardware variant can be compiled with the SSE4.2 target feature enabled.
// Requires s.len() >= 240.
macro_rules! crc256_long {
    ($s:expr, $seed:expr, $crc:path) => {{
        let s: &[u8] = $s;
        let seed: u64 = $seed;
        let len = s.len();
        let b = fetch64(s, 96).wrapping_add(K0);
        let r0 = hash_len16(b, len as u64);
        let r1 = fetch64(s, 120).wrapping_mul(K0).wrapping_add(len as u64);
        let mut st = State {
            a: fetch64(s, 56).wrapping_add(K0),
            b,
            c: r0,
            d: r1,
            e: fetch64(s, 184).wrapping_add(seed),
            f: seed,
            g: 0,
            h: 0,
            i: 0,
            j: 0,
            t: r0.wrapping_add(r1),
        };
        let mut pos = 0usize;

        let iters = len / 240;
        let mut rest = len - iters * 240;
        for _ in 0..iters {
            chunk!(st, s, pos, 1, 1, $crc);
            chunk!(st, s, pos, K0, 0, $crc);
            chunk!(st, s, pos, 1, 1, $crc);
            chunk!(st, s, pos, K0, 0, $crc);
            chunk!(st, s, pos, 1, 1, $crc);
            chunk!(st, s, pos, K0, 0, $crc);
        }
        while rest >= 40 {
            chunk!(st, s, pos, K0, 0, $crc);
            rest -= 40;
        }
        if rest > 0 {
            pos = pos + rest - 40;
            chunk!(st, s, pos, K0, 0, $crc);
        }
        let _ = pos;

        let State {
            mut a,
            mut b,
            mut c,
            mut d,
            mut e,
            mut f,
            mut g,
            mut h,
            mut i,
            mut j,
            t,
        } = st;
        j = j.wrapping_add(i << 32);
        a = hash_len16(a, j);
        h = h.wrapping_add(g << 32);
        b = b.wrapping_add(h);
        c = hash_len16(c, f).wrapping_add(i);
        d = hash_len16(d, e.wrapping_add(r0));
        j = j.wrapping_add(e);
        i = i.wrapping_add(hash_len16(h, t));
        e = hash_len16(a, d).wrapping_add(j);
        f = hash_len16(b, c).wrapping_add(a);
        g = hash_len16(j, i).wrapping_add(c);
        let out0 = e.wrapping_add(f).wrapping_add(g).wrapping_add(h);
        a = shift_mix(a.wrapping_add(g).wrapping_mul(K0))
            .wrapping_mul(K0)
            .wrapping_add(b);
        let out1 = r1.wrapping_add(a).wrapping_add(out0);
        a = shift_mix(a.wrapping_mul(K0))
            .wrapping_mul(K0)
            .wrapping_add(c);
        let out2 = a.wrapping_add(out1);
        a = shift_mix(a.wrapping_add(e).wrapping_mul(K0)).wrapping_mul(K0);
        let out3 = a.wrapping_add(out2);
        [out0, out1, out2, out3]
    }};
}

fn long_soft(s: &[u8], seed: u64) -> [u64; 4] {
    crc256_long!(s, seed, crc32c_u64_soft)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "sse4.2")]
unsafe fn long_sse42(s: &[u8], seed: u64) -> [u64; 4] {
    use core::arch::x86_64::_mm_crc32_u64;
    crc256_long!(s, seed, _mm_crc32_u64)
}

fn long(s: &[u8], seed: u64) -> [u64; 4] {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("sse4.2") {
            // SAFETY: the required CPU feature was detected at runtime.
            return unsafe { long_sse42(s, seed) };
        }
    }
    long_soft(s, seed)
}

/// CityHashCrc256 of `data`, as the four 64-bit words of the reference
/// implementation's output array.
pub fn city_hash_crc256(data: &[u8]) -> [u64; 4] {
    if data.len() >= SHORT_LIMIT {
        long(data, 0)
    } else {
        let mut buf = [0u8; SHORT_LIMIT];
        buf[..data.len()].copy_from_slice(data);
        long(&buf, !(data.len() as u32) as u64)
    }
}
