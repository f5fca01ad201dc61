//! Per-thread operation counters.
//!
//! The schemes record every hash call by role and every modular reduction
//! they perform. Tests and the benchmark harness read these counters to
//! check the cost model of each operation.

use std::cell::Cell;

/// The role a hash call plays in a scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HashRole {
    /// `H`: message hashing and seed expansion.
    Message,
    /// `f`: the HORS one-way function.
    OneWay,
    /// `h`: the OHBF hash.
    Filter,
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct OpCounts {
    pub message_hash: u64,
    pub one_way: u64,
    pub filter_hash: u64,
    pub reductions: u64,
}

thread_local! {
    static COUNTS: Cell<OpCounts> = const {
        Cell::new(OpCounts {
            message_hash: 0,
            one_way: 0,
            filter_hash: 0,
            reductions: 0,
        })
    };
}

#[inline]
pub(crate) fn record_hash(role: HashRole) {
    COUNTS.with(|c| {
        let mut v = c.get();
        match role {
            HashRole::Message => v.message_hash += 1,
            HashRole::OneWay => v.one_way += 1,
            HashRole::Filter => v.filter_hash += 1,
        }
        c.set(v);
    });
}

#[inline]
pub(crate) fn record_reductions(n: u64) {
    COUNTS.with(|c| {
        let mut v = c.get();
        v.reductions += n;
        c.set(v);
    });
}

pub fn snapshot() -> OpCounts {
    COUNTS.with(|c| c.get())
}

pub fn reset() {
    COUNTS.with(|c| c.set(OpCounts::default()));
}

/// Runs `f` and returns its result with the operations it performed on
/// this thread.
pub fn measure<R>(f: impl FnOnce() -> R) -> (R, OpCounts) {
    let before = snapshot();
    let out = f();
    let after = snapshot();
    (
        out,
        OpCounts {
            message_hash: after.message_hash - before.message_hash,
            one_way: after.one_way - before.one_way,
            filter_hash: after.filter_hash - before.filter_hash,
            reductions: after.reductions - before.reductions,
        },
    )
}
