//! Simulated word-RAM with address-only access tracing.
//!
//! Obliviousness in this crate is defined over the traces recorded here: an
//! algorithm is oblivious when, for a fixed array size and configuration, the
//! sequence of `(op, address)` records it produces is independent of the data
//! stored in the cells. Cells hold [`Word`]s; sideband metadata travels with
//! the payload and may feed swap predicates, but never addresses.
//!
//! Values held outside cells (loop counters, protocol state copied into
//! working registers) are unobserved, per the standard word-RAM convention.

use crate::error::{Error, Result};

/// Word-mark flag bit.
pub const F_WORD_MARK: u8 = 1 << 0;
/// Position-mark flag bit. Slot-pinned by the distribution swaps.
pub const F_POS_MARK: u8 = 1 << 1;
/// Dummy flag bit: auxiliary filler, never counted as marked.
pub const F_DUMMY: u8 = 1 << 2;
/// Snapshot of the caller-visible word mark (travels with the word).
pub const F_WM_SNAP: u8 = 1 << 3;
/// Snapshot of the caller-visible position mark (pinned to the slot).
pub const F_PM_SNAP: u8 = 1 << 4;

/// Flags that stay attached to the slot rather than the moving word.
/// `F_PM_SNAP` is always pinned; `F_POS_MARK` is pinned only by the
/// distribution routine's swap variant.
const ALWAYS_PINNED: u8 = F_PM_SNAP;

/// A simulated memory word: payload plus sideband metadata that moves
/// atomically with it. Payloads are limited to 64 physical bits; the model's
/// word width `b` may be larger (wide packed state lives in a separate plane).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Word {
    pub payload: u64,
    pub flags: u8,
    /// Origin index, set by algorithms that need reverse bookkeeping.
    pub origin: u32,
}

impl Word {
    pub fn real(payload: u64) -> Self {
        Word { payload, flags: 0, origin: 0 }
    }

    pub fn dummy() -> Self {
        Word { payload: 0, flags: F_DUMMY, origin: 0 }
    }

    #[inline(always)]
    pub fn is(&self, flag: u8) -> bool {
        self.flags & flag != 0
    }

    #[inline(always)]
    pub fn set(&mut self, flag: u8, value: bool) {
        if value {
            self.flags |= flag;
        } else {
            self.flags &= !flag;
        }
    }

    #[inline(always)]
    pub fn word_marked(&self) -> bool {
        self.is(F_WORD_MARK)
    }

    #[inline(always)]
    pub fn pos_marked(&self) -> bool {
        self.is(F_POS_MARK)
    }

    #[inline(always)]
    pub fn is_dummy(&self) -> bool {
        self.is(F_DUMMY)
    }

    /// Red: marked word sitting at an unmarked position.
    #[inline(always)]
    pub fn is_red(&self) -> bool {
        self.word_marked() && !self.pos_marked()
    }

    /// Blue: unmarked word sitting at a marked position.
    #[inline(always)]
    pub fn is_blue(&self) -> bool {
        !self.word_marked() && self.pos_marked()
    }

    #[inline(always)]
    pub fn mismatched(&self) -> bool {
        self.word_marked() != self.pos_marked()
    }
}

/// One trace record packed as `(addr << 1) | is_write`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceRecord(pub u64);

impl TraceRecord {
    #[inline(always)]
    pub fn new(write: bool, addr: usize) -> Self {
        TraceRecord(((addr as u64) << 1) | write as u64)
    }

    pub fn is_write(&self) -> bool {
        self.0 & 1 == 1
    }

    pub fn addr(&self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn op(&self) -> char {
        if self.is_write() {
            'W'
        } else {
            'R'
        }
    }
}

/// Ordered address-only trace. Contains no data values.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AccessTrace {
    pub records: Vec<TraceRecord>,
}

impl AccessTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn summary(&self) -> TraceSummary {
        let mut digest = TraceDigest::new();
        for r in &self.records {
            digest.mix(r.0);
        }
        TraceSummary { len: self.records.len() as u64, digest: digest.finish() }
    }
}

/// Exact pointwise trace equality: same length, identical records.
pub fn trace_equal(a: &AccessTrace, b: &AccessTrace) -> bool {
    a.records == b.records
}

/// FNV-1a style rolling digest of the record stream. Used where storing a
/// full trace is too large; equal digests plus equal lengths stand in for
/// pointwise comparison in the large harness runs.
#[derive(Clone, Copy, Debug)]
pub struct TraceDigest(u64);

impl TraceDigest {
    pub fn new() -> Self {
        TraceDigest(0xcbf2_9ce4_8422_2325)
    }

    #[inline(always)]
    pub fn mix(&mut self, v: u64) {
        let mut h = self.0 ^ v;
        h = h.wrapping_mul(0x100_0000_01b3);
        h ^= h >> 29;
        self.0 = h;
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

impl Default for TraceDigest {
    fn default() -> Self {
        Self::new()
    }
}

/// Length + digest of a trace; cheap to keep for many runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceSummary {
    pub len: u64,
    pub digest: u64,
}

/// Where trace records go. `Counting` keeps only the access count,
/// `Digest` a rolling hash, `Full` every record.
#[derive(Clone, Debug)]
pub enum TraceSink {
    Disabled,
    Counting(u64),
    Digest { len: u64, digest: TraceDigest },
    Full(AccessTrace),
}

/// Internal sink: the count always ticks (one add); only the digest and
/// full modes take the slow path, behind one predictable branch.
#[derive(Clone, Debug)]
struct SinkState {
    mode: u8, // 0 disabled, 1 counting, 2 digest, 3 full
    count: u64,
    digest: TraceDigest,
    full: AccessTrace,
}

const MODE_DISABLED: u8 = 0;
const MODE_COUNTING: u8 = 1;
const MODE_DIGEST: u8 = 2;
const MODE_FULL: u8 = 3;

impl SinkState {
    fn new(mode: u8) -> Self {
        SinkState { mode, count: 0, digest: TraceDigest::new(), full: AccessTrace::default() }
    }

    #[inline(always)]
    fn record(&mut self, write: bool, addr: usize) {
        self.count += 1;
        if self.mode >= MODE_DIGEST {
            self.record_slow(write, addr);
        }
    }

    /// The four records of one compare-and-swap: R a, R b, W a, W b.
    #[inline(always)]
    fn record_cswap(&mut self, a: usize, b: usize) {
        self.count += 4;
        if self.mode >= MODE_DIGEST {
            self.record_slow(false, a);
            self.record_slow(false, b);
            self.record_slow(true, a);
            self.record_slow(true, b);
        }
    }

    #[inline(never)]
    fn record_slow(&mut self, write: bool, addr: usize) {
        let rec = TraceRecord::new(write, addr);
        if self.mode == MODE_DIGEST {
            self.digest.mix(rec.0);
        } else {
            self.full.records.push(rec);
        }
    }
}

/// Simulated word-RAM: data cells plus an optional wide plane for bit-packed
/// state that occupies multi-bit model words. Every access through the traced
/// API emits exactly one record into the attached sink.
#[derive(Clone, Debug)]
pub struct SimMemory {
    cells: Vec<Word>,
    wide: Vec<Vec<u64>>,
    word_bits: u32,
    sink: SinkState,
}

impl SimMemory {
    pub fn new(n: usize, word_bits: u32) -> Self {
        SimMemory {
            cells: vec![Word::dummy(); n],
            wide: Vec::new(),
            word_bits,
            sink: SinkState::new(MODE_DISABLED),
        }
    }

    pub fn from_words(words: Vec<Word>, word_bits: u32) -> Self {
        SimMemory {
            cells: words,
            wide: Vec::new(),
            word_bits,
            sink: SinkState::new(MODE_DISABLED),
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn word_bits(&self) -> u32 {
        self.word_bits
    }

    pub fn set_sink(&mut self, sink: TraceSink) {
        self.sink = match sink {
            TraceSink::Disabled => SinkState::new(MODE_DISABLED),
            TraceSink::Counting(count) => {
                let mut s = SinkState::new(MODE_COUNTING);
                s.count = count;
                s
            }
            TraceSink::Digest { len, digest } => {
                let mut s = SinkState::new(MODE_DIGEST);
                s.count = len;
                s.digest = digest;
                s
            }
            TraceSink::Full(trace) => {
                let mut s = SinkState::new(MODE_FULL);
                s.count = trace.records.len() as u64;
                s.full = trace;
                s
            }
        };
    }

    pub fn take_sink(&mut self) -> TraceSink {
        let state = std::mem::replace(&mut self.sink, SinkState::new(MODE_DISABLED));
        match state.mode {
            MODE_COUNTING => TraceSink::Counting(state.count),
            MODE_DIGEST => TraceSink::Digest { len: state.count, digest: state.digest },
            MODE_FULL => TraceSink::Full(state.full),
            _ => TraceSink::Disabled,
        }
    }

    pub fn record_full(&mut self) {
        self.sink = SinkState::new(MODE_FULL);
    }

    pub fn record_digest(&mut self) {
        self.sink = SinkState::new(MODE_DIGEST);
    }

    pub fn record_counting(&mut self) {
        self.sink = SinkState::new(MODE_COUNTING);
    }

    pub fn take_trace(&mut self) -> AccessTrace {
        match self.take_sink() {
            TraceSink::Full(t) => t,
            _ => AccessTrace::default(),
        }
    }

    pub fn take_summary(&mut self) -> TraceSummary {
        match self.take_sink() {
            TraceSink::Full(t) => t.summary(),
            TraceSink::Digest { len, digest } => TraceSummary { len, digest: digest.finish() },
            _ => TraceSummary { len: 0, digest: 0 },
        }
    }

    pub fn access_count(&self) -> u64 {
        if self.sink.mode == MODE_FULL {
            self.sink.full.len() as u64
        } else {
            self.sink.count
        }
    }

    /// Grow the data plane; new cells are dummies. Returns the old length.
    pub fn extend_cells(&mut self, extra: usize) -> usize {
        let base = self.cells.len();
        self.cells.resize(base + extra, Word::dummy());
        base
    }

    pub fn truncate_cells(&mut self, len: usize) {
        self.cells.truncate(len);
    }

    #[inline(always)]
    pub fn read(&mut self, addr: usize) -> Word {
        self.sink.record(false, addr);
        self.cells[addr]
    }

    #[inline(always)]
    pub fn write(&mut self, addr: usize, w: Word) {
        self.sink.record(true, addr);
        self.cells[addr] = w;
    }

    /// Untraced snapshot of a cell, for oracles and end-state checks only.
    pub fn peek(&self, addr: usize) -> Word {
        self.cells[addr]
    }

    /// Untraced store, for test setup only.
    pub fn poke(&mut self, addr: usize, w: Word) {
        self.cells[addr] = w;
    }

    pub fn words(&self) -> &[Word] {
        &self.cells
    }

    pub fn words_mut(&mut self) -> &mut [Word] {
        &mut self.cells
    }

    /// Oblivious compare-and-swap: always the trace
    /// `[(R,a),(R,b),(W,a),(W,b)]`; contents swapped iff `predicate`.
    /// When the predicate is false the written values equal the read ones,
    /// so the physical store is elided; the records are emitted either way.
    #[inline(always)]
    pub fn cswap(&mut self, a: usize, b: usize, predicate: bool) {
        self.sink.record_cswap(a, b);
        if predicate {
            let wa = self.cells[a];
            let wb = self.cells[b];
            self.store_swapped(a, b, wa, wb, ALWAYS_PINNED);
        } else {
            // Touch for the bounds contract; contents unchanged.
            let _ = (&self.cells[a], &self.cells[b]);
        }
    }

    /// Compare-and-swap whose predicate may inspect the two words just read.
    /// Trace shape is identical for both predicate outcomes.
    #[inline(always)]
    pub fn cswap_with<F>(&mut self, a: usize, b: usize, pred: F)
    where
        F: FnOnce(&Word, &Word) -> bool,
    {
        self.sink.record_cswap(a, b);
        let wa = self.cells[a];
        let wb = self.cells[b];
        if pred(&wa, &wb) {
            self.store_swapped(a, b, wa, wb, ALWAYS_PINNED);
        }
    }

    /// Like [`Self::cswap_with`], but position marks stay pinned to their
    /// slots. Used by the distribution routine, where position marks describe
    /// slots rather than the words occupying them.
    #[inline(always)]
    pub fn cswap_pinned<F>(&mut self, a: usize, b: usize, pred: F)
    where
        F: FnOnce(&Word, &Word) -> bool,
    {
        self.sink.record_cswap(a, b);
        let wa = self.cells[a];
        let wb = self.cells[b];
        if pred(&wa, &wb) {
            self.store_swapped(a, b, wa, wb, ALWAYS_PINNED | F_POS_MARK);
        }
    }

    #[inline(always)]
    fn store_swapped(&mut self, a: usize, b: usize, wa: Word, wb: Word, pinned: u8) {
        let mut na = wb;
        let mut nb = wa;
        na.flags = (wb.flags & !pinned) | (wa.flags & pinned);
        nb.flags = (wa.flags & !pinned) | (wb.flags & pinned);
        self.cells[a] = na;
        self.cells[b] = nb;
    }

    /// Read-modify-write of one cell through a register-side function.
    /// Emits one read and one write.
    #[inline(always)]
    pub fn update<F>(&mut self, addr: usize, f: F)
    where
        F: FnOnce(&mut Word),
    {
        let mut w = self.read(addr);
        f(&mut w);
        self.write(addr, w);
    }

    // --- wide plane -------------------------------------------------------

    /// Allocate `words` wide cells of `bits` model bits each. Addresses for
    /// the wide plane live past the data cells and are deterministic for a
    /// fixed allocation order.
    pub fn alloc_wide(&mut self, words: usize, bits: u32) -> WideRegion {
        let limbs = bits.div_ceil(64) as usize;
        let base = self.cells.len() + self.wide.len();
        let slot = self.wide.len();
        for _ in 0..words {
            self.wide.push(vec![0u64; limbs]);
        }
        WideRegion { base, slot, words, bits }
    }

    pub fn free_wide(&mut self, region: WideRegion) {
        debug_assert_eq!(region.slot + region.words, self.wide.len(), "wide frees must be LIFO");
        self.wide.truncate(region.slot);
    }

    pub fn read_wide(&mut self, region: &WideRegion, idx: usize, out: &mut [u64]) {
        assert!(idx < region.words);
        self.sink.record(false, region.base + idx);
        let slot = &self.wide[region.slot + idx];
        out[..slot.len()].copy_from_slice(slot);
    }

    pub fn write_wide(&mut self, region: &WideRegion, idx: usize, val: &[u64]) {
        assert!(idx < region.words);
        self.sink.record(true, region.base + idx);
        let slot = &mut self.wide[region.slot + idx];
        let n = slot.len();
        slot.copy_from_slice(&val[..n]);
    }
}

/// Handle to a wide-plane allocation.
#[derive(Clone, Copy, Debug)]
pub struct WideRegion {
    pub base: usize,
    slot: usize,
    pub words: usize,
    pub bits: u32,
}

/// A region of `n` words interpreted as a marked array. The marked-word and
/// marked-position counts are derivable only by scanning.
#[derive(Clone, Copy, Debug)]
pub struct MarkedArray {
    pub base: usize,
    pub n: usize,
}

impl MarkedArray {
    pub fn new(base: usize, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::ShapeMismatch("marked array must be non-empty".into()));
        }
        Ok(MarkedArray { base, n })
    }

    #[inline(always)]
    pub fn addr(&self, i: usize) -> usize {
        debug_assert!(i < self.n);
        self.base + i
    }
}

/// Count marked words with a full linear scan: exactly `n` reads at
/// addresses `base..base+n` regardless of contents.
pub fn count_marked(mem: &mut SimMemory, arr: &MarkedArray) -> usize {
    let mut m = 0usize;
    for i in 0..arr.n {
        let w = mem.read(arr.addr(i));
        m += (w.word_marked() && !w.is_dummy()) as usize;
    }
    m
}

/// Count marked positions with the same fixed scan.
pub fn count_pos_marked(mem: &mut SimMemory, arr: &MarkedArray) -> usize {
    let mut m = 0usize;
    for i in 0..arr.n {
        let w = mem.read(arr.addr(i));
        m += (w.pos_marked() && !w.is_dummy()) as usize;
    }
    m
}
