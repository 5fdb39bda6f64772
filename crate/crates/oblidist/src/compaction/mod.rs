//! Deterministic oblivious two-fold compaction: permute a region so that all
//! marked words end in its first half, touching a sequence of addresses that
//! depends only on the region size and the configuration.
//!
//! Three scales share one block-level engine ([`block::twofold_compact_block`]):
//! word atoms with the compressed matching for small regions, subarray atoms
//! with the compressed matching at the medium scale, subarray atoms with the
//! full-scan matching in general. A quadratic predicated pass covers regions
//! too small to carry a graph. [`loose_compact`] iterates two-fold passes
//! down a prefix ladder, padding with pretend passes so the trace is
//! independent of the marked count. Every data movement is recorded in a
//! [`CopyScript`] for failure-sweeping reverse replay ([`sweep_back`]).

pub mod block;

pub use block::{twofold_compact_block, BlockReport, MatchingVariant};

use crate::error::{Error, Result};
use crate::graph::{BipartiteMultigraph, ExpanderParams};
use crate::matching::compressed::StateLayout;
use crate::mem::{MarkedArray, SimMemory, Word};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Which words count as marked for a compaction pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MarkKind {
    /// The word-mark flag (dummies never count).
    WordMark,
    /// Word-mark differs from position-mark; used by the distribution
    /// recursion to relocate mismatched survivors.
    Mismatch,
    /// Nothing is marked: drives the pretend passes of the loose ladder,
    /// producing the same trace as a real pass.
    ForceUnmarked,
}

impl MarkKind {
    #[inline(always)]
    pub fn word_marked(&self, w: &Word) -> bool {
        match self {
            MarkKind::WordMark => w.word_marked() && !w.is_dummy(),
            MarkKind::Mismatch => w.mismatched() && !w.is_dummy(),
            MarkKind::ForceUnmarked => false,
        }
    }
}

/// Mark rule for atoms: an atom is marked when its marked-word count
/// exceeds `threshold` (0 for word atoms: marked iff the word is).
#[derive(Clone, Copy, Debug)]
pub struct MarkSpec {
    pub kind: MarkKind,
    pub threshold: u32,
}

impl MarkSpec {
    pub fn words(kind: MarkKind) -> Self {
        MarkSpec { kind, threshold: 0 }
    }
}

/// A region of `n_atoms` atoms of `atom_words` words each, starting at
/// `base`. Blocks of B consecutive atoms map onto graph vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomView {
    pub base: usize,
    pub n_atoms: usize,
    pub atom_words: usize,
}

impl AtomView {
    pub fn words(&self) -> usize {
        self.n_atoms * self.atom_words
    }

    #[inline(always)]
    pub fn word_addr(&self, atom: usize, w: usize) -> usize {
        debug_assert!(atom < self.n_atoms && w < self.atom_words);
        self.base + atom * self.atom_words + w
    }

    /// Traced scan: per-atom marked-word counts and dummy flags. One read
    /// per word in fixed order.
    pub fn scan(&self, mem: &mut SimMemory, spec: &MarkSpec) -> (Vec<bool>, Vec<bool>) {
        let mut marked = Vec::with_capacity(self.n_atoms);
        let mut dummy = Vec::with_capacity(self.n_atoms);
        for atom in 0..self.n_atoms {
            let mut count = 0u32;
            let mut all_dummy = true;
            for w in 0..self.atom_words {
                let word = mem.read(self.word_addr(atom, w));
                count += spec.kind.word_marked(&word) as u32;
                all_dummy &= word.is_dummy();
            }
            marked.push(count > spec.threshold);
            dummy.push(all_dummy);
        }
        (marked, dummy)
    }
}

/// Configuration for the compaction stack. Densities are kept symbolic in
/// `gamma`: word-level capacity gamma/4, medium (gamma/8)^2, general
/// (gamma/8)^3 / 2.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompactionConfig {
    /// Epsilon the family is certified against.
    pub epsilon: f64,
    /// Family degree d; B is the largest power of 2 at most d/2.
    pub d_eps: usize,
    pub gamma: f64,
    pub ell: u64,
    pub word_bits: u32,
    /// Subarray width for the medium scale, ~ b / lg b words.
    pub q_threshold: usize,
    /// Subarray width for the general scale, Theta((b / lg b)^2) words.
    pub p_threshold: usize,
    /// Compressed protocol state must fit in this many words.
    pub state_budget_words: usize,
    pub family: ExpanderParams,
    /// Stray-recovery passes appended to the block engine.
    pub phase4_rounds: usize,
}

impl CompactionConfig {
    pub fn b_param(&self) -> usize {
        let mut b = 1usize;
        while b * 2 <= self.d_eps / 2 {
            b *= 2;
        }
        b
    }

    pub fn word_density(&self) -> f64 {
        self.gamma / 4.0
    }

    pub fn medium_density(&self) -> f64 {
        (self.gamma / 8.0) * (self.gamma / 8.0)
    }

    pub fn general_density(&self) -> f64 {
        (self.gamma / 8.0) * (self.gamma / 8.0) * (self.gamma / 8.0) / 2.0
    }

    /// Largest region the compressed-state small scale covers, in words.
    pub fn small_cap_words(&self) -> usize {
        let b = self.b_param();
        let mut best = 0usize;
        let mut n_blocks = 2usize;
        loop {
            let layout = StateLayout::new(n_blocks, self.d_eps);
            if layout.word_count(self.word_bits) > self.state_budget_words {
                break;
            }
            best = n_blocks * b;
            n_blocks *= 2;
            if n_blocks > 1 << 24 {
                break;
            }
        }
        best
    }

    /// Smallest block count at which every vertex's padded edge bundle fits
    /// under the reply quota, so the protocol cannot wedge on its own
    /// multi-edges: bundles are 2*d/N for the complete-multigraph members and
    /// 2 for the repaired permutation sums.
    pub fn protocol_min_blocks(&self) -> usize {
        let quota = self.b_param() / 4;
        let mut n = 2usize;
        while 2 * self.d_eps / n > quota.max(1) {
            n *= 2;
        }
        n
    }

    pub fn validate(&self) -> Result<()> {
        let b = self.b_param();
        if !b.is_power_of_two() || b > self.d_eps / 2 {
            return Err(Error::ShapeMismatch("invalid B for degree".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::ShapeMismatch("gamma out of range".into()));
        }
        if !self.q_threshold.is_power_of_two() || !self.p_threshold.is_power_of_two() {
            return Err(Error::ShapeMismatch("thresholds must be powers of two".into()));
        }
        Ok(())
    }
}

/// Growable bit vector for per-pair applied flags.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BitVec {
    limbs: Vec<u64>,
    len: usize,
}

impl BitVec {
    pub fn new() -> Self {
        BitVec::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        BitVec { limbs: Vec::with_capacity(bits.div_ceil(64)), len: 0 }
    }

    #[inline(always)]
    pub fn push(&mut self, bit: bool) {
        if self.len % 64 == 0 {
            self.limbs.push(0);
        }
        if bit {
            *self.limbs.last_mut().unwrap() |= 1 << (self.len % 64);
        }
        self.len += 1;
    }

    #[inline(always)]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.limbs[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// One homogeneous stretch of recorded pairs: the pair sequence is a pure
/// function of the geometry (regenerated on replay), only the applied bits
/// are data.
#[derive(Clone, Debug)]
pub struct Segment {
    pub seq: PairSeq,
    pub applied: BitVec,
}

/// Deterministic word-pair enumerations used by the compaction passes.
#[derive(Clone, Debug)]
pub enum PairSeq {
    /// Block engine neighbour scan: all (vertex, slot, main atom, aux atom)
    /// tuples, each spanning `atom_words` word pairs. `reversed` yields the
    /// same pairs in reverse execution order.
    Block {
        main: AtomView,
        aux: AtomView,
        graph: Arc<BipartiteMultigraph>,
        block_atoms: usize,
        reversed: bool,
    },
    /// Lower-half gather: for each lower block, two passes of
    /// 3B sources x B targets.
    Gather {
        main: AtomView,
        aux: AtomView,
        block_atoms: usize,
    },
    /// Quadratic predicated pass over all ordered atom pairs (t, s), s != t.
    Quad {
        view: AtomView,
    },
    /// Fixed permutation: column-major (rows x cols) read row-wise, applied
    /// as a cycle walk of swaps.
    Stride {
        base: usize,
        rows: usize,
        cols: usize,
        elem_words: usize,
    },
}

impl PairSeq {
    /// Number of word pairs in the sequence.
    pub fn len(&self) -> usize {
        match self {
            PairSeq::Block { main, graph, block_atoms, .. } => {
                let n_blocks = main.n_atoms / block_atoms;
                n_blocks * graph.degree() * block_atoms * block_atoms * main.atom_words
            }
            PairSeq::Gather { main, block_atoms, .. } => {
                let n_blocks = main.n_atoms / block_atoms;
                (n_blocks / 2) * 2 * (3 * block_atoms) * block_atoms * main.atom_words
            }
            PairSeq::Quad { view } => view.n_atoms * (view.n_atoms - 1) * view.atom_words,
            PairSeq::Stride { rows, cols, elem_words, .. } => {
                stride_cycle_swaps(*rows, *cols) * elem_words
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// One past the largest address the sequence touches.
    pub fn max_addr_exclusive(&self) -> usize {
        match self {
            PairSeq::Block { main, aux, .. } | PairSeq::Gather { main, aux, .. } => {
                (main.base + main.words()).max(aux.base + aux.words())
            }
            PairSeq::Quad { view } => view.base + view.words(),
            PairSeq::Stride { base, rows, cols, elem_words } => {
                base + rows * cols * elem_words
            }
        }
    }

    /// Visit every word pair in execution order (or reversed). Linear in the
    /// sequence length for every variant; the cycle walk of a stride segment
    /// is materialized once rather than regenerated per pair.
    pub fn for_each(&self, reversed: bool, mut f: impl FnMut(usize, usize)) {
        match self {
            PairSeq::Stride { base, rows, cols, elem_words } => {
                let swaps = stride_swaps(*rows, *cols);
                let visit = |f: &mut dyn FnMut(usize, usize), k: usize, w: usize| {
                    let (x, y) = swaps[k];
                    f(base + x * elem_words + w, base + y * elem_words + w);
                };
                if reversed {
                    for k in (0..swaps.len()).rev() {
                        for w in (0..*elem_words).rev() {
                            visit(&mut f, k, w);
                        }
                    }
                } else {
                    for k in 0..swaps.len() {
                        for w in 0..*elem_words {
                            visit(&mut f, k, w);
                        }
                    }
                }
            }
            _ => {
                let n = self.len();
                if reversed {
                    for i in (0..n).rev() {
                        let (a, b) = self.pair(i);
                        f(a, b);
                    }
                } else {
                    for i in 0..n {
                        let (a, b) = self.pair(i);
                        f(a, b);
                    }
                }
            }
        }
    }

    /// The `idx`-th word pair in execution order.
    pub fn pair(&self, idx: usize) -> (usize, usize) {
        match self {
            PairSeq::Block { main, aux, graph, block_atoms, reversed } => {
                let bb = *block_atoms;
                let aw = main.atom_words;
                let idx = if *reversed { self.len() - 1 - idx } else { idx };
                let w = idx % aw;
                let r = idx / aw;
                let t = r % bb;
                let r = r / bb;
                let a = r % bb;
                let r = r / bb;
                let s = r % graph.degree();
                let u = r / graph.degree();
                let v = graph.slot(u, s);
                (main.word_addr(u * bb + a, w), aux.word_addr(v * bb + t, w))
            }
            PairSeq::Gather { main, aux, block_atoms } => {
                let bb = *block_atoms;
                let aw = main.atom_words;
                let n_blocks = main.n_atoms / bb;
                let w = idx % aw;
                let r = idx / aw;
                let t = r % bb;
                let r = r / bb;
                let src = r % (3 * bb);
                let r = r / (3 * bb);
                let i = r / 2; // two passes per lower block
                let src_addr = match src / bb {
                    0 => main.word_addr((i + n_blocks / 2) * bb + src % bb, w),
                    1 => aux.word_addr(i * bb + src % bb, w),
                    _ => aux.word_addr((i + n_blocks / 2) * bb + src % bb, w),
                };
                (src_addr, main.word_addr(i * bb + t, w))
            }
            PairSeq::Quad { view } => {
                let aw = view.atom_words;
                let w = idx % aw;
                let r = idx / aw;
                let m = view.n_atoms - 1;
                let t = r / m;
                let s0 = r % m;
                let s = s0 + (s0 >= t) as usize;
                (view.word_addr(t, w), view.word_addr(s, w))
            }
            PairSeq::Stride { base, rows, cols, elem_words, .. } => {
                let w = idx % elem_words;
                let r = idx / elem_words;
                let (x, y) = stride_swap_pair(*rows, *cols, r);
                (base + x * elem_words + w, base + y * elem_words + w)
            }
        }
    }
}

/// Ordered record of every compare-and-swap a compaction performed, with its
/// applied flag: replaying the sequence in reverse copies processed values
/// back to their origins.
#[derive(Clone, Debug, Default)]
pub struct CopyScript {
    pub segments: Vec<Segment>,
}

impl CopyScript {
    pub fn new() -> Self {
        CopyScript::default()
    }

    pub fn record_count(&self) -> usize {
        self.segments.iter().map(|s| s.applied.len()).sum()
    }

    pub fn applied_count(&self) -> usize {
        self.segments
            .iter()
            .map(|s| (0..s.applied.len()).filter(|&i| s.applied.get(i)).count())
            .sum()
    }

    /// Flat (src, dst, applied) records in execution order.
    pub fn for_each_record(&self, mut f: impl FnMut(usize, usize, bool)) {
        for seg in &self.segments {
            let mut i = 0usize;
            seg.seq.for_each(false, |a, b| {
                f(a, b, seg.applied.get(i));
                i += 1;
            });
        }
    }
}

/// Walk the same index-pair sequence as the forward compaction, in reverse,
/// swapping back exactly where the forward swap was applied. The address
/// sequence is the forward one reversed, so the sweep is as oblivious as the
/// compaction that produced the script.
///
/// Auxiliary scratch regions referenced by the script were freed after the
/// forward pass; they ended all-dummy, so re-extending with fresh dummies
/// reproduces the state the reverse replay needs.
pub fn sweep_back(mem: &mut SimMemory, script: &CopyScript) {
    let original_len = mem.len();
    let needed = script
        .segments
        .iter()
        .map(|s| s.seq.max_addr_exclusive())
        .max()
        .unwrap_or(0);
    if needed > original_len {
        mem.extend_cells(needed - original_len);
    }
    for seg in script.segments.iter().rev() {
        let n = seg.applied.len();
        let mut i = n;
        seg.seq.for_each(true, |a, b| {
            i -= 1;
            mem.cswap(a, b, seg.applied.get(i));
        });
    }
    mem.truncate_cells(original_len);
}

// --- stride permutation ----------------------------------------------------

/// Number of swaps in the cycle walk of the (rows x cols) transpose-gather.
fn stride_cycle_swaps(rows: usize, cols: usize) -> usize {
    let n = rows * cols;
    if n == 0 {
        0
    } else {
        n - stride_cycle_count(rows, cols)
    }
}

fn stride_dest(rows: usize, cols: usize, i: usize) -> usize {
    // Element at column-major (r, c) = index c*rows + r moves to row-major
    // index r*cols + c.
    let r = i % rows;
    let c = i / rows;
    r * cols + c
}

fn stride_cycle_count(rows: usize, cols: usize) -> usize {
    let n = rows * cols;
    let mut seen = vec![false; n];
    let mut cycles = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        cycles += 1;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = stride_dest(rows, cols, i);
        }
    }
    cycles
}

/// All swaps of the cycle walk, in execution order: holding each cycle's
/// leader fixed, swap it with successive positions along the cycle. A pure
/// function of (rows, cols), regenerated for replay.
fn stride_swaps(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let n = rows * cols;
    let mut seen = vec![false; n];
    let mut swaps = Vec::with_capacity(n);
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut p = stride_dest(rows, cols, start);
        while p != start {
            seen[p] = true;
            swaps.push((start, p));
            p = stride_dest(rows, cols, p);
        }
    }
    swaps
}

/// The `k`-th swap of the cycle walk (random access; linear regeneration,
/// intended for spot checks).
fn stride_swap_pair(rows: usize, cols: usize, k: usize) -> (usize, usize) {
    stride_swaps(rows, cols)[k]
}

/// Oblivious fixed permutation: treat `region` as a (rows x cols) array of
/// `elem_words`-word elements stored column-wise and read it row-wise. If
/// only element indices congruent to 0 mod rows were marked, afterwards
/// exactly the first `cols` elements are marked.
pub fn stride_gather(
    mem: &mut SimMemory,
    base: usize,
    rows: usize,
    cols: usize,
    elem_words: usize,
    script: &mut CopyScript,
) {
    let seq = PairSeq::Stride { base, rows, cols, elem_words };
    let mut applied = BitVec::with_capacity(seq.len());
    for (x, y) in stride_swaps(rows, cols) {
        for w in 0..elem_words {
            mem.cswap(base + x * elem_words + w, base + y * elem_words + w, true);
            applied.push(true);
        }
    }
    script.segments.push(Segment { seq, applied });
}

// --- quadratic fallback ------------------------------------------------------

/// Predicated selection pass over all ordered atom pairs: after the scan the
/// marked atoms occupy a prefix. Quadratic, used only for regions too small
/// to carry a graph; trace is fixed for the view geometry.
pub fn quad_compact(
    mem: &mut SimMemory,
    view: AtomView,
    spec: &MarkSpec,
    script: &mut CopyScript,
) {
    let (mut marked, _) = view.scan(mem, spec);
    let seq = PairSeq::Quad { view };
    let mut applied = BitVec::new();
    let aw = view.atom_words;
    let m = view.n_atoms - 1;
    for t in 0..view.n_atoms {
        for s0 in 0..m {
            let s = s0 + (s0 >= t) as usize;
            // Only forward pairs may fire (an index condition, not data):
            // each prefix slot pulls the first marked atom after it.
            let do_swap = s > t && !marked[t] && marked[s];
            for w in 0..aw {
                mem.cswap(view.word_addr(t, w), view.word_addr(s, w), do_swap);
                applied.push(do_swap);
            }
            if do_swap {
                marked.swap(t, s);
            }
        }
    }
    script.segments.push(Segment { seq, applied });
}

// --- scale drivers -----------------------------------------------------------

/// Outcome of a compaction driver: the script plus fail-soft bookkeeping.
#[derive(Debug)]
pub struct CompactionOutcome {
    pub script: CopyScript,
    /// End-state bookkeeping verdict from the engine mirrors; false means a
    /// precondition (density, matching) was violated and the end-state
    /// contract may not hold. The trace is unaffected.
    pub ok: bool,
}

/// Scale chosen by the dispatcher for a given region size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Quad,
    Small,
    Medium,
    General,
}

/// Decide the scale for an `n`-word region under `cfg`.
pub fn pick_scale(n: usize, cfg: &CompactionConfig) -> Scale {
    let b = cfg.b_param();
    let q = cfg.q_threshold;
    let small_min = cfg.protocol_min_blocks() * b;
    let small_cap = cfg.small_cap_words();
    if n >= small_min && n <= small_cap && (n / b).is_power_of_two() && n % b == 0 {
        return Scale::Small;
    }
    if n > q * q {
        let atoms = n / cfg.p_threshold;
        if n % cfg.p_threshold == 0 && atoms >= 2 * b && atoms.is_power_of_two() {
            return Scale::General;
        }
    } else if n >= 2 * b * q && n % q == 0 && (n / q).is_power_of_two() {
        return Scale::Medium;
    }
    Scale::Quad
}

/// Two-fold compaction of an `n`-word region: all marked words end in the
/// first half. Scale chosen by size; every variant's trace depends only on
/// `(n, cfg)`.
pub fn twofold_compact(
    mem: &mut SimMemory,
    region: MarkedArray,
    cfg: &CompactionConfig,
    kind: MarkKind,
    script: &mut CopyScript,
) -> Result<bool> {
    match pick_scale(region.n, cfg) {
        Scale::Small => compact_small_into(mem, region, cfg, kind, script),
        Scale::Medium => compact_medium_into(mem, region, cfg, kind, script),
        Scale::General => compact_general_into(mem, region, cfg, kind, script),
        Scale::Quad => {
            let view = AtomView { base: region.base, n_atoms: region.n, atom_words: 1 };
            quad_compact(mem, view, &MarkSpec::words(kind), script);
            Ok(true)
        }
    }
}

/// Word-atom compaction with the compressed matching: fully oblivious, O(n).
pub fn compact_small(
    mem: &mut SimMemory,
    region: MarkedArray,
    cfg: &CompactionConfig,
    kind: MarkKind,
) -> Result<CompactionOutcome> {
    let mut script = CopyScript::new();
    let ok = compact_small_into(mem, region, cfg, kind, &mut script)?;
    Ok(CompactionOutcome { script, ok })
}

fn compact_small_into(
    mem: &mut SimMemory,
    region: MarkedArray,
    cfg: &CompactionConfig,
    kind: MarkKind,
    script: &mut CopyScript,
) -> Result<bool> {
    let view = AtomView { base: region.base, n_atoms: region.n, atom_words: 1 };
    block_pass(mem, view, cfg, MarkSpec::words(kind), MatchingVariant::Compressed, script)
}

/// One block-engine pass over `view` with a freshly allocated dummy aux
/// region; handles the degenerate sizes with the quadratic fallback.
fn block_pass(
    mem: &mut SimMemory,
    view: AtomView,
    cfg: &CompactionConfig,
    spec: MarkSpec,
    variant: MatchingVariant,
    script: &mut CopyScript,
) -> Result<bool> {
    let b = cfg.b_param();
    let n_blocks = view.n_atoms / b;
    if view.n_atoms % b != 0
        || n_blocks < cfg.protocol_min_blocks()
        || !n_blocks.is_power_of_two()
    {
        quad_compact(mem, view, &spec, script);
        return Ok(true);
    }
    let graph = crate::graph::family_cached(&cfg.family, n_blocks)?;
    let aux_base = mem.extend_cells(view.words());
    let aux = AtomView { base: aux_base, n_atoms: view.n_atoms, atom_words: view.atom_words };
    let report = twofold_compact_block(mem, view, aux, &graph, cfg, spec, variant, script)?;
    mem.truncate_cells(aux_base);
    Ok(report.end_ok)
}

/// Subarray-atom compaction for n = p*q words (p subarrays of q words),
/// then per-subarray word compaction and a stride merge: all marked words
/// end in the first half. Oblivious, O(n).
pub fn compact_medium(
    mem: &mut SimMemory,
    region: MarkedArray,
    cfg: &CompactionConfig,
    kind: MarkKind,
) -> Result<CompactionOutcome> {
    let mut script = CopyScript::new();
    let ok = compact_medium_into(mem, region, cfg, kind, &mut script)?;
    Ok(CompactionOutcome { script, ok })
}

fn compact_medium_into(
    mem: &mut SimMemory,
    region: MarkedArray,
    cfg: &CompactionConfig,
    kind: MarkKind,
    script: &mut CopyScript,
) -> Result<bool> {
    let q = cfg.q_threshold;
    let n = region.n;
    if n % q != 0 {
        return Err(Error::ShapeMismatch(format!("medium region {n} not a multiple of q={q}")));
    }
    let p_sub = n / q;
    if p_sub < 4 || !p_sub.is_power_of_two() {
        return Err(Error::ShapeMismatch(format!("medium needs >= 4 subarrays, got {p_sub}")));
    }
    if p_sub > q {
        return Err(Error::ShapeMismatch(format!(
            "medium needs at most q = {q} subarrays, got {p_sub}; use the general scale"
        )));
    }
    // A subarray is marked when its marked-word fraction exceeds gamma/8.
    let threshold = (q as f64 * cfg.gamma / 8.0) as u32;
    let spec = MarkSpec { kind, threshold };
    let mut ok = true;

    // Move marked subarrays into the first quarter: compact twice on nested
    // prefixes.
    let full = AtomView { base: region.base, n_atoms: p_sub, atom_words: q };
    ok &= block_pass(mem, full, cfg, spec, MatchingVariant::Compressed, script)?;
    let half = AtomView { base: region.base, n_atoms: p_sub / 2, atom_words: q };
    ok &= block_pass(mem, half, cfg, spec, MatchingVariant::Compressed, script)?;

    // Word-level compaction, twice, inside each remaining subarray.
    for j in p_sub / 4..p_sub {
        let sub = MarkedArray { base: region.base + j * q, n: q };
        ok &= twofold_compact(mem, sub, cfg, kind, script)?;
        let sub_half = MarkedArray { base: sub.base, n: q / 2 };
        ok &= twofold_compact(mem, sub_half, cfg, kind, script)?;
    }

    // Gather the per-subarray first quarters to the front of the tail.
    let tail_subs = 3 * p_sub / 4;
    stride_gather(
        mem,
        region.base + (p_sub / 4) * q,
        4,
        tail_subs,
        q / 4,
        script,
    );
    Ok(ok)
}

/// General-size compaction: subarrays of `p_threshold` words as atoms with
/// the full-scan matching, compacted twice into the first quarter, then the
/// medium/small scheme twice inside each remaining subarray, then a stride
/// merge. Oblivious, O(n). Undersized inputs fall through to the smaller
/// scales.
pub fn compact_general(
    mem: &mut SimMemory,
    region: MarkedArray,
    cfg: &CompactionConfig,
    kind: MarkKind,
) -> Result<CompactionOutcome> {
    let mut script = CopyScript::new();
    let ok = compact_general_into(mem, region, cfg, kind, &mut script)?;
    Ok(CompactionOutcome { script, ok })
}

fn compact_general_into(
    mem: &mut SimMemory,
    region: MarkedArray,
    cfg: &CompactionConfig,
    kind: MarkKind,
    script: &mut CopyScript,
) -> Result<bool> {
    let p = cfg.p_threshold;
    let n = region.n;
    if n <= cfg.q_threshold * cfg.q_threshold || n % p != 0 || (n / p) < 4 {
        // Dispatch rule: small inputs use the lower scales directly.
        return twofold_compact(mem, region, cfg, kind, script);
    }
    let n_sub = n / p;
    // A subarray is marked when its marked fraction exceeds (gamma/8)^2 / 2.
    let threshold = (p as f64 * cfg.medium_density() / 2.0) as u32;
    let spec = MarkSpec { kind, threshold };
    let mut ok = true;

    let full = AtomView { base: region.base, n_atoms: n_sub, atom_words: p };
    ok &= block_pass(mem, full, cfg, spec, MatchingVariant::FullScan, script)?;
    let half = AtomView { base: region.base, n_atoms: n_sub / 2, atom_words: p };
    ok &= block_pass(mem, half, cfg, spec, MatchingVariant::FullScan, script)?;

    for j in n_sub / 4..n_sub {
        let sub = MarkedArray { base: region.base + j * p, n: p };
        ok &= twofold_compact(mem, sub, cfg, kind, script)?;
        let sub_half = MarkedArray { base: sub.base, n: p / 2 };
        ok &= twofold_compact(mem, sub_half, cfg, kind, script)?;
    }

    let tail_subs = 3 * n_sub / 4;
    stride_gather(
        mem,
        region.base + (n_sub / 4) * p,
        4,
        tail_subs,
        p / 4,
        script,
    );
    Ok(ok)
}

/// Loose compaction: count the marked words, run two-fold compaction on the
/// prefix ladder n, n/2, ..., 2^ceil(lg(m*ell)), then pretend passes (same
/// addresses, nothing moves) down to prefix 1. The trace is independent of
/// m; all marked words end within the first 2^ceil(lg(m*ell)) <= 2*m*ell
/// positions.
pub fn loose_compact(
    mem: &mut SimMemory,
    arr: MarkedArray,
    cfg: &CompactionConfig,
    kind: MarkKind,
) -> Result<CompactionOutcome> {
    let mut script = CopyScript::new();
    // Count with a fixed linear scan.
    let mut m = 0u64;
    for i in 0..arr.n {
        let w = mem.read(arr.addr(i));
        m += kind.word_marked(&w) as u64;
    }
    if m * cfg.ell > arr.n as u64 {
        return Err(Error::DensityViolation {
            marked: m as usize,
            total: arr.n,
            budget: (arr.n as u64 / cfg.ell) as usize,
        });
    }
    let real_floor = if m == 0 { u64::MAX } else { (m * cfg.ell).next_power_of_two() };
    let mut ok = true;
    let mut prefix = arr.n;
    while prefix >= 2 {
        let real = (prefix as u64) >= real_floor;
        let pass_kind = if real { kind } else { MarkKind::ForceUnmarked };
        let region = MarkedArray { base: arr.base, n: prefix };
        ok &= twofold_compact(mem, region, cfg, pass_kind, &mut script)?;
        prefix /= 2;
    }
    Ok(CompactionOutcome { script, ok })
}
