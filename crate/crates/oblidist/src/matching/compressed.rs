//! Matching protocol on a bit-packed state small enough to fit in O(1)
//! model words.
//!
//! The whole protocol state plus the graph pointers pack into
//! `ceil(total_bits / b)` words of `b` bits: per edge a lg(N)-bit pointer and
//! three flag bits (request, reply, matched); per vertex a counter in
//! [0, d] and a satisfied bit; plus a shrinking list of pointers to
//! unsatisfied vertices with its length field. Each round reads the state
//! words into registers, computes there, and writes them back, so the memory
//! trace is a fixed pattern of O(1) addresses per round and the round count
//! is preset — the computation is oblivious.

use super::{round_budget, Matching, MatchingRun, MarkedVertexSet};
use crate::error::{Error, Result};
use crate::graph::BipartiteMultigraph;
use crate::mem::SimMemory;

/// Bit-field layout for a given (N, d).
#[derive(Clone, Copy, Debug)]
pub struct StateLayout {
    pub n: usize,
    pub degree: usize,
    /// lg(N) pointer bits.
    pub ptr_bits: u32,
    /// Counter bits: values in [0, d].
    pub counter_bits: u32,
    /// List-length bits: values in [0, N].
    pub len_bits: u32,
    pub total_bits: usize,
}

impl StateLayout {
    pub fn new(n: usize, degree: usize) -> Self {
        assert!(n.is_power_of_two() && n >= 2);
        let ptr_bits = n.ilog2().max(1);
        let counter_bits = usize::BITS - degree.leading_zeros();
        let len_bits = usize::BITS - n.leading_zeros();
        let edge_bits = n * degree * (ptr_bits as usize + 3);
        let vertex_bits = n * (counter_bits as usize + 1);
        let list_bits = n * ptr_bits as usize + len_bits as usize;
        StateLayout {
            n,
            degree,
            ptr_bits,
            counter_bits,
            len_bits,
            total_bits: edge_bits + vertex_bits + list_bits,
        }
    }

    /// Number of b-bit model words the state occupies.
    pub fn word_count(&self, word_bits: u32) -> usize {
        self.total_bits.div_ceil(word_bits as usize)
    }

    fn edge_off(&self, u: usize, s: usize) -> usize {
        (u * self.degree + s) * (self.ptr_bits as usize + 3)
    }

    fn vertex_off(&self, u: usize) -> usize {
        self.n * self.degree * (self.ptr_bits as usize + 3)
            + u * (self.counter_bits as usize + 1)
    }

    fn list_off(&self, i: usize) -> usize {
        self.n * self.degree * (self.ptr_bits as usize + 3)
            + self.n * (self.counter_bits as usize + 1)
            + i * self.ptr_bits as usize
    }

    fn len_off(&self) -> usize {
        self.list_off(self.n)
    }
}

/// Protocol state packed into words of `word_bits` bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompressedState {
    pub n: usize,
    pub degree: usize,
    pub word_bits: u32,
    pub bits: Vec<u64>,
}

impl CompressedState {
    pub fn layout(&self) -> StateLayout {
        StateLayout::new(self.n, self.degree)
    }

    pub fn word_count(&self) -> usize {
        self.layout().word_count(self.word_bits)
    }
}

/// Fully unpacked protocol state, used for round-trip checks and extraction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolState {
    pub pointers: Vec<u32>,
    pub request: Vec<bool>,
    pub reply: Vec<bool>,
    pub matched: Vec<bool>,
    pub counters: Vec<u32>,
    pub satisfied: Vec<bool>,
    pub unsatisfied: Vec<u32>,
}

#[inline]
fn get_bits(bits: &[u64], off: usize, width: u32) -> u64 {
    debug_assert!(width <= 64);
    let limb = off / 64;
    let shift = (off % 64) as u32;
    let mask = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
    let lo = bits[limb] >> shift;
    let hi = if shift + width > 64 { bits[limb + 1] << (64 - shift) } else { 0 };
    (lo | hi) & mask
}

#[inline]
fn set_bits(bits: &mut [u64], off: usize, width: u32, value: u64) {
    debug_assert!(width <= 64);
    let mask = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
    debug_assert_eq!(value & !mask, 0);
    let limb = off / 64;
    let shift = (off % 64) as u32;
    bits[limb] = (bits[limb] & !(mask << shift)) | (value << shift);
    if shift + width > 64 {
        let spill = 64 - shift;
        let hi_mask = mask >> spill;
        bits[limb + 1] = (bits[limb + 1] & !hi_mask) | (value >> spill);
    }
}

/// Pack the graph pointers and an initial protocol state for `marked`.
/// Fails when the state does not fit in `budget_words` words.
pub fn pack_state(
    g: &BipartiteMultigraph,
    marked: &MarkedVertexSet,
    word_bits: u32,
    budget_words: usize,
) -> Result<CompressedState> {
    let layout = StateLayout::new(g.n_per_side(), g.degree());
    let words = layout.word_count(word_bits);
    if words > budget_words {
        return Err(Error::StateOverflow { words, budget: budget_words, word_bits });
    }
    let limbs = (words * word_bits as usize).div_ceil(64);
    let mut bits = vec![0u64; limbs.max(1)];
    for u in 0..layout.n {
        for s in 0..layout.degree {
            let off = layout.edge_off(u, s);
            set_bits(&mut bits, off, layout.ptr_bits, g.slot(u, s) as u64);
        }
        let sat = !marked.contains(u);
        set_bits(
            &mut bits,
            layout.vertex_off(u) + layout.counter_bits as usize,
            1,
            sat as u64,
        );
    }
    let mut count = 0usize;
    for u in marked.iter() {
        set_bits(&mut bits, layout.list_off(count), layout.ptr_bits, u as u64);
        count += 1;
    }
    set_bits(&mut bits, layout.len_off(), layout.len_bits, count as u64);
    Ok(CompressedState { n: layout.n, degree: layout.degree, word_bits, bits })
}

/// Unpack into an explicit state. The pointer section must reproduce `g`'s
/// adjacency exactly or the packing is corrupt.
pub fn unpack_state(cs: &CompressedState, g: &BipartiteMultigraph) -> Result<ProtocolState> {
    let layout = cs.layout();
    let mut st = ProtocolState {
        pointers: Vec::with_capacity(layout.n * layout.degree),
        request: Vec::with_capacity(layout.n * layout.degree),
        reply: Vec::with_capacity(layout.n * layout.degree),
        matched: Vec::with_capacity(layout.n * layout.degree),
        counters: Vec::with_capacity(layout.n),
        satisfied: Vec::with_capacity(layout.n),
        unsatisfied: Vec::new(),
    };
    for u in 0..layout.n {
        for s in 0..layout.degree {
            let off = layout.edge_off(u, s);
            let ptr = get_bits(&cs.bits, off, layout.ptr_bits) as u32;
            if ptr as usize != g.slot(u, s) {
                return Err(Error::Internal(format!(
                    "unpack integrity failure at edge ({u},{s}): pointer {ptr}"
                )));
            }
            st.pointers.push(ptr);
            let p = layout.ptr_bits as usize;
            st.request.push(get_bits(&cs.bits, off + p, 1) == 1);
            st.reply.push(get_bits(&cs.bits, off + p + 1, 1) == 1);
            st.matched.push(get_bits(&cs.bits, off + p + 2, 1) == 1);
        }
        let voff = layout.vertex_off(u);
        st.counters.push(get_bits(&cs.bits, voff, layout.counter_bits) as u32);
        st.satisfied
            .push(get_bits(&cs.bits, voff + layout.counter_bits as usize, 1) == 1);
    }
    let len = get_bits(&cs.bits, layout.len_off(), layout.len_bits) as usize;
    for i in 0..len {
        st.unsatisfied
            .push(get_bits(&cs.bits, layout.list_off(i), layout.ptr_bits) as u32);
    }
    Ok(st)
}

/// Run the protocol on the packed representation. Per round the engine reads
/// every state word (fixed addresses), computes the round with register
/// bit operations, and writes every state word back; the round count is
/// preset to ceil(lg N) + slack, so the trace is input-independent.
pub fn run_matching_compressed(
    mem: &mut SimMemory,
    cs: &CompressedState,
    b_param: usize,
) -> Result<MatchingRun> {
    let layout = cs.layout();
    let words = layout.word_count(cs.word_bits);
    let region = mem.alloc_wide(words, cs.word_bits);
    let limbs_per_word = (cs.word_bits as usize).div_ceil(64);

    // Load the packed state into the wide region (traced writes).
    let mut scratch = cs.bits.clone();
    scratch.resize(words * limbs_per_word, 0);
    for w in 0..words {
        mem.write_wide(&region, w, &scratch[w * limbs_per_word..(w + 1) * limbs_per_word]);
    }

    let rounds = round_budget(layout.n);
    let quota = (b_param / 4) as u64;
    let mut history = Vec::with_capacity(rounds);
    let mut reg = vec![0u64; scratch.len()];
    for _round in 0..rounds {
        // Fixed pattern: read all state words into registers.
        for w in 0..words {
            let (lo, hi) = (w * limbs_per_word, (w + 1) * limbs_per_word);
            let mut buf = vec![0u64; limbs_per_word];
            mem.read_wide(&region, w, &mut buf);
            reg[lo..hi].copy_from_slice(&buf);
        }
        let len = get_bits(&reg, layout.len_off(), layout.len_bits) as usize;
        history.push(len);
        // Request phase over the unsatisfied list.
        for i in 0..len {
            let u = get_bits(&reg, layout.list_off(i), layout.ptr_bits) as usize;
            for s in 0..layout.degree {
                let off = layout.edge_off(u, s);
                let v = get_bits(&reg, off, layout.ptr_bits) as usize;
                set_bits(&mut reg, off + layout.ptr_bits as usize, 1, 1);
                let voff = layout.vertex_off(v);
                let c = get_bits(&reg, voff, layout.counter_bits);
                set_bits(&mut reg, voff, layout.counter_bits, c + 1);
            }
        }
        // Reply + selection phase; rebuild the unsatisfied list in place.
        let mut new_len = 0usize;
        for i in 0..len {
            let u = get_bits(&reg, layout.list_off(i), layout.ptr_bits) as usize;
            let mut positive = 0usize;
            for s in 0..layout.degree {
                let off = layout.edge_off(u, s);
                let v = get_bits(&reg, off, layout.ptr_bits) as usize;
                let c = get_bits(&reg, layout.vertex_off(v), layout.counter_bits);
                let pos = c <= quota;
                set_bits(&mut reg, off + layout.ptr_bits as usize + 1, 1, pos as u64);
                positive += pos as usize;
            }
            if positive >= b_param {
                let mut taken = 0usize;
                for s in 0..layout.degree {
                    let off = layout.edge_off(u, s);
                    let pos = get_bits(&reg, off + layout.ptr_bits as usize + 1, 1) == 1;
                    if pos && taken < b_param {
                        set_bits(&mut reg, off + layout.ptr_bits as usize + 2, 1, 1);
                        taken += 1;
                    }
                }
                let voff = layout.vertex_off(u);
                set_bits(&mut reg, voff + layout.counter_bits as usize, 1, 1);
            } else {
                set_bits(&mut reg, layout.list_off(new_len), layout.ptr_bits, u as u64);
                new_len += 1;
            }
        }
        set_bits(&mut reg, layout.len_off(), layout.len_bits, new_len as u64);
        // Clear counters and request flags for the next round.
        for v in 0..layout.n {
            set_bits(&mut reg, layout.vertex_off(v), layout.counter_bits, 0);
        }
        for e in 0..layout.n * layout.degree {
            let off = e * (layout.ptr_bits as usize + 3) + layout.ptr_bits as usize;
            set_bits(&mut reg, off, 1, 0);
        }
        // Fixed pattern: write all state words back.
        for w in 0..words {
            let (lo, hi) = (w * limbs_per_word, (w + 1) * limbs_per_word);
            let buf = reg[lo..hi].to_vec();
            mem.write_wide(&region, w, &buf);
        }
    }

    // Extract the matching from the final register image.
    let mut matching = Matching::empty(layout.n);
    for u in 0..layout.n {
        for s in 0..layout.degree {
            let off = layout.edge_off(u, s);
            if get_bits(&reg, off + layout.ptr_bits as usize + 2, 1) == 1 {
                let v = get_bits(&reg, off, layout.ptr_bits) as usize;
                matching.selected[u].push(s as u16);
                matching.right_load[v] += 1;
            }
        }
    }
    let complete = get_bits(&reg, layout.len_off(), layout.len_bits) == 0;
    mem.free_wide(region);
    Ok(MatchingRun { matching, rounds_used: rounds, unsatisfied_per_round: history, complete })
}
