//! (B, B/4)-matchings on pseudorandom graphs via a sequentialized
//! distributed protocol.
//!
//! Per round, every unsatisfied marked vertex sends a request on each of its
//! slots; a right vertex receiving more than B/4 requests that round replies
//! negatively to all of them, otherwise positively to all; a vertex seeing at
//! least B positive replies selects the B lowest-numbered positively-replied
//! slots and becomes satisfied. Ties always break toward lower slot indices,
//! so the three execution variants (active-vertex, full-scan, compressed)
//! produce identical matchings.

pub mod compressed;

pub use compressed::{pack_state, run_matching_compressed, CompressedState};

use crate::error::{Error, Result};
use crate::graph::{BipartiteMultigraph, VertexSet};
use crate::mem::SimMemory;

/// The set L' of marked left vertices the matching must cover.
pub type MarkedVertexSet = VertexSet;

/// Edge subset: per left vertex the selected slot indices, plus derived
/// per-right-vertex load counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    pub selected: Vec<Vec<u16>>,
    pub right_load: Vec<u32>,
}

impl Matching {
    fn empty(n: usize) -> Self {
        Matching { selected: vec![Vec::new(); n], right_load: vec![0; n] }
    }

    pub fn edge_count(&self) -> usize {
        self.selected.iter().map(|s| s.len()).sum()
    }
}

/// Outcome of a protocol run, with per-round telemetry.
#[derive(Clone, Debug)]
pub struct MatchingRun {
    pub matching: Matching,
    pub rounds_used: usize,
    /// Unsatisfied-vertex count at the START of each executed round.
    pub unsatisfied_per_round: Vec<usize>,
    /// False when fixed-round variants ran out of rounds before everyone
    /// was satisfied (preconditions rule this out; see the caller).
    pub complete: bool,
}

/// Rounds allowed beyond ceil(lg N).
pub const ROUND_SLACK: usize = 2;

pub fn round_budget(n: usize) -> usize {
    (n.max(2)).ilog2() as usize + ((n & (n - 1)) != 0) as usize + ROUND_SLACK
}

/// One synchronized protocol round over the given unsatisfied set.
/// Shared by all variants so their semantics cannot drift apart.
fn protocol_round(
    g: &BipartiteMultigraph,
    unsatisfied: &[u32],
    b_param: usize,
    requests: &mut [u32],
    matching: &mut Matching,
) -> Vec<u32> {
    // Request phase.
    for &u in unsatisfied {
        for &v in g.adj(u as usize) {
            requests[v as usize] += 1;
        }
    }
    // Reply + selection phase. A right vertex is "heavy" this round when it
    // received more than B/4 requests, and replies negatively to all.
    let quota = (b_param / 4) as u32;
    let mut still = Vec::new();
    for &u in unsatisfied {
        let mut positive = 0usize;
        for &v in g.adj(u as usize) {
            positive += (requests[v as usize] <= quota) as usize;
        }
        if positive >= b_param {
            let sel = &mut matching.selected[u as usize];
            for (s, &v) in g.adj(u as usize).iter().enumerate() {
                if requests[v as usize] <= quota {
                    sel.push(s as u16);
                    matching.right_load[v as usize] += 1;
                    if sel.len() == b_param {
                        break;
                    }
                }
            }
        } else {
            still.push(u);
        }
    }
    // Clear touched counters for the next round.
    for &u in unsatisfied {
        for &v in g.adj(u as usize) {
            requests[v as usize] = 0;
        }
    }
    still
}

/// Active-vertex variant: each round touches only unsatisfied vertices and
/// their neighbours. Total work O(|L'| d) summed over rounds when the
/// unsatisfied count decays geometrically. NOT oblivious: the set of
/// vertices visited after round one depends on the input.
pub fn find_matching_active(
    g: &BipartiteMultigraph,
    marked: &MarkedVertexSet,
    b_param: usize,
) -> Result<MatchingRun> {
    let n = g.n_per_side();
    let mut matching = Matching::empty(n);
    let mut unsatisfied: Vec<u32> = marked.iter().map(|u| u as u32).collect();
    let mut requests = vec![0u32; n];
    let budget = round_budget(n);
    let mut history = Vec::new();
    let mut rounds = 0;
    while !unsatisfied.is_empty() {
        if rounds == budget {
            return Err(Error::ProtocolStall { unsatisfied: unsatisfied.len(), rounds });
        }
        history.push(unsatisfied.len());
        unsatisfied = protocol_round(g, &unsatisfied, b_param, &mut requests, &mut matching);
        rounds += 1;
    }
    Ok(MatchingRun { matching, rounds_used: rounds, unsatisfied_per_round: history, complete: true })
}

/// Full-scan variant: every one of the preset `rounds` rounds touches all N
/// left and all N right vertices in fixed index order, through simulated
/// memory, so the trace depends only on `(N, d, B, rounds)`. Cost
/// Theta(N log N). Output equals the active variant's.
///
/// Protocol state lives in a scratch region of `mem`:
/// `[satisfied: N][request counters: N][matched slot bitmaps: N]`.
pub fn find_matching_full_scan(
    mem: &mut SimMemory,
    g: &BipartiteMultigraph,
    marked: &MarkedVertexSet,
    b_param: usize,
    rounds: usize,
) -> Result<MatchingRun> {
    let n = g.n_per_side();
    let d = g.degree();
    assert!(d <= 64, "full-scan matched-slot bitmap holds at most 64 slots");
    let base = mem.extend_cells(3 * n);
    let sat_base = base;
    let req_base = base + n;
    let slots_base = base + 2 * n;

    // Fixed-trace initialization: mark-dependent values, fixed addresses.
    for u in 0..n {
        mem.update(sat_base + u, |w| w.payload = !marked.contains(u) as u64);
        mem.update(req_base + u, |w| w.payload = 0);
        mem.update(slots_base + u, |w| w.payload = 0);
    }

    let quota = (b_param / 4) as u64;
    let mut matching = Matching::empty(n);
    let mut history = Vec::new();
    let mut complete = false;
    for _round in 0..rounds {
        let mut unsat_now = 0usize;
        // Request phase: always read the sender flag and touch every
        // neighbour counter; the increment is 0 for satisfied vertices.
        for u in 0..n {
            let sat = mem.read(sat_base + u).payload == 1;
            unsat_now += !sat as usize;
            for &v in g.adj(u) {
                let inc = !sat as u64;
                mem.update(req_base + v as usize, |w| w.payload += inc);
            }
        }
        history.push(unsat_now);
        if unsat_now == 0 {
            complete = true;
        }
        // Selection phase: fixed scan over all vertices and slots.
        for u in 0..n {
            let sat = mem.read(sat_base + u).payload == 1;
            let mut positive = 0usize;
            for &v in g.adj(u) {
                let reqs = mem.read(req_base + v as usize).payload;
                positive += (reqs <= quota) as usize;
            }
            let select = !sat && positive >= b_param;
            let mut bitmap = mem.read(slots_base + u).payload;
            let mut taken = 0usize;
            for (s, &v) in g.adj(u).iter().enumerate() {
                let reqs = mem.read(req_base + v as usize).payload;
                if select && reqs <= quota && taken < b_param {
                    bitmap |= 1 << s;
                    taken += 1;
                }
            }
            mem.update(slots_base + u, |w| w.payload = bitmap);
            if select {
                mem.update(sat_base + u, |w| w.payload = 1);
            } else {
                mem.update(sat_base + u, |w| w.payload = sat as u64);
            }
        }
        // Clear counters with a fixed pass.
        for v in 0..n {
            mem.update(req_base + v, |w| w.payload = 0);
        }
    }
    // Read the result out of memory (fixed scan), then release the scratch.
    let mut all_satisfied = true;
    for u in 0..n {
        let bitmap = mem.read(slots_base + u).payload;
        for s in 0..d {
            if bitmap >> s & 1 == 1 {
                matching.selected[u].push(s as u16);
                matching.right_load[g.slot(u, s)] += 1;
            }
        }
        all_satisfied &= mem.read(sat_base + u).payload == 1;
    }
    mem.truncate_cells(base);
    Ok(MatchingRun {
        matching,
        rounds_used: rounds,
        unsatisfied_per_round: history,
        complete: complete || all_satisfied,
    })
}

/// Def.-3 check: every marked vertex has at least `b_param` selected slots,
/// every right vertex carries at most `b_param/4`.
pub fn verify_matching(
    g: &BipartiteMultigraph,
    marked: &MarkedVertexSet,
    b_param: usize,
    m: &Matching,
) -> bool {
    if m.selected.len() != g.n_per_side() {
        return false;
    }
    let mut loads = vec![0u32; g.n_per_side()];
    for (u, sel) in m.selected.iter().enumerate() {
        for &s in sel {
            if (s as usize) >= g.degree() {
                return false;
            }
            loads[g.slot(u, s as usize)] += 1;
        }
    }
    if loads != m.right_load {
        return false;
    }
    for u in marked.iter() {
        if m.selected[u].len() < b_param {
            return false;
        }
    }
    loads.iter().all(|&l| l <= (b_param / 4) as u32)
}
