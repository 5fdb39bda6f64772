//! Block-level two-fold compaction engine.
//!
//! The main region's blocks of B atoms map onto left vertices of a
//! pseudorandom graph, the all-dummy auxiliary region's blocks onto right
//! vertices. Three fixed phases move every marked atom into the lower-half
//! blocks of the main region while the auxiliary region ends all-dummy:
//!
//! 1. every marked vertex (more than B/4 marked atoms) exports each of its
//!    marked atoms to a dummy slot of a matched neighbour, one per matched
//!    edge, so no right block receives more than B/4;
//! 2. for each lower-half index i, the marked atoms remaining in upper block
//!    i+N/2 and in right blocks i and i+N/2 (at most 3B/4) swap into
//!    non-marked slots of lower block i (at least 3B/4), real-unmarked
//!    targets first, then dummies;
//! 3. the phase-1 placements are walked in reverse, trading a dummy back to
//!    the neighbour that provided it whenever the exporting slot still holds
//!    one.
//!
//! A bounded number of cleanup rounds (phase 4) re-scans all neighbour pairs
//! and pulls stray real atoms out of the auxiliary region; the end state is
//! tracked in register mirrors and reported, never silently assumed. Every
//! pass enumerates a fixed pair sequence, so the trace depends only on the
//! geometry, the graph, and the configured round counts.

use super::{AtomView, BitVec, CompactionConfig, CopyScript, MarkSpec, PairSeq, Segment};
use crate::error::{Error, Result};
use crate::graph::BipartiteMultigraph;
use crate::matching::{
    compressed::pack_state, compressed::run_matching_compressed, find_matching_full_scan,
    round_budget, Matching, MarkedVertexSet,
};
use crate::mem::SimMemory;
use std::sync::Arc;

/// Which matching implementation feeds phase 1. Both are oblivious; the
/// compressed variant requires the packed state to fit the word budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatchingVariant {
    Compressed,
    FullScan,
}

#[derive(Clone, Copy, Debug)]
pub struct BlockReport {
    /// All marked vertices got their B matched edges.
    pub matching_complete: bool,
    /// Mirror bookkeeping confirms: marked atoms confined to the lower-half
    /// blocks of main, auxiliary region all-dummy.
    pub end_ok: bool,
}

/// Register-side mirror of atom state, maintained alongside the traced
/// swaps so phase predicates never trigger extra memory accesses.
struct Mirror {
    marked: Vec<bool>,
    dummy: Vec<bool>,
}

/// (main atom within block, aux atom within block) exported along each
/// (vertex, slot), if any.
type ExportPlan = Vec<Option<(u16, u16)>>;

enum Phase<'p> {
    Export(&'p ExportPlan),
    TradeBack(&'p ExportPlan),
    Cleanup,
}

#[allow(clippy::too_many_arguments)]
pub fn twofold_compact_block(
    mem: &mut SimMemory,
    main: AtomView,
    aux: AtomView,
    graph: &Arc<BipartiteMultigraph>,
    cfg: &CompactionConfig,
    spec: MarkSpec,
    variant: MatchingVariant,
    script: &mut CopyScript,
) -> Result<BlockReport> {
    let b = cfg.b_param();
    let n_atoms = main.n_atoms;
    let n_blocks = n_atoms / b;
    if aux.n_atoms != n_atoms || aux.atom_words != main.atom_words {
        return Err(Error::ShapeMismatch("aux region shape differs from main".into()));
    }
    if n_atoms % b != 0 || graph.n_per_side() != n_blocks || n_blocks < 2 {
        return Err(Error::ShapeMismatch(format!(
            "region of {n_atoms} atoms does not fit {} blocks of {b}",
            graph.n_per_side()
        )));
    }

    // Fixed-order traced scans of both regions.
    let (m_marked, m_dummy) = main.scan(mem, &spec);
    let (a_marked, a_dummy) = aux.scan(mem, &spec);
    let mut main_mirror = Mirror { marked: m_marked, dummy: m_dummy };
    let mut aux_mirror = Mirror { marked: a_marked, dummy: a_dummy };

    // A vertex is marked when its block holds more than B/4 marked atoms.
    let mut vertex_marked = vec![false; n_blocks];
    for v in 0..n_blocks {
        let count = (0..b).filter(|&a| main_mirror.marked[v * b + a]).count();
        vertex_marked[v] = count > b / 4;
    }
    let marked_set = MarkedVertexSet::from_indices(
        n_blocks,
        &(0..n_blocks).filter(|&v| vertex_marked[v]).collect::<Vec<_>>(),
    );

    let run = match variant {
        MatchingVariant::Compressed => {
            let cs = pack_state(graph, &marked_set, cfg.word_bits, cfg.state_budget_words)?;
            run_matching_compressed(mem, &cs, b)?
        }
        MatchingVariant::FullScan => {
            find_matching_full_scan(mem, graph, &marked_set, b, round_budget(n_blocks))?
        }
    };

    let plan1 = plan_exports(&vertex_marked, &main_mirror, &aux_mirror, &run.matching, graph, b);

    // Phase 1: fixed forward neighbour scan, exporting along matched slots.
    run_block_segment(
        mem, main, aux, graph, b, false,
        Phase::Export(&plan1),
        script, &mut main_mirror, &mut aux_mirror,
    );

    // Phase 2: gather marked atoms into the lower-half blocks.
    let plan2 = plan_gather(&main_mirror, &aux_mirror, b, n_blocks);
    run_gather_segment(mem, main, aux, b, &plan2, script, &mut main_mirror, &mut aux_mirror);

    // Phase 3: reverse the phase-1 walk; trade back where the exporting
    // slot still holds a dummy.
    run_block_segment(
        mem, main, aux, graph, b, true,
        Phase::TradeBack(&plan1),
        script, &mut main_mirror, &mut aux_mirror,
    );

    // Phase 4: stray recovery; real atoms left in aux return to dummy slots
    // of adjacent main blocks.
    for _ in 0..cfg.phase4_rounds {
        run_block_segment(
            mem, main, aux, graph, b, false,
            Phase::Cleanup,
            script, &mut main_mirror, &mut aux_mirror,
        );
    }

    let end_ok = end_state_ok(&main_mirror, &aux_mirror, n_atoms);
    Ok(BlockReport { matching_complete: run.complete, end_ok })
}

fn end_state_ok(main: &Mirror, aux: &Mirror, n_atoms: usize) -> bool {
    let lower = n_atoms / 2;
    let marks_ok = main.marked.iter().enumerate().all(|(i, &m)| !m || i < lower);
    let aux_ok = aux.dummy.iter().all(|&d| d) && aux.marked.iter().all(|&m| !m);
    marks_ok && aux_ok
}

/// Pair the j-th marked atom of each marked vertex with its j-th matched
/// slot; land on the lowest still-dummy unclaimed slot of the neighbour.
fn plan_exports(
    vertex_marked: &[bool],
    main: &Mirror,
    aux: &Mirror,
    matching: &Matching,
    graph: &BipartiteMultigraph,
    b: usize,
) -> ExportPlan {
    let n_blocks = vertex_marked.len();
    let d = graph.degree();
    let mut plan: ExportPlan = vec![None; n_blocks * d];
    let mut aux_taken = vec![false; aux.dummy.len()];
    for u in 0..n_blocks {
        if !vertex_marked[u] {
            continue;
        }
        let marked_atoms: Vec<usize> = (0..b).filter(|&a| main.marked[u * b + a]).collect();
        let slots = &matching.selected[u];
        for (j, &a) in marked_atoms.iter().enumerate() {
            let Some(&s) = slots.get(j) else { break };
            let v = graph.slot(u, s as usize);
            let t = (0..b).find(|&t| {
                let idx = v * b + t;
                aux.dummy[idx] && !aux_taken[idx]
            });
            if let Some(t) = t {
                aux_taken[v * b + t] = true;
                plan[u * d + s as usize] = Some((a as u16, t as u16));
            }
        }
    }
    plan
}

/// Per lower block and pass: source -> target-atom assignments, greedy in
/// fixed scan order, real-unmarked targets before dummy targets.
struct GatherPlan {
    assign: Vec<[Vec<Option<u16>>; 2]>,
}

fn plan_gather(main: &Mirror, aux: &Mirror, b: usize, n_blocks: usize) -> GatherPlan {
    let lower = n_blocks / 2;
    let mut assign = Vec::with_capacity(lower);
    for i in 0..lower {
        let mut src_marked = Vec::with_capacity(3 * b);
        for a in 0..b {
            src_marked.push(main.marked[(i + lower) * b + a]);
        }
        for a in 0..b {
            src_marked.push(aux.marked[i * b + a]);
        }
        for a in 0..b {
            src_marked.push(aux.marked[(i + lower) * b + a]);
        }
        let mut targets_real: Vec<u16> = (0..b)
            .filter(|&t| !main.marked[i * b + t] && !main.dummy[i * b + t])
            .map(|t| t as u16)
            .collect();
        let mut targets_dummy: Vec<u16> = (0..b)
            .filter(|&t| main.dummy[i * b + t])
            .map(|t| t as u16)
            .collect();
        targets_real.reverse(); // consume lowest-first via pop()
        targets_dummy.reverse();
        let mut plan_a = vec![None; 3 * b];
        let mut plan_b = vec![None; 3 * b];
        for (src, &m) in src_marked.iter().enumerate() {
            if !m {
                continue;
            }
            if let Some(t) = targets_real.pop() {
                plan_a[src] = Some(t);
            } else if let Some(t) = targets_dummy.pop() {
                plan_b[src] = Some(t);
            }
            // No target left: the atom stays; the end-state check flags it.
        }
        assign.push([plan_a, plan_b]);
    }
    GatherPlan { assign }
}

/// Execute one full Block pair enumeration under the phase's predicate,
/// recording one segment. Applied swaps update the mirrors.
#[allow(clippy::too_many_arguments)]
fn run_block_segment(
    mem: &mut SimMemory,
    main: AtomView,
    aux: AtomView,
    graph: &Arc<BipartiteMultigraph>,
    b: usize,
    reversed: bool,
    phase: Phase<'_>,
    script: &mut CopyScript,
    main_mirror: &mut Mirror,
    aux_mirror: &mut Mirror,
) {
    let n_blocks = main.n_atoms / b;
    let d = graph.degree();
    let aw = main.atom_words;
    let mut bits = BitVec::with_capacity(n_blocks * d * b * b * aw);

    macro_rules! visit {
        ($u:expr, $s:expr, $a:expr, $t:expr, $wrev:expr) => {{
            let (u, s, a, t) = ($u, $s, $a, $t);
            let v = graph.slot(u, s);
            let main_atom = u * b + a;
            let aux_atom = v * b + t;
            let applied = match &phase {
                Phase::Export(plan) => plan[u * d + s] == Some((a as u16, t as u16)),
                Phase::TradeBack(plan) => {
                    plan[u * d + s] == Some((a as u16, t as u16))
                        && main_mirror.dummy[main_atom]
                }
                Phase::Cleanup => main_mirror.dummy[main_atom] && !aux_mirror.dummy[aux_atom],
            };
            if $wrev {
                for w in (0..aw).rev() {
                    mem.cswap(main.word_addr(main_atom, w), aux.word_addr(aux_atom, w), applied);
                    bits.push(applied);
                }
            } else {
                for w in 0..aw {
                    mem.cswap(main.word_addr(main_atom, w), aux.word_addr(aux_atom, w), applied);
                    bits.push(applied);
                }
            }
            if applied {
                std::mem::swap(&mut main_mirror.marked[main_atom], &mut aux_mirror.marked[aux_atom]);
                std::mem::swap(&mut main_mirror.dummy[main_atom], &mut aux_mirror.dummy[aux_atom]);
            }
        }};
    }

    if reversed {
        for u in (0..n_blocks).rev() {
            for s in (0..d).rev() {
                for a in (0..b).rev() {
                    for t in (0..b).rev() {
                        visit!(u, s, a, t, true);
                    }
                }
            }
        }
    } else {
        for u in 0..n_blocks {
            for s in 0..d {
                for a in 0..b {
                    for t in 0..b {
                        visit!(u, s, a, t, false);
                    }
                }
            }
        }
    }

    script.segments.push(Segment {
        seq: PairSeq::Block {
            main,
            aux,
            graph: Arc::clone(graph),
            block_atoms: b,
            reversed,
        },
        applied: bits,
    });
}

/// Execute the phase-2 gather enumeration, recording one segment.
#[allow(clippy::too_many_arguments)]
fn run_gather_segment(
    mem: &mut SimMemory,
    main: AtomView,
    aux: AtomView,
    b: usize,
    plan: &GatherPlan,
    script: &mut CopyScript,
    main_mirror: &mut Mirror,
    aux_mirror: &mut Mirror,
) {
    let n_blocks = main.n_atoms / b;
    let lower = n_blocks / 2;
    let aw = main.atom_words;
    let mut bits = BitVec::with_capacity(lower * 2 * 3 * b * b * aw);
    for i in 0..lower {
        for pass in 0..2 {
            for src in 0..3 * b {
                for t in 0..b {
                    let applied = plan.assign[i][pass][src] == Some(t as u16);
                    let tgt_atom = i * b + t;
                    let (src_in_main, src_atom) = match src / b {
                        0 => (true, (i + lower) * b + src % b),
                        1 => (false, i * b + src % b),
                        _ => (false, (i + lower) * b + src % b),
                    };
                    for w in 0..aw {
                        let src_addr = if src_in_main {
                            main.word_addr(src_atom, w)
                        } else {
                            aux.word_addr(src_atom, w)
                        };
                        mem.cswap(src_addr, main.word_addr(tgt_atom, w), applied);
                        bits.push(applied);
                    }
                    if applied {
                        if src_in_main {
                            main_mirror.marked.swap(src_atom, tgt_atom);
                            main_mirror.dummy.swap(src_atom, tgt_atom);
                        } else {
                            std::mem::swap(
                                &mut aux_mirror.marked[src_atom],
                                &mut main_mirror.marked[tgt_atom],
                            );
                            std::mem::swap(
                                &mut aux_mirror.dummy[src_atom],
                                &mut main_mirror.dummy[tgt_atom],
                            );
                        }
                    }
                }
            }
        }
    }
    script.segments.push(Segment {
        seq: PairSeq::Gather { main, aux, block_atoms: b },
        applied: bits,
    });
}
