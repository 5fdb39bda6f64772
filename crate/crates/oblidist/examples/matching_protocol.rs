//! The distributed-style matching protocol in its three execution shapes:
//! active-vertex (fast, not oblivious), full-scan (oblivious, fixed trace),
//! and compressed (whole state packed into O(1) wide words).
//!
//!     cargo run --release --example matching_protocol

use oblidist::graph::{family_cached, BaseId, ExpanderParams};
use oblidist::matching::{
    compressed::{pack_state, run_matching_compressed, StateLayout},
    find_matching_active, find_matching_full_scan, round_budget, verify_matching,
    MarkedVertexSet,
};
use oblidist::mem::SimMemory;
use oblidist::rng::SplitMix64;

fn main() {
    let n = 256;
    let b = 16; // largest power of 2 at most degree/2
    let params = ExpanderParams::new(0.55, BaseId::SeededPermSum { degree: 16, seed: 7 }, 1);
    let g = family_cached(&params, n).unwrap();
    let mut rng = SplitMix64::new(2024);
    let marked = MarkedVertexSet::from_indices(n, &rng.choose(n, n / 32));
    println!("graph N={n} degree {}; |L'| = {}", g.degree(), marked.count());

    let active = find_matching_active(&g, &marked, b).unwrap();
    println!(
        "active:     rounds {} unsatisfied-per-round {:?}",
        active.rounds_used, active.unsatisfied_per_round
    );

    let mut mem = SimMemory::new(0, 1024);
    mem.record_counting();
    let scan = find_matching_full_scan(&mut mem, &g, &marked, b, round_budget(n)).unwrap();
    println!(
        "full-scan:  preset rounds {} accesses {} complete {}",
        scan.rounds_used,
        mem.access_count(),
        scan.complete
    );

    let layout = StateLayout::new(n, g.degree());
    println!(
        "compressed: {} bits -> {} words of 4096",
        layout.total_bits,
        layout.word_count(4096)
    );
    let cs = pack_state(&g, &marked, 4096, 256).unwrap();
    let mut mem = SimMemory::new(0, 4096);
    mem.record_counting();
    let comp = run_matching_compressed(&mut mem, &cs, b).unwrap();
    println!("compressed: accesses {} complete {}", mem.access_count(), comp.complete);

    assert_eq!(active.matching, scan.matching);
    assert_eq!(active.matching, comp.matching);
    assert!(verify_matching(&g, &marked, b, &active.matching));
    println!("all three variants agree; (B, B/4) property verified");
}
